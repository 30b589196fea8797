# Copyright 2026 The semslice Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Slice datasets by natural-language criteria using language models."""

import json

from . import _core
from ._core import (
    BackendError,
    ConfigError,
    DatasetError,
    EvalError,
    SemsliceError,
    SynthesisError,
    fisher_exact_two_sided,
    hash_embed,
    kmeans,
    parse_label,
    preset_names,
    render_labeling_prompt,
    render_synthesis_prompt,
    run_cli,
    sample_diverse_indices,
    sample_random_indices,
    slice_prf,
    template_instruction,
)

__version__ = _core.version()


def preset(name):
    """Full configuration of a named preset, as a dict."""
    return json.loads(_core.preset_json(name))


def presets():
    return {name: preset(name) for name in preset_names()}


def evaluate(data_path, slice_paths=(), alpha=0.05):
    """Evaluation report for a dataset and predicted slice files, as a dict."""
    return json.loads(_core.evaluate_json(str(data_path), [str(p) for p in slice_paths], alpha))


__all__ = [
    "BackendError",
    "ConfigError",
    "DatasetError",
    "EvalError",
    "SemsliceError",
    "SynthesisError",
    "evaluate",
    "fisher_exact_two_sided",
    "hash_embed",
    "kmeans",
    "parse_label",
    "preset",
    "preset_names",
    "presets",
    "render_labeling_prompt",
    "render_synthesis_prompt",
    "run_cli",
    "sample_diverse_indices",
    "sample_random_indices",
    "slice_prf",
    "template_instruction",
]
