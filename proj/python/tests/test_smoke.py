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

import json
from fractions import Fraction
from math import comb
from pathlib import Path

import pytest

import semslice

ROOT = Path(__file__).resolve().parents[2]
MOCK = ROOT / "tests" / "fixtures" / "keyword_mock.json"
KEYWORDS = ("mosque", "ramadan", "imam", "quran")


def test_template_instruction():
    assert semslice.template_instruction("Muslim") == "Is the text related to Muslim?"
    with pytest.raises(semslice.ConfigError):
        semslice.template_instruction("")


def test_parse_label():
    assert semslice.parse_label("yes") == ("in", "clean")
    assert semslice.parse_label(" No.") == ("out", "normalized")
    assert semslice.parse_label("maybe") == ("out", "unparseable")


def test_render_matches_golden():
    golden = (ROOT / "tests" / "golden" / "labeling_zero_shot.txt").read_text()
    query = "The mosque opened its doors for an interfaith iftar dinner."
    q = semslice.template_instruction("Muslim")
    assert semslice.render_labeling_prompt(q, [], query) == golden
    shot = semslice.render_labeling_prompt(q, [("a", "yes")], "b")
    assert "Text: a\nAnswer: yes" in shot


def test_presets():
    names = semslice.preset_names()
    assert len(names) == 9
    assert semslice.preset("M_fs-syn")["input_source"] == "provided+synthesized"
    with pytest.raises(semslice.ConfigError):
        semslice.preset("M_unknown")


def fisher_reference(a, b, c, d):
    r1, r2, c1, n = a + b, c + d, a + c, a + b + c + d
    weight = lambda x: comb(r1, x) * comb(r2, c1 - x)
    observed = weight(a)
    tail = sum(weight(x) for x in range(0, min(r1, c1) + 1) if weight(x) <= observed)
    return float(Fraction(tail, comb(n, c1)))


@pytest.mark.parametrize("table", [(8, 2, 1, 5), (3, 1, 1, 3), (0, 5, 5, 0), (60, 40, 5310, 590)])
def test_fisher(table):
    got = semslice.fisher_exact_two_sided(*table)
    assert got == pytest.approx(fisher_reference(*table), rel=1e-9, abs=1e-12)


def test_slice_prf():
    universe = [f"u{i}" for i in range(12)]
    r = semslice.slice_prf(universe[4:12], universe[0:10], universe)
    assert (r["tp"], r["fp"], r["fn"]) == (6, 2, 4)
    assert r["f1"] == pytest.approx(2 / 3)


def test_kmeans_and_sampling():
    points = [[0.0, 0.0], [0.1, 0.0], [10.0, 10.0], [10.1, 10.0]]
    r = semslice.kmeans(points, 2, seed=1)
    assert r["assignments"][0] == r["assignments"][1] != r["assignments"][2]
    texts = ["apple banana cherry", "apple grape melon", "engine piston valve", "axle rotor valve"]
    picked = semslice.sample_diverse_indices(texts, 2, seed=0)
    assert len(picked) == 2 and picked[0] < 2 <= picked[1]
    assert semslice.sample_random_indices(10, 3, 5) == semslice.sample_random_indices(10, 3, 5)


def test_cli_pipeline(tmp_path):
    rows = []
    for i in range(40):
        topic = "the mosque" if i % 4 == 0 else "the harbor"
        rows.append({"id": f"r{i}", "text": f"we visited {topic} on day {i}."})
    data = tmp_path / "data.jsonl"
    data.write_text("".join(json.dumps(r) + "\n" for r in rows))
    mock = ["--backend", "mock", "--mock-script", str(MOCK)]
    code, out, err = semslice.run_cli(
        mock + ["prompt", "--criterion", "religion", "--data", str(data), "--out", str(tmp_path / "p")]
    )
    assert code == 0, err
    code, out, err = semslice.run_cli(
        mock + ["slice", "--prompt", str(tmp_path / "p" / "prompt.json"), "--data", str(data),
                "--out", str(tmp_path / "s")]
    )
    assert code == 0, err
    members = json.loads((tmp_path / "s" / "slice.json").read_text())["member_ids"]
    assert members == [r["id"] for r in rows if any(k in r["text"] for k in KEYWORDS)]
    assert semslice.run_cli(["prompt"])[0] == 2

    report = semslice.evaluate(data, [tmp_path / "s" / "slice.json"])
    assert report["slices"][0]["size"] == len(members)
