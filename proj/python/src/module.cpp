/*
 * Copyright 2026 The semslice Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "semslice/cli.hpp"
#include "semslice/corpus.hpp"
#include "semslice/error.hpp"
#include "semslice/eval.hpp"
#include "semslice/io.hpp"
#include "semslice/promptgen.hpp"
#include "semslice/runconfig.hpp"
#include "semslice/sampler.hpp"
#include "semslice/slicer.hpp"
#include "semslice/version.hpp"

namespace py = pybind11;
using namespace semslice;

namespace {

// JSON crosses the boundary as text; the Python wrapper decodes it.
using Pair = std::pair<std::string, std::string>;

Label ParseYesNo(const std::string& s) {
  if (s == "yes") return Label::kYes;
  if (s == "no") return Label::kNo;
  throw ConfigError("label must be 'yes' or 'no', got '" + s + "'");
}

std::vector<FewShotExample> ToExamples(const std::vector<Pair>& pairs) {
  std::vector<FewShotExample> out;
  for (const auto& [text, label] : pairs) {
    out.push_back({text, ParseYesNo(label), ExampleOrigin::kProvided,
                   ExampleLabeler::kNone, std::nullopt});
  }
  return out;
}

Dataset Universe(const std::vector<std::string>& ids) {
  std::vector<Example> rows;
  for (const auto& id : ids) {
    Example ex;
    ex.id = id;
    ex.text = id;
    rows.push_back(std::move(ex));
  }
  return Dataset("universe", std::move(rows), {});
}

std::vector<EmbeddingVector> ToPoints(const std::vector<std::vector<double>>& points) {
  std::vector<EmbeddingVector> out;
  for (const auto& p : points) out.push_back({p});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "semslice core bindings";

  auto error = py::register_exception<Error>(m, "SemsliceError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DatasetError>(m, "DatasetError", error.ptr());
  py::register_exception<EvalError>(m, "EvalError", error.ptr());
  py::register_exception<BackendError>(m, "BackendError", error.ptr());
  py::register_exception<SynthesisError>(m, "SynthesisError", error.ptr());

  m.def("version", [] { return std::string(GitDescribe()); });

  m.def("parse_label", [](const std::string& raw) {
    const auto p = ParseLabel(raw);
    return std::make_pair(std::string(ToString(p.verdict)), std::string(ToString(p.status)));
  }, py::arg("raw"));

  m.def("template_instruction", [](const std::string& name) {
    return GenerateInstruction({name, std::nullopt}, InstructionSource::kTemplate, nullptr)
        .question;
  }, py::arg("name"));

  m.def("render_labeling_prompt",
        [](const std::string& question, const std::vector<Pair>& examples,
           const std::string& text) {
          return RenderLabelingPrompt(question, ToExamples(examples), text);
        },
        py::arg("question"), py::arg("examples"), py::arg("text"));

  m.def("render_synthesis_prompt",
        [](const std::string& question, const std::vector<Pair>& examples, std::size_t n,
           const std::string& label) {
          return RenderSynthesisPrompt(question, ToExamples(examples), n, ParseYesNo(label));
        },
        py::arg("question"), py::arg("examples"), py::arg("n"), py::arg("label"));

  m.def("preset_names", [] { return PresetNames(); });
  m.def("preset_json", [](const std::string& name) {
    return ConfigToJson(NamedPreset(name)).dump();
  }, py::arg("name"));

  m.def("fisher_exact_two_sided",
        [](std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
          return FisherExactTwoSided({a, b, c, d});
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"));

  m.def("slice_prf",
        [](const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
           const std::vector<std::string>& universe) {
          const Dataset u = Universe(universe);
          const Slice p{"s", predicted, SliceSource::kPredicted, ""};
          const Slice g{"s", gold, SliceSource::kGold, ""};
          const PRF r = SlicePrf(p, g, u);
          py::dict out;
          out["precision"] = r.precision;
          out["recall"] = r.recall;
          out["f1"] = r.f1;
          out["tp"] = r.tp;
          out["fp"] = r.fp;
          out["fn"] = r.fn;
          return out;
        },
        py::arg("predicted"), py::arg("gold"), py::arg("universe"));

  m.def("kmeans",
        [](const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
           int max_iterations) {
          const auto r = KMeans(ToPoints(points), k, seed, max_iterations);
          py::dict out;
          out["assignments"] = r.assignments;
          out["centroids"] = r.centroids;
          out["inertia"] = r.inertia;
          out["inertia_history"] = r.inertia_history;
          out["iterations"] = r.iterations;
          return out;
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0,
        py::arg("max_iterations") = 100);

  m.def("hash_embed",
        [](const std::vector<std::string>& texts, std::size_t dim, int n) {
          HashNgramEmbedder e(dim, n);
          std::vector<std::vector<double>> out;
          for (auto& v : e.Embed(texts)) out.push_back(std::move(v.values));
          return out;
        },
        py::arg("texts"), py::arg("dim") = HashNgramEmbedder::kDefaultDim, py::arg("n") = 3);

  m.def("sample_diverse_indices",
        [](const std::vector<std::string>& texts, std::size_t n, std::uint64_t seed) {
          HashNgramEmbedder e;
          const auto emb = e.Embed(texts);
          return SelectDiverseIndices(emb, n, seed);
        },
        py::arg("texts"), py::arg("n"), py::arg("seed") = 0);

  m.def("sample_random_indices", &SampleRandomIndices, py::arg("population"), py::arg("n"),
        py::arg("seed") = 0);

  m.def("evaluate_json",
        [](const std::string& data_path, const std::vector<std::string>& slice_paths,
           double alpha) {
          const Dataset d = LoadDataset(data_path);
          std::vector<Slice> slices;
          for (const auto& p : slice_paths) {
            slices.push_back(SliceFromJson(nlohmann::json::parse(ReadFile(p))));
          }
          return ReportToJson(Evaluate(d, slices, {.alpha = alpha})).dump();
        },
        py::arg("data_path"), py::arg("slice_paths") = std::vector<std::string>{},
        py::arg("alpha") = 0.05);

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release release;
            code = cli::RunCli(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
