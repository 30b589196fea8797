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

// Prints one PASS/FAIL line per acceptance criterion. Exit status is the
// number of failures (0 when all pass).

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "semslice/cli.hpp"
#include "semslice/eval.hpp"
#include "semslice/io.hpp"
#include "semslice/promptgen.hpp"
#include "semslice/runconfig.hpp"
#include "semslice/sampler.hpp"
#include "support.hpp"

namespace {

using namespace semslice;
namespace fs = std::filesystem;
namespace t = semslice::testing;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failure; later ones only bump the count.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (first_.empty()) first_ = what;
  }
  Outcome Done(std::string summary) const {
    if (failures_ == 0) return {true, std::move(summary)};
    return {false, std::to_string(failures_) + " failure(s); first: " + first_};
  }

 private:
  int failures_ = 0;
  std::string first_;
};

using Clock = std::chrono::steady_clock;
double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome TemplateInstructions() {
  const std::vector<std::string> names{
      "Muslim",       "Christian",         "Jewish",     "Hispanic / Latinx",
      "Black",        "Asian",             "LGBTQ+",     "women",
      "men",          "elderly people",    "veterans",   "people with a disability",
      "immigrants",   "sports",            "politics",   "{text}",
      "C++ & Rust",   "caf\xc3\xa9 owners", "50% off",    "  padded  "};
  Checker c;
  for (const auto& name : names) {
    const auto got =
        GenerateInstruction({name, std::nullopt}, InstructionSource::kTemplate, nullptr)
            .question;
    c.Expect(got == "Is the text related to " + name + "?", "'" + name + "' -> '" + got + "'");
  }
  return c.Done(std::to_string(names.size()) + " names, byte-equal");
}

Outcome PromptRendering() {
  const auto start = Clock::now();
  const auto ex = [](std::string text, Label label) {
    return FewShotExample{std::move(text), label, ExampleOrigin::kProvided,
                          ExampleLabeler::kTeacher, std::nullopt};
  };
  const std::vector<FewShotExample> eight{
      ex("Ramadan fasting ends at sunset.", Label::kYes),
      ex("The bus was late again this morning.", Label::kNo),
      ex("She read the Quran with her grandmother.", Label::kYes),
      ex("Our team lost the final in overtime.", Label::kNo),
      ex("The imam gave a short sermon on patience.", Label::kYes),
      ex("I baked bread with too much salt.", Label::kNo),
      ex("Eid prayers filled the park at dawn.", Label::kYes),
      ex("The stock market dipped on Friday.", Label::kNo)};
  std::vector<FewShotExample> noes;
  for (const auto& e : eight) {
    if (e.label == Label::kNo) noes.push_back(e);
  }
  const std::string q = TemplateInstruction("Muslim");
  const std::string query = "The mosque opened its doors for an interfaith iftar dinner.";
  const auto golden = [](const char* name) { return ReadFile(t::GoldenPath(name)); };
  Checker c;
  c.Expect(RenderLabelingPrompt(q, {}, query) == golden("labeling_zero_shot.txt"),
           "0 examples");
  c.Expect(RenderLabelingPrompt(q, eight, query) == golden("labeling_eight_shot.txt"),
           "8 examples");
  c.Expect(RenderSynthesisPrompt(q, noes, 4, Label::kYes) == golden("synthesis_four_yes.txt"),
           "synthesis with examples");
  c.Expect(RenderSynthesisPrompt(q, {}, 2, Label::kNo) == golden("synthesis_zero_shot.txt"),
           "synthesis without examples");
  const double secs = SecondsSince(start);
  c.Expect(secs < 1.0, "took " + std::to_string(secs) + "s");
  return c.Done(fmt::format("4 goldens byte-equal in {:.3f}s", secs));
}

Outcome MockPipeline() {
  const auto start = Clock::now();
  t::TempDir tmp;
  const Dataset d = t::KeywordCorpus(200, 2024);
  WriteDataset(d, tmp / "data.jsonl", DataFormat::kJsonl);
  Slice rule{"keyword", {}, SliceSource::kGold, ""};
  for (const auto& e : d.examples()) {
    if (t::KeywordRule(e.text)) rule.member_ids.push_back(e.id);
  }
  const std::vector<std::string> mock{"--backend", "mock", "--mock-script",
                                      t::FixturePath("keyword_mock.json").string()};
  const auto run = [&](std::vector<std::string> rest) {
    std::vector<std::string> args = mock;
    args.insert(args.end(), rest.begin(), rest.end());
    std::ostringstream out, err;
    const int code = cli::RunCli(args, out, err);
    return std::make_pair(code, err.str());
  };

  Checker c;
  const auto [pcode, perr] = run({"prompt", "--criterion", "keyword", "--data",
                                  (tmp / "data.jsonl").string(), "--out",
                                  (tmp / "prompt").string()});
  c.Expect(pcode == 0, "prompt exited " + std::to_string(pcode) + ": " + perr);
  std::vector<std::vector<std::string>> members;
  double f1_min = 1.0;
  for (const char* par : {"1", "8"}) {
    const fs::path out = tmp / (std::string("slice-") + par);
    const auto [code, err] = run({"--parallelism", par, "slice", "--prompt",
                                  (tmp / "prompt" / "prompt.json").string(), "--data",
                                  (tmp / "data.jsonl").string(), "--out", out.string()});
    c.Expect(code == 0, std::string("slice -p ") + par + " exited " +
                            std::to_string(code) + ": " + err);
    if (code != 0) continue;
    const Slice s = SliceFromJson(nlohmann::json::parse(ReadFile(out / "slice.json")));
    const PRF prf = SlicePrf(s, rule, d);
    f1_min = std::min(f1_min, prf.f1);
    c.Expect(prf.f1 == 1.0, std::string("F1 at parallelism ") + par + " is " +
                                std::to_string(prf.f1));
    members.push_back(s.member_ids);
  }
  c.Expect(members.size() == 2 && members[0] == members[1], "parallelism changed the slice");
  const double secs = SecondsSince(start);
  c.Expect(secs < 10.0, "took " + std::to_string(secs) + "s");
  return c.Done(fmt::format("{} rows, {} in slice, F1 {:.1f} at parallelism 1 and 8, {:.2f}s",
                            d.size(), rule.member_ids.size(), f1_min, secs));
}

Outcome FisherOracleEquivalence() {
  const auto start = Clock::now();
  Checker c;
  double worst = 0.0;
  std::size_t tables = 0;
  const auto compare = [&](std::int64_t a, std::int64_t b, std::int64_t cc, std::int64_t d) {
    const double got = FisherExactTwoSided({a, b, cc, d});
    const double want = t::FisherOracle(a, b, cc, d);
    const double diff = std::abs(got - want);
    worst = std::max(worst, diff);
    ++tables;
    c.Expect(diff <= 1e-9, fmt::format("[[{},{}],[{},{}]]: {} vs {}", a, b, cc, d, got, want));
  };
  for (std::int64_t a = 0; a <= 12; ++a) {
    for (std::int64_t b = 0; a + b <= 12; ++b) {
      for (std::int64_t cc = 0; a + cc <= 12; ++cc) {
        for (std::int64_t d = 0; cc + d <= 12 && b + d <= 12; ++d) compare(a, b, cc, d);
      }
    }
  }
  const std::size_t exhaustive = tables;
  std::mt19937_64 rng(20240607);
  std::uniform_int_distribution<std::int64_t> entry(0, 200);
  for (int i = 0; i < 1000; ++i) compare(entry(rng), entry(rng), entry(rng), entry(rng));
  const double secs = SecondsSince(start);
  c.Expect(secs < 60.0, "took " + std::to_string(secs) + "s");
  return c.Done(fmt::format("{} exhaustive + 1000 random tables, max |diff| {:.2e}, {:.2f}s",
                            exhaustive, worst, secs));
}

Outcome UnderperformanceDetection() {
  Checker c;
  const Dataset planted = t::PlantedOutcomeDataset(6000, 5370, 100, 60);
  const Slice bad = GoldSlice(planted, "planted");
  const auto r = DetectUnderperforming(std::span(&bad, 1), planted, 0.05);
  c.Expect(r.size() == 1, "no result for the planted slice");
  double p = 0.0, oracle = t::FisherOracle(60, 40, 5310, 590);
  if (r.size() == 1) {
    const auto& tab = r[0].table;
    c.Expect(tab.a == 60 && tab.b == 40 && tab.c == 5310 && tab.d == 590,
             fmt::format("table [[{},{}],[{},{}]]", tab.a, tab.b, tab.c, tab.d));
    p = r[0].p_value;
    c.Expect(std::abs(p - oracle) <= 1e-9 * oracle, fmt::format("p {} vs oracle {}", p, oracle));
    c.Expect(r[0].flagged, "60% slice not flagged");
  }
  const Dataset control = t::PlantedOutcomeDataset(6000, 5400, 100, 90);
  const Slice fine = GoldSlice(control, "planted");
  const auto rc = DetectUnderperforming(std::span(&fine, 1), control, 0.05);
  c.Expect(rc.size() == 1 && !rc[0].flagged, "90% slice flagged");
  return c.Done(fmt::format("60% slice flagged (p {:.3e}, oracle {:.3e}); 90% slice p {:.3f}",
                            p, oracle, rc.empty() ? 0.0 : rc[0].p_value));
}

std::vector<EmbeddingVector> Gaussian(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<EmbeddingVector> out(n);
  for (auto& p : out) {
    p.values.resize(dim);
    for (auto& v : p.values) v = normal(rng);
  }
  return out;
}

Outcome KMeansProperties() {
  Checker c;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto pts = Gaussian(60 + seed % 40, 2 + seed % 6, seed);
    const auto r = KMeans(pts, 2 + seed % 7, seed);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      c.Expect(r.inertia_history[i] <= r.inertia_history[i - 1] * (1 + 1e-12),
               fmt::format("seed {} iteration {}", seed, i));
    }
  }
  // Two 2-D blobs, 20 points each, far apart relative to their spread.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> spread(0.0, 0.1);
    std::vector<EmbeddingVector> blobs;
    for (int i = 0; i < 40; ++i) {
      const double cx = i < 20 ? 0.0 : 10.0;
      blobs.push_back({{cx + spread(rng), cx + spread(rng)}});
    }
    const auto r = KMeans(blobs, 2, seed);
    bool split = true;
    for (std::size_t i = 0; i < blobs.size(); ++i) {
      split &= (r.assignments[i] == r.assignments[0]) == (i < 20);
      // Brute-force nearest centroid agrees with the assignment.
      const double d0 = SquaredDistance(blobs[i].values, r.centroids[0]);
      const double d1 = SquaredDistance(blobs[i].values, r.centroids[1]);
      split &= r.assignments[i] == (d1 < d0 ? 1u : 0u);
    }
    c.Expect(split, fmt::format("blobs not split with seed {}", seed));
  }
  const auto pts = Gaussian(80, 5, 77);
  const auto a = KMeans(pts, 4, 9);
  const auto b = KMeans(pts, 4, 9);
  c.Expect(a.assignments == b.assignments && a.inertia == b.inertia, "not deterministic");
  return c.Done("100 instances monotone, blobs split on 10 seeds, deterministic");
}

Outcome DiversitySampling() {
  HashNgramEmbedder embedder;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset d = t::TwoVocabularyCorpus(10, seed);
    const auto picked = SampleDiverse(d, 2, seed, embedder);
    if (picked.size() == 2 && picked[0].extra["vocab"] != picked[1].extra["vocab"]) ++hits;
  }
  Checker c;
  c.Expect(hits >= 95, std::to_string(hits) + "/100");
  return c.Done(std::to_string(hits) + "/100 trials cover both vocabularies");
}

Outcome PrfCorrectness() {
  std::vector<Example> rows;
  for (int i = 0; i < 80; ++i) {
    rows.push_back({"x" + std::to_string(i), "t", std::nullopt, std::nullopt, {},
                    nlohmann::ordered_json::object()});
  }
  const Dataset u("u", std::move(rows), {});
  std::mt19937_64 rng(99);
  Checker c;
  for (int trial = 0; trial < 1000; ++trial) {
    Slice p{"p", {}, SliceSource::kPredicted, "c"};
    Slice g{"p", {}, SliceSource::kGold, ""};
    std::set<std::string> ps, gs;
    const auto dp = rng() % 100, dg = rng() % 100;
    for (int i = 0; i < 80; ++i) {
      const std::string id = "x" + std::to_string(i);
      if (rng() % 100 < dp) { p.member_ids.push_back(id); ps.insert(id); }
      if (rng() % 100 < dg) { g.member_ids.push_back(id); gs.insert(id); }
    }
    const PRF got = SlicePrf(p, g, u);
    const auto want = t::PrfOracle(ps, gs);
    c.Expect(got.tp == want.tp && got.fp == want.fp && got.fn == want.fn &&
                 got.precision == want.precision && got.recall == want.recall &&
                 got.f1 == want.f1,
             "trial " + std::to_string(trial));
  }
  return c.Done("1000 random pairs equal the set oracle exactly");
}

Outcome CostArithmetic() {
  Checker c;
  const CostModel prices = LoadCostModel(t::FixturePath("cost/pricing.json"));
  const auto expected =
      nlohmann::json::parse(ReadFile(t::FixturePath("cost/expected.json")));
  std::vector<double> totals;
  for (const char* name : {"zero_shot", "few_shot", "hitl"}) {
    const auto bundle = UsageBundleFromJson(nlohmann::json::parse(
        ReadFile(t::FixturePath(std::string("cost/usage_") + name + ".json"))));
    const double total = ComputeCostReport(bundle.usage, prices, bundle.human).total();
    const auto cents = std::llround(total * 100.0);
    c.Expect(cents == expected[name]["total_cents"].get<long long>(),
             fmt::format("{}: {} cents", name, cents));
    totals.push_back(total);
  }
  c.Expect(totals[0] < totals[1] && totals[1] < totals[2], "ordering");
  return c.Done(fmt::format("${:.2f} < ${:.2f} < ${:.2f}, equal to the hand computation",
                            totals[0], totals[1], totals[2]));
}

Outcome PresetFidelity() {
  using IS = InstructionSource;
  using R = Refinement;
  struct Row {
    const char* name;
    bool few_shot;
    std::optional<InputSource> input;
    std::optional<SamplerKind> sampler;
    std::optional<LabelerKind> labeler;
    IS source;
    R refinement;
  };
  const auto P = InputSource::kProvided, PS = InputSource::kProvidedSynthesized;
  const auto Rnd = SamplerKind::kRandom, Div = SamplerKind::kDiversity;
  const auto St = LabelerKind::kStudent, Te = LabelerKind::kTeacher;
  const Row rows[] = {
      {"M_zero-shot", false, {}, {}, {}, IS::kTemplate, R::kNone},
      {"M_few-shot", true, P, Rnd, St, IS::kTemplate, R::kNone},
      {"M_fs-div", true, P, Div, St, IS::kTemplate, R::kNone},
      {"M_fs-teacher", true, P, Div, Te, IS::kTemplate, R::kNone},
      {"M_fs-syn", true, PS, Div, Te, IS::kTemplate, R::kNone},
      {"M_zs-model", false, {}, {}, {}, IS::kModel, R::kNone},
      {"M_zs-tmodel", false, {}, {}, {}, IS::kTemplate, R::kModel},
      {"M_zs-hai", false, {}, {}, {}, IS::kHumanTemplate, R::kHumanModel},
      {"M_fs-hai", true, P, Div, Te, IS::kHumanTemplate, R::kHumanModel},
  };
  Checker c;
  c.Expect(PresetNames().size() == std::size(rows), "preset count");
  for (const Row& row : rows) {
    const SliceConfig cfg = NamedPreset(row.name);
    c.Expect(cfg.few_shot == row.few_shot && cfg.input_source == row.input &&
                 cfg.sampler == row.sampler && cfg.labeler == row.labeler &&
                 cfg.instruction_source == row.source &&
                 cfg.instruction_refinement == row.refinement,
             std::string(row.name) + " fields");
    c.Expect(ConfigFromJson(nlohmann::json::parse(ConfigToJson(cfg).dump())) == cfg,
             std::string(row.name) + " round-trip");
    c.Expect(ValidateConfig(cfg, {.interactive = true}).ok(),
             std::string(row.name) + " invalid");
  }
  return c.Done("9 presets match row for row and round-trip");
}

Outcome SynthesisBalancing() {
  std::vector<Example> rows;
  for (int i = 0; i < 24; ++i) {
    rows.push_back({"r" + std::to_string(i), "ordinary sentence number " + std::to_string(i),
                    std::nullopt, std::nullopt, {}, nlohmann::ordered_json::object()});
  }
  const Dataset d("plain", std::move(rows), {});
  auto labeler = std::make_shared<MockBackend>();
  labeler->SetDefault("no");
  auto writer = std::make_shared<MockBackend>();
  writer->SetDefault(
      "Text: The imam led prayers.\nAnswer: yes\n\nText: Eid at the mosque.\nAnswer: "
      "yes\n\nText: Quran recitation class.\nAnswer: yes\n\nText: Ramadan night "
      "market.\nAnswer: yes");
  HashNgramEmbedder embedder;
  PromptBackends b{MakeRole(Role::kGenerator, "g", writer),
                   MakeRole(Role::kTeacher, "t", labeler),
                   MakeRole(Role::kStudent, "s", labeler), &embedder, nullptr};
  const auto p = BuildPrompt({"Muslim", std::nullopt}, d, NamedPreset("M_fs-syn"), b);
  Checker c;
  c.Expect(p.examples.size() == 8, std::to_string(p.examples.size()) + " examples");
  int provided_no = 0, synthesized_yes = 0;
  for (std::size_t i = 0; i < p.examples.size(); ++i) {
    const auto& e = p.examples[i];
    const bool yes_slot = i % 2 == 0;
    c.Expect((e.label == Label::kYes) == yes_slot, "order at " + std::to_string(i));
    if (e.label == Label::kNo && e.origin == ExampleOrigin::kProvided) ++provided_no;
    if (e.label == Label::kYes && e.origin == ExampleOrigin::kSynthesized) ++synthesized_yes;
  }
  c.Expect(provided_no == 4 && synthesized_yes == 4,
           fmt::format("{} provided no, {} synthesized yes", provided_no, synthesized_yes));
  return c.Done("4 provided no + 4 synthesized yes, alternating yes-first");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"template instruction", TemplateInstructions},
      {"prompt rendering", PromptRendering},
      {"end-to-end mock pipeline", MockPipeline},
      {"fisher oracle equivalence", FisherOracleEquivalence},
      {"under-performance detection", UnderperformanceDetection},
      {"k-means properties", KMeansProperties},
      {"diversity sampling", DiversitySampling},
      {"prf correctness", PrfCorrectness},
      {"cost arithmetic", CostArithmetic},
      {"preset fidelity", PresetFidelity},
      {"synthesis balancing", SynthesisBalancing},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("{} [{:>2}] {}: {} ({:.2f}s)\n", o.pass ? "PASS" : "FAIL", id,
                             criteria[i].first, o.detail, SecondsSince(start))
              << std::flush;
  }
  return failures;
}
