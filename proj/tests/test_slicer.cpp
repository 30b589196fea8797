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

#include "semslice/slicer.hpp"

#include <atomic>
#include <thread>

#include "doctest.h"
#include "semslice/error.hpp"
#include "support.hpp"

using namespace semslice;
using semslice::testing::TempDir;

namespace {

SlicingPrompt ZeroShotPrompt(const std::string& name) {
  SlicingPrompt p;
  p.criterion.name = name;
  p.config = NamedPreset("M_zero-shot");
  p.instruction = GenerateInstruction(p.criterion, InstructionSource::kTemplate, nullptr);
  p.student_model = p.config.student_model;
  return p;
}

std::shared_ptr<MockBackend> KeywordMock() {
  auto mock = std::make_shared<MockBackend>();
  mock->AddRule({std::nullopt, MatchScope::kQueryText, semslice::testing::KeywordTerms(),
                 "yes"});
  mock->SetDefault("no");
  return mock;
}

}  // namespace

TEST_CASE("label parsing") {
  CHECK(ParseLabel("yes") == LabelParse{Verdict::kIn, ParseStatus::kClean});
  CHECK(ParseLabel("no") == LabelParse{Verdict::kOut, ParseStatus::kClean});
  CHECK(ParseLabel(" No.") == LabelParse{Verdict::kOut, ParseStatus::kNormalized});
  CHECK(ParseLabel("YES!") == LabelParse{Verdict::kIn, ParseStatus::kNormalized});
  CHECK(ParseLabel("Yes, because it mentions a mosque") ==
        LabelParse{Verdict::kIn, ParseStatus::kNormalized});
  CHECK(ParseLabel("yesterday") == LabelParse{Verdict::kOut, ParseStatus::kUnparseable});
  CHECK(ParseLabel("maybe") == LabelParse{Verdict::kOut, ParseStatus::kUnparseable});
  CHECK(ParseLabel("") == LabelParse{Verdict::kOut, ParseStatus::kUnparseable});
}

TEST_CASE("annotation follows the keyword rule at any parallelism") {
  const Dataset d = semslice::testing::KeywordCorpus(120, 9);
  const auto prompt = ZeroShotPrompt("keyword");
  std::vector<std::string> reference;
  for (const auto& ex : d.examples()) {
    if (semslice::testing::KeywordRule(ex.text)) reference.push_back(ex.id);
  }
  for (int parallelism : {1, 3, 8}) {
    auto mock = KeywordMock();
    const auto role = MakeRole(Role::kStudent, "flan-t5-xxl", mock);
    const auto run = Annotate(d, prompt, role, {.parallelism = parallelism});
    CHECK(run.annotations.size() == d.size());
    CHECK(mock->call_count() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(run.annotations[i].example_id == d[i].id);
    CHECK(ExtractSlice(d, run, "keyword").member_ids == reference);
    CHECK(run.count_unparseable() == 0);
    CHECK(run.wall_clock_seconds > 0.0);
  }
}

TEST_CASE("annotation decodes greedily with a short budget") {
  const Dataset d = semslice::testing::KeywordCorpus(5, 1);
  auto mock = KeywordMock();
  BackendRole role = MakeRole(Role::kStudent, "s", mock);
  role.temperature = 0.7;
  Annotate(d, ZeroShotPrompt("k"), role, {.parallelism = 2});
  for (const auto& call : mock->Transcript()) {
    CHECK(call["temperature"] == 0.0);
    CHECK(call["max_tokens"] == 5);
  }
}

TEST_CASE("a few failures are tolerated, many abort") {
  const Dataset d = semslice::testing::KeywordCorpus(40, 2);
  auto make = [](int fail_every) {
    auto mock = std::make_shared<MockBackend>();
    auto counter = std::make_shared<std::atomic<int>>(0);
    mock->SetHandler([fail_every](const CompletionRequest& r) -> std::optional<std::string> {
      const auto q = ExtractQueryText(r.prompt_text).value_or("");
      const auto day = std::stoi(q.substr(q.find("day ") + 4));
      if (day % fail_every == 0) throw BackendError("upstream down");
      return "no";
    });
    return mock;
  };
  Diagnostics diag;
  const auto run = Annotate(d, ZeroShotPrompt("k"),
                            MakeRole(Role::kStudent, "s", make(20)), {}, &diag);
  CHECK(run.count_failed() == 2);
  CHECK(run.annotations[0].failed);
  CHECK(run.annotations[0].raw_output.starts_with("<error:"));
  CHECK_FALSE(diag.warnings().empty());

  try {
    Annotate(d, ZeroShotPrompt("k"), MakeRole(Role::kStudent, "s", make(3)), {});
    FAIL("expected abort");
  } catch (const AnnotationAborted& e) {
    CHECK(e.total() == 40);
    CHECK(e.failed_ids().size() == 14);
  }
}

TEST_CASE("annotation rejects bad inputs") {
  const Dataset d = semslice::testing::KeywordCorpus(3, 1);
  const auto role = MakeRole(Role::kStudent, "s", KeywordMock());
  CHECK_THROWS_AS(Annotate(d, ZeroShotPrompt("k"), role, {.parallelism = 0}), ConfigError);
  const auto teacher = MakeRole(Role::kTeacher, "t", KeywordMock());
  CHECK_THROWS_AS(Annotate(d, ZeroShotPrompt("k"), teacher), ConfigError);
}

TEST_CASE("annotation runs round-trip through disk") {
  TempDir tmp;
  const Dataset d = semslice::testing::KeywordCorpus(30, 3);
  auto run = Annotate(d, ZeroShotPrompt("keyword"),
                      MakeRole(Role::kStudent, "flan-t5-xxl", KeywordMock()));
  run.prompt_ref = "prompt.json";
  WriteAnnotationRun(run, tmp / "run.json", tmp / "annotations.jsonl");
  const auto back = ReadAnnotationRun(tmp / "run.json");
  CHECK(back.criterion == run.criterion);
  CHECK(back.config_snapshot == run.config_snapshot);
  CHECK(back.config_snapshot == ConfigSnapshot(NamedPreset("M_zero-shot")));
  CHECK(back.prompt_sha256 == run.prompt_sha256);
  CHECK(AnnotationsToJsonl(back) == AnnotationsToJsonl(run));
  CHECK(ExtractSlice(d, back, "keyword").member_ids ==
        ExtractSlice(d, run, "keyword").member_ids);

  const auto other = semslice::testing::KeywordCorpus(31, 3);
  CHECK_THROWS_AS(ExtractSlice(other, run, "keyword"), DatasetError);
}

TEST_CASE("usage is attributed to slice labeling") {
  const Dataset d = semslice::testing::KeywordCorpus(10, 3);
  const auto run = Annotate(d, ZeroShotPrompt("keyword"),
                            MakeRole(Role::kStudent, "flan-t5-xxl", KeywordMock()));
  const auto usage = run.usage();
  REQUIRE(usage.size() == 1);
  CHECK(usage[0].step == "slice_labeling");
  CHECK(usage[0].model_id == "flan-t5-xxl");
  CHECK(usage[0].calls == 10);
  std::int64_t in = 0;
  for (const auto& a : run.annotations) in += a.input_tokens;
  CHECK(usage[0].input_tokens == in);
}
