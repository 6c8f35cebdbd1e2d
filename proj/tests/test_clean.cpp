#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "uact/clean.hpp"
#include "uact/ingest.hpp"
#include "uact/synthetic.hpp"

using namespace uact;
using fixtures::right_arm_episode;

namespace {

SchemaRegistry registry() { return {{"ds", parse_schema(fixtures::kRightQuatSchema)}}; }

std::string first_reason(const FilterVerdict& v) { return v.reasons.empty() ? "" : v.reasons.front(); }

}  // namespace

TEST(Instruction, Empty) {
  auto e = right_arm_episode("e");
  e.instruction = "";
  const auto v = filter_instruction(e, {});
  EXPECT_EQ(v.decision, Decision::Reject);
  EXPECT_EQ(first_reason(v), "empty-instruction");
}

TEST(Instruction, WhitespaceOnlyIsEmpty) {
  auto e = right_arm_episode("e");
  e.instruction = " \t ";
  EXPECT_EQ(first_reason(filter_instruction(e, {})), "empty-instruction");
}

TEST(Instruction, RepeatRunIsGarbled) {
  auto e = right_arm_episode("e");
  e.instruction = "asdkjh!!!####%%%%%%%%%%";
  EXPECT_EQ(longest_repeat_run(e.instruction), 10u);
  const auto v = filter_instruction(e, {});
  EXPECT_EQ(v.decision, Decision::Reject);
  EXPECT_EQ(first_reason(v), "garbled");
}

TEST(Instruction, ControlCharactersAreGarbled) {
  auto e = right_arm_episode("e");
  e.instruction = "\x01\x02\x03\x04 pick";
  EXPECT_EQ(first_reason(filter_instruction(e, {})), "garbled");
}

TEST(Instruction, CleanTextKept) {
  auto e = right_arm_episode("e");
  e.instruction = "pick up the cup";
  EXPECT_EQ(filter_instruction(e, {}).decision, Decision::Keep);
}

TEST(Instruction, TranslationHookRefines) {
  auto e = right_arm_episode("e");
  e.instruction = "prends la tasse";
  CleanHooks hooks;
  hooks.is_non_english = [](std::string_view) { return true; };
  hooks.translate = [](std::string_view) { return std::string("take the cup"); };
  const auto v = filter_instruction(e, {}, hooks);
  ASSERT_EQ(v.decision, Decision::Refine);
  EXPECT_EQ(v.refinements->instruction, "take the cup");
  EXPECT_TRUE(has_flag(*v.refinements, "needs-translation"));
}

TEST(Subtasks, AlignedKept) {
  auto e = right_arm_episode("e", 20);
  e.subtasks = {{0, 10, "a"}, {10, 20, "b"}};
  EXPECT_EQ(align_subtasks(e).decision, Decision::Keep);
}

TEST(Subtasks, OverlapTruncatesEarlier) {
  auto e = right_arm_episode("e", 20);
  e.subtasks = {{0, 12, "a"}, {10, 20, "b"}};
  const auto v = align_subtasks(e);
  ASSERT_EQ(v.decision, Decision::Refine);
  EXPECT_EQ(v.refinements->subtasks, (std::vector<SubtaskSpan>{{0, 10, "a"}, {10, 20, "b"}}));
}

TEST(Subtasks, FullyOutOfRangeRejected) {
  auto e = right_arm_episode("e", 20);
  e.subtasks = {{50, 60, "late"}};
  const auto v = align_subtasks(e);
  EXPECT_EQ(v.decision, Decision::Reject);
  EXPECT_EQ(first_reason(v), "misaligned-subtasks");
}

TEST(Subtasks, ClippedAndSorted) {
  auto e = right_arm_episode("e", 20);
  e.subtasks = {{15, 30, "b"}, {-3, 5, "a"}};
  const auto v = align_subtasks(e);
  ASSERT_EQ(v.decision, Decision::Refine);
  EXPECT_EQ(v.refinements->subtasks, (std::vector<SubtaskSpan>{{0, 5, "a"}, {15, 20, "b"}}));
}

TEST(Visual, AllBlack) {
  auto e = right_arm_episode("e", 10);
  for (auto& f : e.frames) f.brightness = 0.0;
  const auto v = filter_visual(e, {});
  EXPECT_EQ(v.decision, Decision::Reject);
  EXPECT_EQ(first_reason(v), "black-frame");
}

TEST(Visual, SharpKept) {
  EXPECT_EQ(filter_visual(right_arm_episode("e", 10), {}).decision, Decision::Keep);
}

TEST(Visual, ThirtyPercentBlurred) {
  auto e = right_arm_episode("e", 10);
  for (int t : {1, 4, 7}) e.frames[static_cast<std::size_t>(t)].sharpness = 0.01;
  const auto v = filter_visual(e, {});
  EXPECT_EQ(v.decision, Decision::Reject);
  EXPECT_EQ(first_reason(v), "blurred");
}

TEST(Visual, TwentyPercentBlurredIsAtTheLimit) {
  auto e = right_arm_episode("e", 10);
  for (int t : {1, 4}) e.frames[static_cast<std::size_t>(t)].sharpness = 0.01;
  EXPECT_EQ(filter_visual(e, {}).decision, Decision::Keep);
}

TEST(Visual, NoStatsKeptWithFlag) {
  auto e = right_arm_episode("e", 10);
  for (auto& f : e.frames) {
    f.brightness.reset();
    f.sharpness.reset();
  }
  const auto v = filter_visual(e, {});
  EXPECT_EQ(v.decision, Decision::Keep);
  EXPECT_EQ(v.flags, std::vector<std::string>{"no-visual-stats"});
}

TEST(Visual, BadViewpoint) {
  auto e = right_arm_episode("e", 10);
  e.viewpoint_ok = false;
  EXPECT_EQ(first_reason(filter_visual(e, {})), "ineffective-viewpoint");
}

TEST(Actions, ShortEpisode) {
  const auto schema = parse_schema(fixtures::kRightQuatSchema);
  const auto v = filter_actions(right_arm_episode("e", 5), schema, {});
  EXPECT_EQ(v.decision, Decision::Reject);
  EXPECT_EQ(first_reason(v), "abnormal-length");
}

TEST(Actions, HalfMeterJump) {
  const auto schema = parse_schema(fixtures::kRightQuatSchema);
  auto e = right_arm_episode("e", 20);
  for (std::size_t t = 10; t < 20; ++t) e.frames[t].right->pose.position.x() += 0.5;
  const auto v = filter_actions(e, schema, {});
  EXPECT_EQ(v.decision, Decision::Reject);
  EXPECT_EQ(first_reason(v), "action-spike");
}

TEST(Actions, RotationJump) {
  const auto schema = parse_schema(fixtures::kRightQuatSchema);
  auto e = right_arm_episode("e", 20);
  e.frames[10].right->pose.orientation = Quat{std::cos(0.4), std::sin(0.4), 0, 0};  // 0.8 rad
  EXPECT_EQ(first_reason(filter_actions(e, schema, {})), "action-spike");
}

TEST(Actions, AmbiguousRepresentation) {
  auto schema = parse_schema(fixtures::kRightQuatSchema);
  schema.rotation_repr = RotationRepr::Unspecified;
  const auto v = filter_actions(right_arm_episode("e", 20), schema, {});
  EXPECT_EQ(v.decision, Decision::Reject);
  EXPECT_EQ(first_reason(v), "ambiguous-action");
}

TEST(Actions, RateMismatch) {
  const auto schema = parse_schema(fixtures::kRightQuatSchema);
  auto e = right_arm_episode("e", 20);
  e.action_rate = 2 * e.fps;
  EXPECT_EQ(first_reason(filter_actions(e, schema, {})), "rate-mismatch");
}

TEST(Pipeline, SixteenOfHundred) {
  auto corpus = std::vector<EpisodeRecord>{};
  for (int i = 0; i < 100; ++i) {
    auto e = right_arm_episode("e" + std::to_string(100 + i), 20);
    if (i % 25 == 0) e.instruction = "";
    else if (i % 25 == 1) e.frames[3].brightness = 0.0;
    else if (i % 25 == 2) e.frames.resize(5);
    else if (i % 25 == 3) e.subtasks = {{40, 50, "x"}};
    e.subtasks = i % 25 == 3 ? e.subtasks : std::vector<SubtaskSpan>{};
    corpus.push_back(std::move(e));
  }
  const auto [kept, report] = run_pipeline(corpus, registry(), {});
  EXPECT_EQ(report.rejected, 16u);
  EXPECT_EQ(report.discard_fraction, 0.16);
  EXPECT_EQ(kept.size(), 84u);
  EXPECT_EQ(report.reasons, (std::map<std::string, std::size_t>{
                                {"abnormal-length", 4}, {"black-frame", 4}, {"empty-instruction", 4},
                                {"misaligned-subtasks", 4}}));
}

TEST(Pipeline, AllClean) {
  std::vector<EpisodeRecord> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(right_arm_episode("e" + std::to_string(i)));
  const auto [kept, report] = run_pipeline(corpus, registry(), {});
  EXPECT_EQ(report.discard_fraction, 0.0);
  EXPECT_EQ(kept.size(), 10u);
}

TEST(Pipeline, FirstRejectWins) {
  auto e = right_arm_episode("e", 5);
  e.instruction = "";
  const auto [kept, report] = run_pipeline({e}, registry(), {});
  EXPECT_TRUE(kept.empty());
  EXPECT_EQ(report.rejected, 1u);
  EXPECT_EQ(report.reasons, (std::map<std::string, std::size_t>{{"empty-instruction", 1}}));
}

TEST(Pipeline, RefinedEpisodesAreKeptNotDiscarded) {
  auto e = right_arm_episode("e", 20);
  e.subtasks = {{0, 12, "a"}, {10, 20, "b"}};
  const auto [kept, report] = run_pipeline({e}, registry(), {});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(report.refined, 1u);
  EXPECT_EQ(report.discard_fraction, 0.0);
  EXPECT_EQ(kept[0].subtasks[0].end, 10);
}

TEST(Pipeline, ReportJsonRoundTrip) {
  auto a = right_arm_episode("a", 5);
  auto b = right_arm_episode("b", 20);
  b.subtasks = {{0, 12, "a"}, {10, 20, "b"}};
  const auto [kept, report] = run_pipeline({a, b, right_arm_episode("c")}, registry(), {});
  EXPECT_EQ(clean_report_from_json(clean_report_to_json(report)), report);
}

TEST(Pipeline, SyntheticCorpusMatchesInjection) {
  synth::SynthConfig sc;
  sc.seed = 99;
  const auto corpus = synth::generate_corpus(sc);
  const auto registry = parse_schema_registry(corpus.schemas);
  std::vector<std::string> docs = corpus.documents;
  const auto [records, ingest] = ingest_corpus(docs, registry);
  ASSERT_EQ(ingest.failed, 0u);
  const auto [kept, report] = run_pipeline(records, registry, {});
  std::map<std::string, std::string> injected, rejected;
  for (const auto& d : corpus.defects) injected[d.id] = d.kind;
  for (const auto& r : report.rejections) rejected[r.id] = r.reason;
  EXPECT_EQ(rejected, injected);
  EXPECT_EQ(report.discard_fraction, 0.16);
}

TEST(Config, JsonOverridesAndValidation) {
  const auto c = clean_config_from_json(json{{"min_frames", 3}, {"blur_sharpness_min", 0.2}});
  EXPECT_EQ(c.min_frames, 3u);
  EXPECT_EQ(c.blur_sharpness_min, 0.2);
  EXPECT_EQ(c.max_frames, CleanConfig{}.max_frames);
  EXPECT_THROW(clean_config_from_json(json{{"no_such_key", 1}}), Error);
  EXPECT_THROW(clean_config_from_json(json{{"min_frames", 20}, {"max_frames", 10}}), Error);
}
