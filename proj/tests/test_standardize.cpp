#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "uact/shard.hpp"
#include "uact/standardize.hpp"

using namespace uact;

namespace {

Quat random_quat(std::mt19937_64& g) {
  std::normal_distribution<double> n;
  return Quat{n(g), n(g), n(g), n(g)}.normalized();
}

Mat3 quat_oracle(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

EpisodeRecord two_frame(const Pose& a, const Pose& b, double ga = 0.0, double gb = 1.0) {
  auto e = fixtures::right_arm_episode("e", 2);
  e.frames[0].right = ArmState{a, ga};
  e.frames[1].right = ArmState{b, gb};
  return e;
}

std::vector<UnifiedAction> n_actions(std::size_t n) {
  std::vector<UnifiedAction> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].right.dpos = Vec3(static_cast<double>(i + 1), 0, 0);
  return out;
}

ActionChunk random_chunk(std::mt19937_64& g, int h, bool dual) {
  std::normal_distribution<double> n(0.3, 2.0);
  ActionChunk c;
  c.episode_id = "r";
  c.arm_mask = {dual, true};
  c.validity = static_cast<std::uint16_t>(h);
  c.actions = ChunkMatrix::Zero(h, kUnifiedDims);
  for (int r = 0; r < h; ++r) {
    for (int k = dual ? 0 : kArmDims; k < kUnifiedDims; ++k) c.actions(r, k) = n(g);
  }
  return c;
}

}  // namespace

TEST(Delta, PureTranslation) {
  const auto d = absolute_to_delta(two_frame(Pose{}, Pose{Vec3(0.1, 0, 0), Quat{}}));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_LT((d[0].right.dpos - Vec3(0.1, 0, 0)).norm(), 1e-15);
  EXPECT_EQ(d[0].right.rotvec, RotVec::Zero());
}

TEST(Delta, SamePose) {
  const Pose p = Pose::make(Vec3(0.3, -0.2, 0.5), Quat{0.8, 0.2, -0.5, 0.1});
  const auto d = absolute_to_delta(two_frame(p, p, 0.3, 0.7));
  EXPECT_LT(d[0].right.dpos.norm(), 1e-15);
  EXPECT_LT(d[0].right.rotvec.norm(), 1e-15);
  EXPECT_EQ(d[0].right.gripper, 0.7);
}

TEST(Delta, ForwardComposeReconstructsNextPose) {
  std::mt19937_64 g(21);
  std::normal_distribution<double> n;
  for (int i = 0; i < 2000; ++i) {
    const Pose a{Vec3(n(g), n(g), n(g)), random_quat(g)};
    const Pose b{Vec3(n(g), n(g), n(g)), random_quat(g)};
    const auto d = absolute_to_delta(two_frame(a, b))[0].right;
    const Mat3 ra = quat_oracle(a.orientation), rb = quat_oracle(b.orientation);
    EXPECT_LT((a.position + ra * d.dpos - b.position).norm(), 1e-9);
    EXPECT_LT((ra * rotvec_to_matrix(d.rotvec) - rb).norm(), 1e-9);
  }
}

TEST(Delta, BaseFrameTranslation) {
  std::mt19937_64 g(22);
  const Pose a{Vec3(1, 2, 3), random_quat(g)};
  const Pose b{Vec3(1.5, 2, 2), random_quat(g)};
  const auto d = absolute_to_delta(two_frame(a, b), TranslationFrame::Base)[0].right;
  EXPECT_LT((d.dpos - Vec3(0.5, 0, -1)).norm(), 1e-15);
}

TEST(Delta, DeltaSourcePassesThrough) {
  auto e = fixtures::right_arm_episode("e", 3);
  e.mode = ActionMode::Delta;
  e.frames[1].right = ArmState{Pose{Vec3(0.01, 0.02, 0), rotvec_to_quat(Vec3(0, 0, 0.1))}, 1.0};
  const auto d = absolute_to_delta(e);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_LT((d[1].right.dpos - Vec3(0.01, 0.02, 0)).norm(), 1e-15);
  EXPECT_LT((d[1].right.rotvec - Vec3(0, 0, 0.1)).norm(), 1e-15);
}

TEST(Delta, TooFewFrames) {
  EXPECT_THROW(absolute_to_delta(fixtures::right_arm_episode("e", 1)), Error);
}

TEST(PadToDual, RightArmFillsRightSlot) {
  ArmAction a;
  a.dpos = Vec3(0.1, 0, 0);
  a.gripper = 1.0;
  const auto v = pad_to_dual(a, Arm::Right).to_array();
  for (int k = 0; k < 7; ++k) EXPECT_EQ(v[k], 0.0);
  EXPECT_EQ(v[7], 0.1);
  EXPECT_EQ(v[13], 1.0);
}

TEST(PadToDual, ZeroAction) {
  const auto u = pad_to_dual(ArmAction{}, Arm::Right);
  EXPECT_EQ(u.arm_mask, (std::array<bool, 2>{false, true}));
  for (double x : u.to_array()) EXPECT_EQ(x, 0.0);
}

TEST(PadToDual, LeftOnlySourceStillUsesRightSlot) {
  ArmAction a;
  a.dpos = Vec3(0.2, 0, 0);
  const auto v = pad_to_dual(a, Arm::Left).to_array();
  for (int k = 0; k < 7; ++k) EXPECT_EQ(v[k], 0.0);
  EXPECT_EQ(v[7], 0.2);
}

TEST(PadToDual, DualBypasses) {
  ArmAction l, r;
  l.dpos = Vec3(1, 0, 0);
  r.dpos = Vec3(2, 0, 0);
  const auto u = dual_action(l, r);
  EXPECT_EQ(u.arm_mask, (std::array<bool, 2>{true, true}));
  EXPECT_EQ(u.to_array()[0], 1.0);
  EXPECT_EQ(u.to_array()[7], 2.0);
}

TEST(Chunk, ExactDivision) {
  const auto c = chunk(n_actions(32), 16, 16);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].validity, 16);
  EXPECT_EQ(c[1].validity, 16);
  EXPECT_EQ(c[1].actions(0, 7), 17.0);
}

TEST(Chunk, Remainder) {
  const auto c = chunk(n_actions(20), 16, 16);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1].validity, 4);
  EXPECT_EQ(c[1].start_frame, 16u);
  EXPECT_EQ(c[1].actions(3, 7), 20.0);
  EXPECT_EQ(c[1].actions(4, 7), 0.0);
}

TEST(Chunk, ShortSequencePadded) {
  const auto c = chunk(n_actions(5), 16, 16);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].validity, 5);
  EXPECT_EQ(c[0].actions.bottomRows(11).cwiseAbs().sum(), 0.0);
}

TEST(Chunk, OverlappingStride) {
  const auto c = chunk(n_actions(10), 4, 2);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_EQ(c[4].start_frame, 8u);
  EXPECT_EQ(c[4].validity, 2);
}

TEST(Chunk, BadParams) {
  EXPECT_THROW(chunk(n_actions(3), 0, 1), Error);
  EXPECT_THROW(chunk({}, 4, 4), Error);
}

TEST(Chunk, SingleArmEpisodeLeftColumnsZero) {
  const auto chunks = chunk_episode(fixtures::right_arm_episode("e", 40), 8, 8);
  for (const auto& c : chunks) {
    EXPECT_EQ(c.actions.leftCols(kArmDims).cwiseAbs().sum(), 0.0);
    EXPECT_EQ(c.arm_mask, (std::array<bool, 2>{false, true}));
  }
  EXPECT_DOUBLE_EQ(chunks[1].state[kArmDims], 0.08);
}

TEST(Norm, ConstantChannelPassesThrough) {
  std::vector<ActionChunk> cs(2);
  for (auto& c : cs) {
    c.validity = 2;
    c.actions = ChunkMatrix::Constant(2, kUnifiedDims, 3.0);
  }
  const auto st = fit_norm(cs);
  EXPECT_EQ(st.stddev[kArmDims], 0.0);
  EXPECT_EQ(apply_norm(cs[0], st).actions(0, kArmDims), 3.0);
}

TEST(Norm, PlusMinusOne) {
  std::vector<ActionChunk> cs(2);
  for (int i = 0; i < 2; ++i) {
    cs[i].validity = 1;
    cs[i].actions = ChunkMatrix::Zero(1, kUnifiedDims);
    cs[i].actions(0, kArmDims) = i == 0 ? -1.0 : 1.0;
  }
  const auto st = fit_norm(cs);
  EXPECT_EQ(st.mean[kArmDims], 0.0);
  EXPECT_EQ(st.stddev[kArmDims], 1.0);
  EXPECT_EQ(apply_norm(cs[0], st).actions(0, kArmDims), -1.0);
  EXPECT_EQ(apply_norm(cs[1], st).actions(0, kArmDims), 1.0);
}

TEST(Norm, RoundTripUnclipped) {
  std::mt19937_64 g(23);
  std::vector<ActionChunk> cs;
  for (int i = 0; i < 50; ++i) cs.push_back(random_chunk(g, 6, i % 3 == 0));
  const auto st = fit_norm(cs);
  for (const auto& c : cs) {
    const auto z = apply_norm(c, st);
    const auto back = invert_norm(z, st);
    for (int r = 0; r < c.validity; ++r) {
      for (int k = 0; k < kUnifiedDims; ++k) {
        if (std::abs(z.actions(r, k)) < st.clip) {
          EXPECT_NEAR(back.actions(r, k), c.actions(r, k), 1e-12);
        }
      }
    }
    if (!c.arm_mask[0]) {
      EXPECT_EQ(z.actions.leftCols(kArmDims).cwiseAbs().sum(), 0.0);
    }
  }
}

TEST(Norm, StatsMatchBruteForce) {
  std::mt19937_64 g(24);
  std::vector<ActionChunk> cs;
  for (int i = 0; i < 20; ++i) cs.push_back(random_chunk(g, 5, i % 2 == 0));
  const auto st = fit_norm(cs);
  for (int k : {0, 9}) {
    std::vector<double> v;
    for (const auto& c : cs) {
      if (!c.arm_mask[k < kArmDims ? 0 : 1]) continue;
      for (int r = 0; r < c.validity; ++r) v.push_back(c.actions(r, k));
    }
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    EXPECT_NEAR(st.mean[k], m, 1e-12);
    EXPECT_NEAR(st.stddev[k], std::sqrt(s / static_cast<double>(v.size())), 1e-12);
  }
  EXPECT_EQ(norm_stats_from_json(norm_stats_to_json(st)), st);
}

TEST(Shard, RoundTripThroughFiles) {
  std::mt19937_64 g(25);
  std::vector<ActionChunk> cs;
  for (int i = 0; i < 11; ++i) {
    auto c = random_chunk(g, 4, i % 2 == 1);
    c.episode_id = "ep-" + std::to_string(i);
    c.start_frame = static_cast<std::uint32_t>(3 * i);
    c.validity = static_cast<std::uint16_t>(1 + i % 4);
    for (auto& s : c.state) s = 0.25 * i;
    // Exactly representable values so the f32 storage round-trips bitwise.
    c.actions = (c.actions * 8).array().round() / 8;
    cs.push_back(c);
  }
  const auto dir = std::filesystem::temp_directory_path() / "uact_shard_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const json side = write_shards(dir.string(), "chunks", cs, 4, 4);
  EXPECT_EQ(side.at("shards").size(), 3u);
  EXPECT_EQ(read_shards((dir / "chunks.json").string()), cs);
}

TEST(Shard, RejectsCorruptInput) {
  std::vector<ActionChunk> cs(1);
  cs[0].actions = ChunkMatrix::Zero(2, kUnifiedDims);
  cs[0].validity = 2;
  const auto enc = encode_shard(cs, 2);
  EXPECT_EQ(decode_shard(enc.bytes), cs);
  const auto code = [](const std::string& bytes) {
    try {
      decode_shard(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    return std::string("none");
  };
  std::string bad = enc.bytes;
  bad[0] = 'X';
  EXPECT_EQ(code(bad), "bad-magic");
  EXPECT_NE(code(enc.bytes.substr(0, enc.bytes.size() - 3)), "none");
  EXPECT_EQ(code(enc.bytes + "z"), "trailing-bytes");
  EXPECT_THROW(encode_shard(cs, 3), Error);
}

TEST(Shard, EmptyCorpusWritesEmptyShard) {
  const auto dir = std::filesystem::temp_directory_path() / "uact_shard_empty";
  std::filesystem::create_directories(dir);
  write_shards(dir.string(), "c", {}, 8);
  EXPECT_TRUE(read_shards((dir / "c.json").string()).empty());
}
