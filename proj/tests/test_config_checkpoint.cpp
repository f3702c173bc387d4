#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "calfoa/checkpoint.hpp"
#include "calfoa/config.hpp"
#include "calfoa/error.hpp"

namespace calfoa {
namespace {

namespace fs = std::filesystem;

TEST(Config, TextRoundTrip) {
  const auto a = parse_config(
      "stream.kind=moving-blobs\nstream.width=64\nstream.height=48\narch=S\ntrain.density=FOAW\n"
      "train.criterion=VAR\ntrain.frames=30\ntest.frames=5\ncal.dt=0.01\nobjective.lambda_c=10\n"
      "foa.rho=0.25\nseed=9\n");
  const auto b = parse_config(a.to_text());
  EXPECT_EQ(a.to_text(), b.to_text());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(b.stream.kind, StreamKind::MovingBlobs);
  EXPECT_EQ(b.train_density, DensityKind::FOAW);
  EXPECT_EQ(b.criterion, Criterion::VAR);
  EXPECT_EQ(b.stream.seed, 9u);
  EXPECT_EQ(b.stream.total_frames, 35u);
  EXPECT_EQ(b.cal.dt, 0.01);
}

TEST(Config, CommentsAndOverrides) {
  const auto c = parse_config("# comment\nseed=3  # trailing\n\n", {{"cal.dt", "0.02"}, {"seed", "4"}});
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.cal.dt, 0.02);
}

TEST(Config, RejectsUnknownKeyWithLine) {
  try {
    parse_config("seed=1\nfoa.rhoo=0.3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsDuplicatesAndBadValues) {
  EXPECT_THROW(parse_config("seed=1\nseed=2\n"), ConfigError);
  EXPECT_THROW(parse_config("cal.dt=fast\n"), ConfigError);
  EXPECT_THROW(parse_config("cal.dt=0.5\n"), ConfigError);  // violates the stability guard
  EXPECT_THROW(parse_config("train.density=EVERYWHERE\n"), ConfigError);
  EXPECT_THROW(parse_config("novalue\n"), ConfigError);
}

TEST(Config, HashIgnoresOutputLocation) {
  const auto a = parse_config("output.dir=a\n");
  const auto b = parse_config("output.dir=b\nlog.interval=10\n");
  const auto c = parse_config("output.dir=a\nseed=2\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Config, OutputRootFromEnvironment) {
  const auto c = parse_config("output.dir=runs/x\n");
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(c.resolved_output_dir(), fs::path("runs/x"));
  ::setenv(kOutputRootEnv, "/tmp/root", 1);
  EXPECT_EQ(c.resolved_output_dir(), fs::path("/tmp/root/runs/x"));
  ::unsetenv(kOutputRootEnv);
}

Checkpoint sample_checkpoint() {
  Checkpoint ck;
  ck.arch_descriptor = "T|3,1,4,tanh|3,4,3,softmax";
  ck.config_hash = 0x1234567890abcdefULL;
  ck.frame = 17;
  ck.step = 17;
  ck.w = {0.5, -1.25, 3e-300, -0.0};
  ck.v = {1.0, 2.0, -3.0, 4.5};
  ck.criterion = Criterion::AVG;
  ck.nu = {0.2, 0.3, 0.5};
  ck.gaze_position = {10.5, 3.25};
  ck.gaze_velocity = {-0.1, 0.2};
  ck.mi_h_cond_sum = 4.75;
  ck.mi_p_sum = {1.0, 2.0, 3.0};
  ck.mi_frames = 17;
  return ck;
}

TEST(Checkpoint, EncodeDecodeRoundTrip) {
  const auto ck = sample_checkpoint();
  const auto bytes = encode_checkpoint(ck);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CAL2");
  EXPECT_EQ(decode_checkpoint(bytes), ck);
}

TEST(Checkpoint, RejectsCorruptInput) {
  auto bytes = encode_checkpoint(sample_checkpoint());
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_checkpoint(truncated), ParseError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), ParseError);
  auto magic = bytes;
  magic[0] = 'X';
  try {
    decode_checkpoint(magic);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  auto version = bytes;
  version[4] = 99;
  EXPECT_THROW(decode_checkpoint(version), ParseError);
}

TEST(Checkpoint, FileRoundTripWithSidecar) {
  const fs::path dir = fs::temp_directory_path() / "calfoa_ck_test";
  fs::create_directories(dir);
  const auto ck = sample_checkpoint();
  save_checkpoint(dir / "ck.bin", ck);
  EXPECT_TRUE(fs::exists(dir / "ck.bin.json"));
  EXPECT_EQ(load_checkpoint(dir / "ck.bin"), ck);
  EXPECT_THROW(load_checkpoint(dir / "missing.bin"), IoError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace calfoa
