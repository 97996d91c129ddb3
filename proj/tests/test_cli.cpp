// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dprw/cli.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace dprw {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dprw");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json json_file(const std::string& path) { return nlohmann::json::parse(read_file(path)); }

// Small travel corpus on disk plus tiny model flags.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const LabeledDataset ds = make_synthetic_corpus(SyntheticDomain::kTravel, {24, 8, 16}, 3);
    std::filesystem::create_directories(dir_.file("travel"));
    write_rewritten_dataset(ds.train, train());
    write_rewritten_dataset(ds.validation, val());
    write_rewritten_dataset(ds.test, test());
  }
  std::string train() const { return dir_.file("travel/train.tsv"); }
  std::string val() const { return dir_.file("travel/validation.tsv"); }
  std::string test() const { return dir_.file("travel/test.tsv"); }
  std::vector<std::string> tiny() const {
    return {"--epochs", "2", "--embed-dim", "6", "--hidden-dim", "8", "--batch-size", "8", "--quiet"};
  }
  Result pretrain(const std::string& out_dir, std::vector<std::string> extra = {}) {
    std::vector<std::string> a = {"pretrain", "--train", train(), "--val", val(), "--out", out_dir + "/m.ckpt"};
    for (const auto& t : tiny()) a.push_back(t);
    for (const auto& t : extra) a.push_back(t);
    return run(a);
  }
  TempDir dir_;
};

TEST(CliExitTest, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(run({}).code, cli::kExitConfig);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitConfig);
  EXPECT_EQ(run({"validate-dp", "--epsilon", "1", "--bogus"}).code, cli::kExitConfig);
}

TEST(CliExitTest, InvalidEpsilonAndTrials) {
  TempDir dir;
  const Result neg = run({"validate-dp", "--epsilon", "-3", "--out-dir", dir.path()});
  EXPECT_EQ(neg.code, cli::kExitConfig);
  EXPECT_NE(neg.err.find("epsilon"), std::string::npos);
  EXPECT_EQ(run({"validate-dp", "--epsilon", "1", "--trials", "0", "--out-dir", dir.path()}).code, cli::kExitConfig);
  EXPECT_EQ(run({"validate-dp", "--epsilon", "abc", "--out-dir", dir.path()}).code, cli::kExitConfig);
  EXPECT_EQ(run({"validate-dp", "--epsilon", "inf", "--out-dir", dir.path()}).code, cli::kExitConfig);
}

TEST(CliExitTest, ValidateDpPassesAndCatchesMiscalibration) {
  TempDir dir;
  const Result ok = run({"validate-dp", "--epsilon", "10", "--trials", "2000", "--dim", "16", "--out-dir", dir.path()});
  EXPECT_EQ(ok.code, cli::kExitOk) << ok.err;
  EXPECT_NE(ok.out.find("result: PASS"), std::string::npos);
  EXPECT_TRUE(json_file(dir.file("report.json")).at("passed").get<bool>());
  const Result bad = run({"validate-dp", "--epsilon", "10", "--trials", "2000", "--dim", "16",
                          "--sensitivity-factor", "1", "--out-dir", dir.path()});
  EXPECT_EQ(bad.code, cli::kExitRuntime);
  EXPECT_NE(bad.out.find("result: FAIL"), std::string::npos);
}

TEST_F(CliTest, MissingInputIsRuntimeError) {
  const Result r = run({"pretrain", "--train", dir_.file("nope.tsv"), "--out", dir_.file("m.ckpt"), "--quiet"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_EQ(run({"rewrite", "--checkpoint", dir_.file("none.ckpt"), "--train", train(), "--epsilon", "1",
                 "--out-dir", dir_.path()})
                .code,
            cli::kExitRuntime);
}

TEST_F(CliTest, MalformedInputIsRuntimeError) {
  write_file(dir_.file("bad.tsv"), "travel_book no tab here\n");
  EXPECT_EQ(run({"downstream", "--train", dir_.file("bad.tsv"), "--test", test(), "--out-dir", dir_.path()}).code,
            cli::kExitRuntime);
}

TEST_F(CliTest, PretrainRewriteDownstreamChain) {
  const std::string out = dir_.file("run");
  const Result pre = pretrain(out);
  ASSERT_EQ(pre.code, cli::kExitOk) << pre.err;
  EXPECT_TRUE(std::filesystem::exists(out + "/m.ckpt"));
  const auto resolved = json_file(out + "/config_resolved.json");
  EXPECT_EQ(resolved.at("subcommand"), "pretrain");
  EXPECT_EQ(json_file(out + "/report.json").at("mode"), "pretrain");

  const Result rw = run({"rewrite", "--checkpoint", out + "/m.ckpt", "--train", train(), "--val", val(), "--epsilon",
                         "inf", "--pretrain-corpus", train(), "--out-dir", out, "--seeds", "1,2", "--quiet"});
  ASSERT_EQ(rw.code, cli::kExitOk) << rw.err;
  const std::string rdir = out + "/rewritten/travel__travel__epsinf/seed_2/";
  EXPECT_TRUE(std::filesystem::exists(rdir + "train.tsv"));
  EXPECT_TRUE(std::filesystem::exists(rdir + "validation.tsv"));
  EXPECT_EQ(json_file(out + "/report.json").at("mode"), "rewrite");
  EXPECT_EQ(json_file(out + "/config_resolved.json").at("clip_c"), 5.0);

  const Result ds = run({"downstream", "--train", rdir + "train.tsv", "--val", rdir + "validation.tsv", "--test",
                         test(), "--out-dir", out + "/ds", "--seed", "3", "--epochs", "2", "--quiet"});
  ASSERT_EQ(ds.code, cli::kExitOk) << ds.err;
  EXPECT_NE(ds.out.find("Test F1"), std::string::npos);
  EXPECT_EQ(json_file(out + "/ds/report.json").at("seeds"), nlohmann::json::array({3}));
}

TEST_F(CliTest, RepeatedInvocationIsByteIdentical) {
  ASSERT_EQ(pretrain(dir_.file("a")).code, cli::kExitOk);
  ASSERT_EQ(pretrain(dir_.file("b")).code, cli::kExitOk);
  EXPECT_EQ(read_file(dir_.file("a/m.ckpt")), read_file(dir_.file("b/m.ckpt")));
  EXPECT_EQ(read_file(dir_.file("a/report.json")), read_file(dir_.file("b/report.json")));
  for (const std::string d : {"a", "b"})
    ASSERT_EQ(run({"rewrite", "--checkpoint", dir_.file("a/m.ckpt"), "--train", train(), "--val", val(),
                   "--epsilon", "1", "--out-dir", dir_.file(d + "/rw"), "--quiet"})
                  .code,
              cli::kExitOk);
  const std::string sub = "/rw/rewritten/travel__travel__eps1/seed_1/train.tsv";
  EXPECT_EQ(read_file(dir_.file("a" + sub)), read_file(dir_.file("b" + sub)));
  EXPECT_EQ(read_file(dir_.file("a/rw/report.json")), read_file(dir_.file("b/rw/report.json")));
}

TEST_F(CliTest, ConfigFileFillsGapsAndFlagsWin) {
  write_file(dir_.file("cfg.json"), R"({"epochs": 1, "hidden-dim": 12, "seeds": [4, 5], "quiet": true})");
  const Result r = run({"pretrain", "--train", train(), "--out", dir_.file("c/m.ckpt"), "--config",
                        dir_.file("cfg.json"), "--hidden-dim", "10", "--embed-dim", "4"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(r.err.empty());
  const auto resolved = json_file(dir_.file("c/config_resolved.json"));
  EXPECT_EQ(resolved.at("autoencoder").at("hidden_dim"), 10);
  EXPECT_EQ(resolved.at("autoencoder").at("epochs"), 1);
  EXPECT_EQ(resolved.at("seeds"), nlohmann::json::array({4, 5}));

  write_file(dir_.file("bad.json"), R"({"epochz": 1})");
  const Result bad = run({"pretrain", "--train", train(), "--out", dir_.file("d/m.ckpt"), "--config",
                          dir_.file("bad.json")});
  EXPECT_EQ(bad.code, cli::kExitConfig);
  EXPECT_NE(bad.err.find("epochz"), std::string::npos);
  write_file(dir_.file("broken.json"), "{");
  EXPECT_EQ(run({"pretrain", "--train", train(), "--out", dir_.file("d/m.ckpt"), "--config",
                 dir_.file("broken.json")})
                .code,
            cli::kExitConfig);
}

TEST_F(CliTest, SeedEnvironmentFallback) {
  ::setenv("DPRW_SEED", "42", 1);
  const Result r = pretrain(dir_.file("e"));
  ::unsetenv("DPRW_SEED");
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto resolved = json_file(dir_.file("e/config_resolved.json"));
  EXPECT_EQ(resolved.at("seeds"), nlohmann::json::array({42}));
  EXPECT_EQ(resolved.at("seed_source"), "DPRW_SEED");
  ::setenv("DPRW_SEED", "7", 1);
  const Result flag = pretrain(dir_.file("f"), {"--seed", "9"});
  ::unsetenv("DPRW_SEED");
  EXPECT_EQ(json_file(dir_.file("f/config_resolved.json")).at("seeds"), nlohmann::json::array({9}));
  EXPECT_EQ(run({"pretrain", "--train", train(), "--out", dir_.file("g/m.ckpt"), "--seed", "1", "--seeds", "1,2"})
                .code,
            cli::kExitConfig);
}

TEST_F(CliTest, RejectsBadNumbers) {
  EXPECT_EQ(pretrain(dir_.file("h"), {"--lr", "-1"}).code, cli::kExitConfig);
  EXPECT_EQ(pretrain(dir_.file("h"), {"--jobs", "0"}).code, cli::kExitConfig);
  EXPECT_EQ(pretrain(dir_.file("h"), {"--seeds", "1,x"}).code, cli::kExitConfig);
}

}  // namespace
}  // namespace dprw
