#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "xte/json_io.hpp"

using namespace xte;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI; stdout is captured, stderr goes to `err_path` when given.
Result run_cli(const std::string& args, const std::string& err_path = "/dev/null") {
  std::string cmd = std::string(XTE_CLI_PATH) + " " + args + " 2>" + err_path;
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("xte-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST(Json, MaskRoundTrip) {
  Graph g = build_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  SubgraphMask m = SubgraphMask::from_edges(g, {1});
  m.nodes[0] = true;
  EXPECT_EQ(mask_from_json(g, nlohmann::json::parse(mask_to_json(g, m).dump())), m);
  auto bad = nlohmann::json::parse(R"({"nodes":[0],"edges":[[0,1]]})");
  EXPECT_THROW(mask_from_json(g, bad), Error);
}

TEST(Json, GraphRecordRoundTrip) {
  Graph g = build_graph(3, {{0, 2}}, {{1, 0}, {0, 1}, {0, 0}}, {"red", "blue"});
  std::vector<std::pair<int, int>> gt = {{0, 2}};
  ojson j = graph_to_json(g, 1, &gt);
  Record r = record_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(r.graph, g);
  EXPECT_EQ(r.label, 1);
  EXPECT_EQ(r.gt_edges, gt);
}

TEST_F(Cli, GenWritesJsonlAndManifest) {
  Result r = run_cli("--seed 3 gen --task motif --count 5 --out " + path("m.jsonl"));
  ASSERT_EQ(r.code, 0);
  auto split = split_from_jsonl(read_file(path("m.jsonl")));
  EXPECT_EQ(split.records.size(), 5u);
  auto man = nlohmann::json::parse(read_file(path("m.jsonl.manifest.json")));
  EXPECT_EQ(man["subcommand"], "gen");
  EXPECT_EQ(man["seed"], 3);
  EXPECT_TRUE(man.contains("duration_seconds"));
  EXPECT_TRUE(man.contains("version"));
}

TEST_F(Cli, UsageErrorsExitTwoWithJson) {
  Result r = run_cli("gen --task redblue --bogus", path("err.txt"));
  EXPECT_EQ(r.code, 2);
  auto err = nlohmann::json::parse(read_file(path("err.txt")));
  EXPECT_TRUE(err["error"].contains("code"));
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("gen --task nope").code, 2);
  EXPECT_EQ(run_cli("--help").code, 0);
}

TEST_F(Cli, VerifyRejectsLargeCorpus) {
  Result r = run_cli("verify --max-nodes 9", path("err.txt"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(nlohmann::json::parse(read_file(path("err.txt")))["error"]["code"], "TooLarge");
}

TEST_F(Cli, MissingInputIsReported) {
  Result r = run_cli("explain --classifier edge-exists --graph " + path("none.jsonl"), path("err.txt"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(nlohmann::json::parse(read_file(path("err.txt")))["error"]["code"], "IoError");
}

TEST_F(Cli, ExplainProducesOneReportPerGraph) {
  ASSERT_EQ(run_cli("gen --task redblue --count 3 --min-nodes 4 --max-nodes 5 --out " + path("g.jsonl")).code, 0);
  Result r = run_cli("explain --kind te --classifier red-exists --graph " + path("g.jsonl"));
  ASSERT_EQ(r.code, 0);
  int lines = 0;
  for (char c : r.out) lines += c == '\n';
  EXPECT_EQ(lines, 3);
}

TEST_F(Cli, VerifyLossIdentitiesPasses) {
  Result r = run_cli("verify --suite loss-identities");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(nlohmann::json::parse(r.out)["pass"].get<bool>());
}

TEST_F(Cli, MutantIsCaught) {
  Result good = run_cli("verify --suite suf-nec --max-nodes 3 --classifier no-isolated-nodes");
  Result bad = run_cli("verify --suite suf-nec --max-nodes 3 --classifier no-isolated-nodes --mutant pi-skip-robustness");
  ASSERT_EQ(good.code, 0);
  ASSERT_EQ(bad.code, 0);
  EXPECT_TRUE(nlohmann::json::parse(good.out)["pass"].get<bool>());
  EXPECT_FALSE(nlohmann::json::parse(bad.out)["pass"].get<bool>());
}

TEST_F(Cli, TrainThenRule) {
  ASSERT_EQ(run_cli("--seed 1 train --task redblue --count 40 --epochs 4 --warmup 2 --out " + path("m.json")).code, 0);
  Result r = run_cli("rule --model " + path("m.json"));
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["rows"].size(), 2u);
}
