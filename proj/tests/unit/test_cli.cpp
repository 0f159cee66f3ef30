#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <map>

#include "common.hpp"
#include "gatebench/io.hpp"

using namespace gatebench;
using namespace gbtest;
namespace fs = std::filesystem;

namespace {

int gatebench_cli(const std::string& args, const fs::path& stdout_file = "/dev/null") {
  const std::string cmd =
      std::string(GATEBENCH_CLI_PATH) + " " + args + " > " + stdout_file.string() + " 2> " +
      (fs::temp_directory_path() / "gatebench_cli_stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string last_stderr() { return read_text_file(fs::temp_directory_path() / "gatebench_cli_stderr.txt"); }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
  return out;
}

const fs::path& demo_root() {
  static const fs::path root = [] {
    const auto dir = temp_dir("cli_root");
    EXPECT_EQ(gatebench_cli("init-root --out " + dir.string()), 0);
    return dir;
  }();
  return root;
}

}  // namespace

TEST(Cli, UnknownVerbIsUsageError) {
  EXPECT_EQ(gatebench_cli("launch --out /tmp/x"), 2);
  const Json err = Json::parse(last_stderr());
  EXPECT_EQ(err.at("error"), "usage");
  EXPECT_NE(err.at("detail").get<std::string>().find("launch"), std::string::npos);
  EXPECT_EQ(gatebench_cli(""), 2);
}

TEST(Cli, MissingRequiredFlagIsUsageError) {
  EXPECT_EQ(gatebench_cli("run --plan plan.json --out /tmp/x"), 2);
  EXPECT_EQ(Json::parse(last_stderr()).at("error"), "usage");
  EXPECT_EQ(gatebench_cli("gate --out /tmp/x"), 2);
  EXPECT_EQ(gatebench_cli("replay"), 2);
  EXPECT_EQ(gatebench_cli("replay --bundle a.json --runset b.json"), 2);
}

TEST(Cli, RuntimeErrorIsMachineReadable) {
  const auto out = temp_dir("cli_missing");
  EXPECT_EQ(gatebench_cli("gate --runset " + (out / "nope.json").string() + " --out " + out.string()), 1);
  EXPECT_EQ(Json::parse(last_stderr()).at("error"), "missing_runset");
  EXPECT_EQ(gatebench_cli("study --grid huge --out " + out.string()), 1);
  EXPECT_EQ(Json::parse(last_stderr()).at("error"), "unknown_grid");
}

TEST(Cli, InitRootMatchesShippedFixture) {
  EXPECT_EQ(snapshot(demo_root()), snapshot(GATEBENCH_FIXTURE_DIR "/demo_root"));
}

TEST(Cli, StudyTwiceIsByteIdentical) {
  const auto a = temp_dir("cli_study_a");
  const auto b = temp_dir("cli_study_b");
  ASSERT_EQ(gatebench_cli("study --grid default --seed-base 0 --out " + a.string()), 0);
  ASSERT_EQ(gatebench_cli("study --grid default --seed-base 0 --concurrency 1 --out " + b.string()), 0);
  const auto sa = snapshot(a);
  EXPECT_EQ(sa, snapshot(b));
  ASSERT_TRUE(sa.count("decision_study.json"));
  const auto study = Json::parse(sa.at("decision_study.json"));
  EXPECT_EQ(study.at("admitted"), 48);
  EXPECT_EQ(study.at("cells").size(), 24u);
}

TEST(Cli, GateOnRunsetWithFixtureRunExcludesIt) {
  const auto out = temp_dir("cli_gate");
  ASSERT_EQ(gatebench_cli("run --plan " + (demo_root() / "plan.json").string() + " --release-root " +
                          demo_root().string() + " --out " + (out / "runs").string()),
            0);
  ASSERT_EQ(gatebench_cli("gate --runset " + (out / "runs" / "runset.json").string() + " --out " +
                          (out / "gate").string()),
            0);
  const Json rep = Json::parse(read_text_file(out / "gate" / "gate_report.json"));
  EXPECT_GE(rep.at("excluded").get<int>(), 1);
  EXPECT_GE(rep.at("by_reason").at("fixture_only_provenance").get<int>(), 1);
  EXPECT_TRUE(fs::exists(out / "gate" / "decisions.json"));
  EXPECT_TRUE(fs::exists(out / "gate" / "decision_gate_report.json"));

  ASSERT_EQ(gatebench_cli("report --runset " + (out / "runs" / "runset.json").string() + " --gate " +
                          (out / "gate").string() + " --out " + (out / "report").string()),
            0);
  EXPECT_TRUE(fs::exists(out / "report" / "claim_matrix.json"));
  EXPECT_TRUE(fs::exists(out / "report" / "latency.txt"));
}

TEST(Cli, AllOnDemoPlanWritesClaimMatrixWithDecisionRow) {
  const auto out = temp_dir("cli_all");
  const auto before = snapshot(demo_root());
  ASSERT_EQ(gatebench_cli("all --plan " + (demo_root() / "plan.json").string() + " --release-root " +
                          demo_root().string() + " --out " + out.string()),
            0);
  EXPECT_EQ(snapshot(demo_root()), before);  // inputs untouched
  const Json claims = Json::parse(read_text_file(out / "claim_matrix.json"));
  bool found = false;
  for (const auto& row : claims.at("matrix").at("rows"))
    if (row.at("claim") == "controller_decision") found = true;
  EXPECT_TRUE(found);

  // Idempotent: a second run into the same directory leaves identical bytes.
  const auto first = snapshot(out);
  ASSERT_EQ(gatebench_cli("all --plan " + (demo_root() / "plan.json").string() + " --release-root " +
                          demo_root().string() + " --out " + out.string() + " --concurrency 3"),
            0);
  EXPECT_EQ(snapshot(out), first);
}

TEST(Cli, ReplayBundleRoundTrip) {
  const auto out = temp_dir("cli_replay");
  const fs::path runset = GATEBENCH_FIXTURE_DIR "/web_r1/runset/runset.json";
  ASSERT_EQ(gatebench_cli("replay --runset " + runset.string() + " --class R1 --out " + out.string()), 0);
  const Json results = Json::parse(read_text_file(out / "replay_results.json"));
  ASSERT_EQ(results.size(), 1u);
  EXPECT_TRUE(results[0].at("terminal_match").get<bool>());
  EXPECT_GE(results[0].at("reduction").get<double>(), 0.99);

  fs::path bundle;
  for (const auto& e : fs::directory_iterator(out / "bundles")) bundle = e.path();
  ASSERT_FALSE(bundle.empty());
  const auto printed = out / "stdout.json";
  ASSERT_EQ(gatebench_cli("replay --bundle " + bundle.string(), printed), 0);
  EXPECT_EQ(Json::parse(read_text_file(printed)), results);
}
