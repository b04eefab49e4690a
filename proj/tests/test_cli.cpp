#include <gtest/gtest.h>

#include <httplib.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "slicebench/cli.hpp"
#include "testkit.hpp"

using namespace slicebench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("slicebench-cli-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

class Cli {
 public:
  Outcome operator()(std::vector<std::string> args) const {
    args.insert(args.begin(), {"slicebench", "--store", (dir.path / "store").string()});
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
  }
  TempDir dir;
};

std::string dataset_id_of(const std::string& out) {
  std::smatch m;
  if (!std::regex_search(out, m, std::regex(R"(dataset_id: (\S+))"))) return "";
  return m[1];
}

}  // namespace

TEST(Cli, BenchmarkAndRank) {
  Cli cli;
  const auto bench = cli({"benchmark", testkit::fixture_path("inventory/reference_fleet_simulated.json"), "--memory-mib", "100"});
  ASSERT_EQ(bench.code, kExitOk) << bench.err;
  const auto id = dataset_id_of(bench.out);
  ASSERT_FALSE(id.empty()) << bench.out;
  EXPECT_NE(bench.out.find("cr1.8xlarge"), std::string::npos);

  const auto rank = cli({"rank", "--dataset", id, "--weights", "4,3,5,0"});
  ASSERT_EQ(rank.code, kExitOk) << rank.err;
  EXPECT_NE(rank.out.find("hs1.8xlarge"), std::string::npos) << rank.out;

  const auto records = cli({"rank", "--dataset", id, "--weights", "4,3,5,0", "--format", "records"});
  ASSERT_EQ(records.code, kExitOk);
  EXPECT_EQ(json::parse(records.out)["entries"].size(), 10u);

  const auto list = cli({"datasets", "--format", "records"});
  ASSERT_EQ(list.code, kExitOk);
  EXPECT_EQ(json::parse(list.out)[0]["dataset_id"], id);
}

TEST(Cli, UsageErrorsExitTwo) {
  Cli cli;
  EXPECT_EQ(cli({"benchmark", "/nonexistent/inventory.json"}).code, kExitUsage);
  EXPECT_EQ(cli({"benchmark", testkit::fixture_path("inventory/reference_fleet_simulated.json"), "--cpu-mode", "turbo"}).code,
            kExitUsage);
  EXPECT_EQ(cli({"rank", "--dataset", "ds-1", "--weights", "6,0,0,0"}).code, kExitUsage);
  EXPECT_EQ(cli({"rank", "--dataset", "ds-1", "--weights", "1,1,1"}).code, kExitUsage);
  EXPECT_EQ(cli({"rank", "--dataset", "ds-1", "--weights", "1,1,1,1", "--mode", "empirical"}).code, kExitUsage);
  EXPECT_EQ(cli({"rank", "--dataset", "ds-1", "--weights", "1,1,1,1", "--historic-max-age-days", "0"}).code,
            kExitUsage);
  EXPECT_EQ(cli({"rank", "--weights", "1,1,1,1"}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"serve", "--listen", "nonsense"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, OperationalErrorsExitOne) {
  Cli cli;
  const auto missing = cli({"rank", "--dataset", "ds-999999", "--weights", "1,1,1,1"});
  EXPECT_EQ(missing.code, kExitFailure);
  EXPECT_NE(missing.err.find("NotFound"), std::string::npos) << missing.err;
}

TEST(Cli, HybridNeedsHistoricThenWorksAfterImport) {
  Cli cli;
  const auto bench = cli({"benchmark", testkit::fixture_path("inventory/reference_fleet_simulated.json")});
  ASSERT_EQ(bench.code, kExitOk) << bench.err;
  const auto id = dataset_id_of(bench.out);

  const auto refused = cli({"rank", "--dataset", id, "--weights", "4,3,5,0", "--mode", "hybrid"});
  EXPECT_EQ(refused.code, kExitFailure);
  EXPECT_NE(refused.err.find("--mode lightweight"), std::string::npos) << refused.err;

  const auto exported = (cli.dir.path / "export.jsonl").string();
  ASSERT_EQ(cli({"export", "--dataset", id, "--out", exported}).code, kExitOk);
  const auto imported = cli({"import", exported, "--role", "historic"});
  ASSERT_EQ(imported.code, kExitOk) << imported.err;

  const auto hybrid = cli({"rank", "--dataset", id, "--weights", "4,3,5,0", "--mode", "hybrid", "--format", "records"});
  ASSERT_EQ(hybrid.code, kExitOk) << hybrid.err;
  const auto table = json::parse(hybrid.out);
  EXPECT_EQ(table["mode"], "hybrid");
  EXPECT_EQ(table["dataset_ids"].size(), 2u);

  // An older historic import does not displace the recent one.
  const auto old = cli({"import", exported, "--role", "historic", "--stored-at", "2000-01-01T00:00:00Z"});
  ASSERT_EQ(old.code, kExitOk);
  EXPECT_EQ(cli({"rank", "--dataset", id, "--weights", "4,3,5,0", "--mode", "hybrid"}).code, kExitOk);
}

TEST(Cli, EvaluateCaseStudy) {
  Cli cli;
  const auto res = cli({"evaluate", "--timings", testkit::fixture_path("casestudies/timings.jsonl"), "--ranktables",
                        testkit::fixture_path("casestudies/cs1_lightweight.json")});
  ASSERT_EQ(res.code, kExitOk) << res.err;
  for (const char* v : {"89.1", "87.9", "92.1", "90.3", "86.7"}) {
    EXPECT_NE(res.out.find(v), std::string::npos) << v << "\n" << res.out;
  }

  const auto records =
      cli({"evaluate", "--timings", testkit::fixture_path("casestudies/timings.jsonl"), "--ranktables",
           testkit::fixture_path("casestudies/cs3_hybrid.json"), "--format", "records"});
  ASSERT_EQ(records.code, kExitOk) << records.err;
  const auto j = json::parse(records.out);
  ASSERT_EQ(j.size(), 6u);
  EXPECT_EQ(j[0]["method"], "hybrid");
}

TEST(Cli, EvaluateRejectsUnknownVms) {
  Cli cli;
  const auto path = (cli.dir.path / "tables.json").string();
  std::ofstream(path) << R"([{"mode":"lightweight","application":"molecular-dynamics","execution_mode":"sequential",
    "entries":[{"vm_id":"m1.xlarge","rank":1},{"vm_id":"z9.mega","rank":2}]}])";
  const auto res = cli({"evaluate", "--timings", testkit::fixture_path("casestudies/timings.jsonl"), "--ranktables", path});
  EXPECT_NE(res.code, kExitOk);
  EXPECT_NE(res.err.find("z9.mega"), std::string::npos) << res.err;
}

// The real binary serves HTTP until SIGINT and then exits cleanly.
TEST(CliProcess, ServeStopsOnSigint) {
  TempDir dir;
  const int port = testkit::free_loopback_port();
  const std::string store = (dir.path / "store").string();
  const std::string listen = "127.0.0.1:" + std::to_string(port);
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    if (!std::freopen("/dev/null", "w", stdout)) _exit(126);
    execl(SLICEBENCH_CLI_PATH, "slicebench", "--store", store.c_str(), "serve", "--listen", listen.c_str(),
          static_cast<char*>(nullptr));
    _exit(127);
  }

  httplib::Client client("127.0.0.1", port);
  bool up = false;
  for (int i = 0; i < 200 && !up; ++i) {
    auto res = client.Get("/datasets");
    up = res && res->status == 200;
    if (!up) std::this_thread::sleep_for(std::chrono::milliseconds{25});
  }
  EXPECT_TRUE(up);

  kill(pid, SIGINT);
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitOk);
}
