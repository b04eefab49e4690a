#include <gtest/gtest.h>

#include <httplib.h>

#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include "slicebench/api.hpp"
#include "slicebench/cli.hpp"
#include "slicebench/simulator.hpp"
#include "testkit.hpp"

using namespace slicebench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("slicebench-api-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

ApiRequest get(std::string path, std::map<std::string, std::string> query = {}) {
  return ApiRequest{"GET", std::move(path), std::move(query), ""};
}

ApiRequest post_runs(const json& body) { return ApiRequest{"POST", "/runs", {}, body.dump()}; }

json fleet_json(const std::vector<HostBinding>& fleet) {
  json hosts = json::array();
  for (const auto& h : fleet) hosts.push_back(to_json(h));
  return hosts;
}

struct Fixture {
  TempDir dir;
  FileStore store{dir.path};
  testkit::RecordingEngineHub hub;
  Orchestrator orch{&store, hub.factory()};
  ApiService api{store, orch};

  /// Benchmarks the reference fleet synchronously and returns the dataset id.
  std::string seed_dataset(std::int64_t mib = 100) {
    ContainerSpec spec;
    spec.memory_mib = mib;
    Orchestrator sim(&store, default_engine_factory());
    return sim.run_campaign(reference_fleet(), spec).run.dataset_id.value();
  }
};

}  // namespace

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status_for(Errc::InvalidArgument), 400);
  EXPECT_EQ(http_status_for(Errc::MalformedNumber), 400);
  EXPECT_EQ(http_status_for(Errc::NotFound), 404);
  EXPECT_EQ(http_status_for(Errc::UnknownRun), 404);
  EXPECT_EQ(http_status_for(Errc::Conflict), 409);
  EXPECT_EQ(http_status_for(Errc::NoEligibleHistoric), 409);
  EXPECT_EQ(http_status_for(Errc::StaleHistoricData), 409);
  EXPECT_EQ(http_status_for(Errc::IncompleteDataset), 422);
  EXPECT_EQ(http_status_for(Errc::StorageCorrupt), 500);
}

TEST(ListenAddress, Parsing) {
  EXPECT_EQ(parse_listen_address("127.0.0.1:8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_listen_address("[::1]:0"), (std::pair<std::string, int>{"::1", 0}));
  for (const char* bad : {"", "8080", "host:", ":80", "host:70000", "host:abc", "host:-1"}) {
    EXPECT_THROW(parse_listen_address(bad), Error) << bad;
  }
}

TEST(ApiRuns, StartPollAndList) {
  Fixture f;
  const auto resp = f.api.handle(post_runs({{"hosts", fleet_json(reference_fleet())}, {"memory_mib", 100},
                                            {"cpu_mode", "single-core"}}));
  ASSERT_EQ(resp.status, 202) << resp.body.dump();
  const std::string run_id = resp.body.at("run_id");
  f.orch.wait(run_id);

  const auto run = f.api.handle(get("/runs/" + run_id));
  ASSERT_EQ(run.status, 200);
  EXPECT_TRUE(run.body["finished"].get<bool>());
  EXPECT_EQ(run.body["hosts"].size(), 10u);
  EXPECT_TRUE(run.body["dataset_id"].is_string());

  const auto list = f.api.handle(get("/runs"));
  ASSERT_EQ(list.status, 200);
  EXPECT_EQ(list.body["total"], 1);
  EXPECT_EQ(list.body["items"][0]["run_id"], run_id);

  const auto vms = f.api.handle(get("/vms"));
  EXPECT_EQ(vms.body["total"], 10);
}

TEST(ApiRuns, ValidationAndConflicts) {
  Fixture f;
  const auto hosts = fleet_json(reference_fleet());
  EXPECT_EQ(f.api.handle(post_runs({{"hosts", hosts}, {"memory_mib", 0}, {"cpu_mode", "single-core"}})).status, 400);
  EXPECT_EQ(f.api.handle(post_runs({{"hosts", hosts}, {"memory_mib", 100}, {"cpu_mode", "turbo"}})).status, 400);
  EXPECT_EQ(f.api.handle(post_runs({{"memory_mib", 100}, {"cpu_mode", "single-core"}})).status, 400);
  EXPECT_EQ(f.api.handle(post_runs({{"inventory", "/nonexistent.json"}, {"memory_mib", 100},
                                    {"cpu_mode", "single-core"}}))
                .status,
            400);
  EXPECT_EQ(f.api.handle(ApiRequest{"POST", "/runs", {}, "{not json"}).status, 400);

  f.hub.work_time = std::chrono::milliseconds{300};
  const json body{{"hosts", hosts}, {"memory_mib", 100}, {"cpu_mode", "single-core"}};
  const auto first = f.api.handle(post_runs(body));
  ASSERT_EQ(first.status, 202);
  const auto second = f.api.handle(post_runs(body));
  EXPECT_EQ(second.status, 409);
  EXPECT_EQ(second.body["code"], "Conflict");
  f.orch.wait(first.body["run_id"].get<std::string>());
}

TEST(ApiRuns, UnknownRunAndRoutes) {
  Fixture f;
  const auto r = f.api.handle(get("/runs/run-404"));
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body["code"], "UnknownRun");
  EXPECT_EQ(f.api.handle(get("/nope")).status, 404);
  EXPECT_EQ(f.api.handle(ApiRequest{"DELETE", "/runs", {}, ""}).status, 405);
}

TEST(ApiRankings, RanksStoredDataset) {
  Fixture f;
  const auto id = f.seed_dataset();
  const auto r = f.api.handle(get("/rankings", {{"dataset", id}, {"weights", "4,3,5,0"}}));
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["entries"].size(), 10u);
  EXPECT_EQ(r.body["mode"], "lightweight");

  EXPECT_EQ(f.api.handle(get("/rankings", {{"dataset", id}, {"weights", "7,0,0,0"}})).status, 400);
  EXPECT_EQ(f.api.handle(get("/rankings", {{"dataset", id}})).status, 400);
  EXPECT_EQ(f.api.handle(get("/rankings", {{"dataset", "ds-999999"}, {"weights", "1,1,1,1"}})).status, 404);
  EXPECT_EQ(f.api.handle(get("/rankings", {{"dataset", id}, {"weights", "1,1,1,1"}, {"max_age_days", "0"}})).status,
            400);
  const auto hybrid = f.api.handle(get("/rankings", {{"dataset", id}, {"weights", "1,1,1,1"}, {"mode", "hybrid"}}));
  EXPECT_EQ(hybrid.status, 409);
  EXPECT_EQ(hybrid.body["code"], "NoEligibleHistoric");
}

TEST(ApiRankings, MatchesCliRecords) {
  Fixture f;
  const auto id = f.seed_dataset();
  const auto api = f.api.handle(get("/rankings", {{"dataset", id}, {"weights", "4,3,5,0"}}));
  ASSERT_EQ(api.status, 200);

  const std::string store = f.dir.path.string();
  const char* argv[] = {"slicebench", "--store", store.c_str(), "rank", "--dataset", id.c_str(),
                        "--weights", "4,3,5,0", "--format", "records"};
  std::ostringstream out, err;
  ASSERT_EQ(run_cli(10, argv, out, err), kExitOk) << err.str();
  EXPECT_EQ(json::parse(out.str()), api.body);
}

TEST(ApiListings, PaginationAndIdempotence) {
  Fixture f;
  for (int i = 0; i < 3; ++i) f.seed_dataset(100 + i * 100);
  const auto all = f.api.handle(get("/datasets"));
  ASSERT_EQ(all.status, 200);
  EXPECT_EQ(all.body["total"], 3);
  EXPECT_EQ(all.body["limit"], 100);
  EXPECT_EQ(all.body["items"].size(), 3u);

  const auto page = f.api.handle(get("/datasets", {{"offset", "1"}, {"limit", "1"}}));
  ASSERT_EQ(page.status, 200);
  EXPECT_EQ(page.body["items"].size(), 1u);
  EXPECT_EQ(page.body["items"][0], all.body["items"][1]);
  EXPECT_EQ(f.api.handle(get("/datasets", {{"offset", "10"}})).body["items"].size(), 0u);

  EXPECT_EQ(f.api.handle(get("/datasets", {{"limit", "0"}})).status, 400);
  EXPECT_EQ(f.api.handle(get("/datasets", {{"limit", "1001"}})).status, 400);
  EXPECT_EQ(f.api.handle(get("/datasets", {{"offset", "-1"}})).status, 400);
  EXPECT_EQ(f.api.handle(get("/datasets", {{"limit", "x"}})).status, 400);

  EXPECT_EQ(f.api.handle(get("/datasets")).body, all.body);
  EXPECT_EQ(f.api.handle(get("/runs")).body, f.api.handle(get("/runs")).body);
}

TEST(ApiHttp, ServesOverLoopback) {
  Fixture f;
  const auto id = f.seed_dataset();
  const int port = f.api.bind("127.0.0.1:0");
  ASSERT_GT(port, 0);
  std::thread server([&] { f.api.serve(); });

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/rankings?dataset=" + id + "&weights=4,3,5,0");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["entries"].size(), 10u);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");

  res = client.Get("/runs/run-404");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["code"], "UnknownRun");

  res = client.Options("/runs");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);

  // A second service cannot take the same port.
  Orchestrator other_orch(&f.store, f.hub.factory());
  ApiService other(f.store, other_orch);
  try {
    other.bind("127.0.0.1:" + std::to_string(port));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Conflict);
  }

  f.api.stop();
  server.join();
}
