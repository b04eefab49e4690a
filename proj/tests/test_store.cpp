#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "slicebench/store.hpp"

using namespace slicebench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("slicebench-store-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

BenchmarkDataset make_ds(const std::vector<std::string>& vms, std::int64_t mib = 100,
                         CpuMode mode = CpuMode::SingleCore, double base = 1.0) {
  ContainerSpec spec;
  spec.memory_mib = mib;
  spec.cpu_mode = mode;
  BenchmarkDataset ds("", DatasetRole::Current, spec);
  double v = base;
  for (const auto& vm : vms) {
    for (const char* key : {"stat_us", "pipe_bw_mbps"}) {
      AttributeMeasurement m;
      m.vm_id = vm;
      m.attribute_key = key;
      m.value = v;
      v += 1.0;
      m.unit = "us";
      m.container = spec;
      m.captured_at = parse_timestamp("2026-10-01T00:00:00Z");
      ds.add(m);
    }
  }
  return ds;
}

const Timestamp kNow = parse_timestamp("2026-10-17T00:00:00Z");

}  // namespace

TEST(FileStore, PutGetRoundTrip) {
  TempDir dir;
  FileStore store(dir.path);
  const auto ds = make_ds({"a", "b"});
  const std::string id = store.put_dataset(ds, DatasetRole::Current, kNow);
  const auto got = store.get_dataset(id);
  EXPECT_TRUE(got.dataset.content_equal(ds));
  EXPECT_EQ(got.dataset.dataset_id(), id);
  EXPECT_EQ(got.stored_at, kNow);
  EXPECT_EQ(got.checksum.size(), 64u);

  // A second handle on the same directory sees the same data.
  FileStore reopened(dir.path);
  EXPECT_TRUE(reopened.get_dataset(id).dataset.content_equal(ds));
  ASSERT_EQ(reopened.list_datasets().size(), 1u);
  EXPECT_EQ(reopened.list_datasets()[0].vm_ids, (std::vector<std::string>{"a", "b"}));
}

TEST(FileStore, AppendOnlyIdsAreDistinct) {
  TempDir dir;
  FileStore store(dir.path);
  const auto a = store.put_dataset(make_ds({"a"}), DatasetRole::Current);
  const auto b = store.put_dataset(make_ds({"a"}), DatasetRole::Current);
  EXPECT_NE(a, b);
  EXPECT_EQ(store.list_datasets().size(), 2u);
}

TEST(FileStore, UnknownIdIsNotFound) {
  TempDir dir;
  FileStore store(dir.path);
  try {
    store.get_dataset("ds-999999");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotFound);
  }
}

TEST(FileStore, TamperedPayloadIsCorrupt) {
  TempDir dir;
  FileStore store(dir.path);
  const auto id = store.put_dataset(make_ds({"a"}), DatasetRole::Current);
  for (const auto& entry : fs::directory_iterator(dir.path / "datasets")) {
    std::ofstream(entry.path(), std::ios::app) << "\n";
  }
  try {
    store.get_dataset(id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StorageCorrupt);
  }
}

TEST(FileStore, TornIndexTailIgnored) {
  TempDir dir;
  {
    FileStore store(dir.path);
    store.put_dataset(make_ds({"a"}), DatasetRole::Current);
  }
  std::ofstream(dir.path / "index.jsonl", std::ios::app) << R"({"dataset_id":"ds-0000)";
  FileStore store(dir.path);
  EXPECT_EQ(store.list_datasets().size(), 1u);
  const auto id = store.put_dataset(make_ds({"b"}), DatasetRole::Current);
  ASSERT_EQ(store.list_datasets().size(), 2u);
  EXPECT_EQ(store.list_datasets()[1].dataset_id, id);
  EXPECT_TRUE(store.get_dataset(id).dataset.content_equal(make_ds({"b"})));
}

TEST(FileStore, RunRecordsReplaceById) {
  TempDir dir;
  FileStore store(dir.path);
  RunRecord r;
  r.run_id = "run-1";
  r.started_at = kNow;
  r.hosts.push_back(HostStatus{"a", HostState::Pending, {}, 0.0, 0.0});
  store.put_run(r);
  r.hosts[0].state = HostState::Done;
  r.finished_at = kNow + std::chrono::seconds{5};
  store.put_run(r);
  const auto got = store.get_run("run-1");
  ASSERT_TRUE(got);
  EXPECT_EQ(got->hosts[0].state, HostState::Done);
  EXPECT_EQ(store.list_runs().size(), 1u);
  EXPECT_FALSE(store.get_run("run-2"));
  RunRecord escape;
  escape.run_id = "../escape";
  EXPECT_THROW(store.put_run(escape), Error);
}

TEST(LatestHistoric, SelectsNewestEligible) {
  TempDir dir;
  FileStore store(dir.path);
  const std::vector<std::string> vms{"a", "b"};
  ContainerSpec slice;

  // Wrong role, wrong slice, too old, missing a VM, future: all ineligible.
  store.put_dataset(make_ds(vms), DatasetRole::Current, kNow - std::chrono::days{1});
  store.put_dataset(make_ds(vms, 500), DatasetRole::Historic, kNow - std::chrono::days{1});
  store.put_dataset(make_ds(vms, 100, CpuMode::AllCores), DatasetRole::Historic, kNow - std::chrono::days{1});
  store.put_dataset(make_ds(vms), DatasetRole::Historic, kNow - std::chrono::days{31});
  store.put_dataset(make_ds({"a"}), DatasetRole::Historic, kNow - std::chrono::hours{1});
  store.put_dataset(make_ds(vms), DatasetRole::Historic, kNow + std::chrono::hours{1});
  try {
    store.latest_historic(vms, slice, 30, kNow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoEligibleHistoric);
  }

  const auto older = store.put_dataset(make_ds(vms), DatasetRole::Historic, kNow - std::chrono::days{10});
  const auto superset = store.put_dataset(make_ds({"a", "b", "c"}), DatasetRole::Historic, kNow - std::chrono::days{2});
  EXPECT_EQ(store.latest_historic(vms, slice, 30, kNow).dataset.dataset_id(), superset);
  EXPECT_EQ(store.latest_historic(vms, slice, 5, kNow).dataset.dataset_id(), superset);
  (void)older;

  // Same timestamp: larger id wins.
  const auto tie = store.put_dataset(make_ds(vms), DatasetRole::Historic, kNow - std::chrono::days{2});
  EXPECT_EQ(store.latest_historic(vms, slice, 30, kNow).dataset.dataset_id(), tie);
}

TEST(FileStore, SeparateHandlesShareIdsSafely) {
  TempDir dir;
  FileStore a(dir.path), b(dir.path);
  std::set<std::string> ids;
  std::mutex m;
  std::vector<std::thread> threads;
  for (FileStore* s : {&a, &b}) {
    threads.emplace_back([&, s] {
      for (int i = 0; i < 10; ++i) {
        auto id = s->put_dataset(make_ds({"vm"}), DatasetRole::Current);
        std::lock_guard lock(m);
        ids.insert(id);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ids.size(), 20u);
  EXPECT_EQ(FileStore(dir.path).list_datasets().size(), 20u);
}

TEST(FileStore, ConcurrentWritersGetUniqueIds) {
  TempDir dir;
  FileStore store(dir.path);
  std::vector<std::thread> threads;
  std::mutex m;
  std::set<std::string> ids;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 5; ++i) {
        auto id = store.put_dataset(make_ds({"vm" + std::to_string(t)}), DatasetRole::Current);
        std::lock_guard lock(m);
        ids.insert(id);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ids.size(), 40u);
  EXPECT_EQ(store.list_datasets().size(), 40u);
}
