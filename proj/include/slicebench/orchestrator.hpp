#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "slicebench/engine.hpp"
#include "slicebench/ingest.hpp"
#include "slicebench/serialize.hpp"
#include "slicebench/store.hpp"

namespace slicebench {

using EngineFactory = std::function<std::unique_ptr<ContainerEngine>(const HostBinding&)>;

/// DockerEngine for engine-api hosts, SimulatedEngine for simulated ones.
EngineFactory default_engine_factory(SimulationConfig simulation = {});

struct CampaignConfig {
  std::size_t max_parallel_hosts = 8;
  std::chrono::milliseconds deadline = std::chrono::minutes{30};
  AliasTable aliases = AliasTable::defaults();
  Taxonomy taxonomy = default_taxonomy();
};

struct CampaignResult {
  RunRecord run;
  BenchmarkDataset dataset;
  CompletenessReport report;
};

/// Runs benchmark campaigns: one capped container per host, output parsed
/// into a dataset and persisted. Each run has a coordinator thread that owns
/// the run state; per-host workers report lifecycle events to it through a
/// queue. poll_status() returns a consistent snapshot at any time.
class Orchestrator {
 public:
  Orchestrator(DatasetStore* store, EngineFactory factory, CampaignConfig config = {});
  ~Orchestrator();

  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  /// Starts asynchronously and returns the run id. Throws InvalidArgument for
  /// an empty fleet or bad spec, Conflict if any host is already in an active run.
  std::string start_campaign(std::vector<HostBinding> fleet, ContainerSpec spec);

  /// Throws UnknownRun.
  RunRecord poll_status(std::string_view run_id) const;
  /// Blocks until every host is terminal and the dataset is persisted.
  RunRecord wait(std::string_view run_id) const;
  std::optional<BenchmarkDataset> dataset_for(std::string_view run_id) const;
  std::vector<RunRecord> list_runs() const;
  std::vector<VmDescriptor> known_vms() const;

  CampaignResult run_campaign(std::vector<HostBinding> fleet, ContainerSpec spec);

 private:
  struct HostEvent {
    std::size_t host = 0;
    HostState state = HostState::Pending;
    std::string reason;
    double duration_seconds = 0.0;
    double benchmark_seconds = 0.0;
    std::vector<AttributeMeasurement> measurements;
  };

  class EventQueue {
   public:
    void push(HostEvent event);
    HostEvent pop();

   private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::vector<HostEvent> events_;
  };

  struct Run {
    RunRecord record;
    std::vector<HostBinding> fleet;
    BenchmarkDataset dataset;
    CompletenessReport report;
    bool settled = false;
    mutable std::mutex mutex;
    mutable std::condition_variable settled_cv;
    EventQueue events;
    std::thread coordinator;
  };

  void coordinate(Run& run);
  void benchmark_host(Run& run, std::size_t host_index);
  void apply(Run& run, HostEvent& event);
  std::shared_ptr<Run> find(std::string_view run_id) const;
  std::string next_run_id();

  DatasetStore* store_;
  EngineFactory factory_;
  CampaignConfig config_;

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Run>, std::less<>> runs_;
  std::set<std::string> busy_hosts_;
  std::uint64_t run_counter_ = 0;
};

}  // namespace slicebench
