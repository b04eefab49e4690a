#include "slicebench/orchestrator.hpp"

#include <cstdio>
#include <random>
#include <semaphore>

namespace slicebench {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace

EngineFactory default_engine_factory(SimulationConfig simulation) {
  return [simulation](const HostBinding& host) -> std::unique_ptr<ContainerEngine> {
    if (host.executor.kind == ExecutorBinding::Kind::Simulated) {
      return std::make_unique<SimulatedEngine>(host.vm, host.executor.profile_seed, simulation);
    }
    return std::make_unique<DockerEngine>(host.executor.endpoint);
  };
}

void Orchestrator::EventQueue::push(HostEvent event) {
  {
    std::lock_guard lock(mutex_);
    events_.push_back(std::move(event));
  }
  cv_.notify_one();
}

Orchestrator::HostEvent Orchestrator::EventQueue::pop() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return !events_.empty(); });
  HostEvent e = std::move(events_.front());
  events_.erase(events_.begin());
  return e;
}

Orchestrator::Orchestrator(DatasetStore* store, EngineFactory factory, CampaignConfig config)
    : store_(store), factory_(std::move(factory)), config_(std::move(config)) {
  if (config_.max_parallel_hosts == 0) config_.max_parallel_hosts = 1;
}

Orchestrator::~Orchestrator() {
  std::map<std::string, std::shared_ptr<Run>, std::less<>> runs;
  {
    std::lock_guard lock(mutex_);
    runs = runs_;
  }
  for (auto& [id, run] : runs) {
    if (run->coordinator.joinable()) run->coordinator.join();
  }
}

std::string Orchestrator::next_run_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto now = now_utc();
  std::string stamp = format_timestamp(now);  // 2026-10-17T12:00:00Z
  std::string compact;
  for (char c : stamp) {
    if (std::isdigit(static_cast<unsigned char>(c))) compact += c;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "run-%s-%04llx%02llu", compact.c_str(),
                static_cast<unsigned long long>(rng() & 0xffff),
                static_cast<unsigned long long>(++run_counter_ % 100));
  return buf;
}

std::string Orchestrator::start_campaign(std::vector<HostBinding> fleet, ContainerSpec spec) {
  if (fleet.empty()) throw Error(Errc::InvalidArgument, "fleet is empty");
  spec.validate();
  std::set<std::string> ids;
  for (const auto& h : fleet) {
    h.vm.validate();
    if (!ids.insert(h.vm.id).second) throw Error(Errc::InvalidArgument, "duplicate host '" + h.vm.id + "'");
  }

  auto run = std::make_shared<Run>();
  std::string run_id;
  {
    std::lock_guard lock(mutex_);
    for (const auto& id : ids) {
      if (busy_hosts_.count(id) != 0) {
        throw Error(Errc::Conflict, "host '" + id + "' is already being benchmarked");
      }
    }
    run_id = next_run_id();
    busy_hosts_.insert(ids.begin(), ids.end());

    run->record.run_id = run_id;
    run->record.container = spec;
    run->record.started_at = now_utc();
    for (const auto& h : fleet) run->record.hosts.push_back(HostStatus{h.vm.id, HostState::Pending, {}, 0.0, 0.0});
    run->fleet = std::move(fleet);
    run->dataset = BenchmarkDataset({}, DatasetRole::Current, spec);
    runs_.emplace(run_id, run);
  }
  if (store_ != nullptr) store_->put_run(run->record);
  run->coordinator = std::thread([this, run] { coordinate(*run); });
  return run_id;
}

void Orchestrator::benchmark_host(Run& run, std::size_t host_index) {
  const HostBinding& host = run.fleet[host_index];
  const auto t0 = Clock::now();
  double bench_seconds = 0.0;
  auto fail = [&](const std::string& reason) {
    run.events.push(HostEvent{host_index, HostState::Failed, reason, seconds_between(t0, Clock::now()),
                              bench_seconds, {}});
  };

  try {
    run.events.push(HostEvent{host_index, HostState::Provisioning, {}, 0.0, 0.0, {}});
    auto engine = factory_(host);
    const auto request = make_create_request(host.vm, run.record.container, run.record.run_id);
    const std::string container_id = engine->create(request);

    // Removal runs on every path once the container exists.
    struct Cleanup {
      ContainerEngine& engine;
      const std::string& id;
      bool released = false;
      void release() {
        released = true;
        for (int attempt = 0; attempt < 2; ++attempt) {
          try {
            engine.remove(id);
            return;
          } catch (const std::exception&) {
          }
        }
      }
      ~Cleanup() {
        if (!released) release();
      }
    } cleanup{*engine, container_id};

    run.events.push(HostEvent{host_index, HostState::Benchmarking, {}, 0.0, 0.0, {}});
    const auto b0 = Clock::now();
    engine->start(container_id);
    const auto waited = engine->wait(container_id, config_.deadline);
    bench_seconds = seconds_between(b0, Clock::now());
    if (waited.timed_out) {
      throw Error(Errc::BenchmarkTimeout, host.vm.id + ": benchmark exceeded " +
                                              std::to_string(config_.deadline.count()) + " ms");
    }
    if (waited.exit_code != 0) {
      throw Error(Errc::EngineError, host.vm.id + ": benchmark exited with code " + std::to_string(waited.exit_code));
    }

    run.events.push(HostEvent{host_index, HostState::Collecting, {}, 0.0, 0.0, {}});
    RawBenchmarkOutput raw{host.vm.id, run.record.container, engine->logs(container_id)};
    auto parsed = parse_tool_output(raw, now_utc(), config_.aliases, config_.taxonomy);
    if (parsed.measurements.empty()) throw Error(Errc::EmptyOutput, host.vm.id + ": no measurements recognised");

    HostEvent done{host_index, HostState::Done, {}, 0.0, bench_seconds, std::move(parsed.measurements)};
    // Duration is taken after removal so it covers the whole host lifecycle.
    cleanup.release();
    done.duration_seconds = seconds_between(t0, Clock::now());
    run.events.push(std::move(done));
  } catch (const Error& e) {
    fail(std::string(to_string(e.code())) + ": " + e.what());
  } catch (const std::exception& e) {
    fail(std::string("EngineError: ") + e.what());
  }
}

void Orchestrator::apply(Run& run, HostEvent& event) {
  std::lock_guard lock(run.mutex);
  HostStatus& status = run.record.hosts[event.host];
  if (!can_transition(status.state, event.state)) return;
  status.state = event.state;
  if (is_terminal(event.state)) {
    status.duration_seconds = event.duration_seconds;
    status.benchmark_seconds = event.benchmark_seconds;
    status.reason = event.reason;
  }
  for (auto& m : event.measurements) {
    m.container = run.record.container;
    run.dataset.add(std::move(m));
  }
}

void Orchestrator::coordinate(Run& run) {
  const auto t0 = Clock::now();
  const std::size_t hosts = run.fleet.size();
  std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(std::min(config_.max_parallel_hosts, hosts)));
  std::vector<std::thread> workers;
  workers.reserve(hosts);
  for (std::size_t i = 0; i < hosts; ++i) {
    workers.emplace_back([this, &run, &slots, i] {
      slots.acquire();
      benchmark_host(run, i);
      slots.release();
    });
  }

  std::size_t terminal = 0;
  while (terminal < hosts) {
    HostEvent e = run.events.pop();
    const bool ends = is_terminal(e.state);
    try {
      apply(run, e);
    } catch (const Error& err) {
      // A worker's data could not be merged; mark that host failed instead.
      std::lock_guard lock(run.mutex);
      auto& st = run.record.hosts[e.host];
      st.state = HostState::Failed;
      st.reason = std::string(to_string(err.code())) + ": " + err.what();
    }
    if (ends) ++terminal;
  }
  for (auto& w : workers) w.join();

  CompletenessReport report;
  BenchmarkDataset dataset;
  {
    std::lock_guard lock(run.mutex);
    std::vector<VmDescriptor> vms;
    for (const auto& h : run.fleet) vms.push_back(h.vm);
    report = validate_dataset(run.dataset, vms, config_.taxonomy);
    run.record.dataset_complete = report.complete;
    dataset = run.dataset;
  }

  std::optional<std::string> dataset_id;
  std::string store_error;
  if (store_ != nullptr && !dataset.empty()) {
    try {
      dataset_id = store_->put_dataset(dataset, DatasetRole::Current);
    } catch (const std::exception& e) {
      store_error = e.what();
    }
  }

  RunRecord snapshot;
  {
    std::lock_guard lock(run.mutex);
    if (dataset_id) {
      run.record.dataset_id = dataset_id;
      run.dataset.set_dataset_id(*dataset_id);
    }
    run.record.finished_at = now_utc();
    run.record.total_seconds = seconds_between(t0, Clock::now());
    run.report = std::move(report);
    snapshot = run.record;
  }
  if (store_ != nullptr) {
    try {
      store_->put_run(snapshot);
    } catch (const std::exception&) {
    }
  }
  {
    std::lock_guard lock(mutex_);
    for (const auto& h : run.fleet) busy_hosts_.erase(h.vm.id);
  }
  {
    std::lock_guard lock(run.mutex);
    run.settled = true;
  }
  run.settled_cv.notify_all();
}

std::shared_ptr<Orchestrator::Run> Orchestrator::find(std::string_view run_id) const {
  std::lock_guard lock(mutex_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw Error(Errc::UnknownRun, "unknown run '" + std::string(run_id) + "'");
  return it->second;
}

RunRecord Orchestrator::poll_status(std::string_view run_id) const {
  auto run = find(run_id);
  std::lock_guard lock(run->mutex);
  RunRecord snapshot = run->record;
  if (!run->settled) snapshot.finished_at.reset();
  return snapshot;
}

RunRecord Orchestrator::wait(std::string_view run_id) const {
  auto run = find(run_id);
  std::unique_lock lock(run->mutex);
  run->settled_cv.wait(lock, [&] { return run->settled; });
  return run->record;
}

std::optional<BenchmarkDataset> Orchestrator::dataset_for(std::string_view run_id) const {
  auto run = find(run_id);
  std::lock_guard lock(run->mutex);
  if (!run->settled) return std::nullopt;
  return run->dataset;
}

std::vector<RunRecord> Orchestrator::list_runs() const {
  std::vector<std::shared_ptr<Run>> runs;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, r] : runs_) runs.push_back(r);
  }
  std::vector<RunRecord> out;
  for (const auto& r : runs) {
    std::lock_guard lock(r->mutex);
    out.push_back(r->record);
  }
  return out;
}

std::vector<VmDescriptor> Orchestrator::known_vms() const {
  std::map<std::string, VmDescriptor> vms;
  std::lock_guard lock(mutex_);
  for (const auto& [id, r] : runs_) {
    for (const auto& h : r->fleet) vms[h.vm.id] = h.vm;
  }
  std::vector<VmDescriptor> out;
  for (auto& [id, vm] : vms) out.push_back(std::move(vm));
  return out;
}

CampaignResult Orchestrator::run_campaign(std::vector<HostBinding> fleet, ContainerSpec spec) {
  const std::string id = start_campaign(std::move(fleet), std::move(spec));
  wait(id);
  auto run = find(id);
  std::lock_guard lock(run->mutex);
  return CampaignResult{run->record, run->dataset, run->report};
}

}  // namespace slicebench
