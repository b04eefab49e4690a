#include "slicebench/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "slicebench/api.hpp"
#include "slicebench/evaluation.hpp"
#include "slicebench/orchestrator.hpp"
#include "slicebench/serialize.hpp"
#include "slicebench/service.hpp"
#include "slicebench/store.hpp"

namespace slicebench {

using nlohmann::json;

namespace {

/// Usage problems detected after CLI parsing (bad inventory, bad weights).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_store() {
  if (const char* env = std::getenv(kStoreEnv); env != nullptr && *env != '\0') return env;
  return kDefaultStoreDir;
}

struct Options {
  std::string store;
  std::string format = "text";

  // benchmark
  std::string inventory;
  std::int64_t memory_mib = 100;
  std::string cpu_mode = "single-core";
  std::string image;
  int timeout_s = 1800;
  std::size_t parallel = 8;

  // rank
  std::string dataset;
  std::string weights;
  std::string mode = "lightweight";
  int max_age_days = kDefaultHistoricMaxAgeDays;
  std::string aggregate = "mean";

  // evaluate
  std::string timings;
  std::vector<std::string> ranktables;

  // serve
  std::string listen = "127.0.0.1:8080";

  // import / export
  std::string file;
  std::string role = "current";
  std::string stored_at;
  std::string out_file;
};

int cmd_benchmark(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<HostBinding> fleet;
  ContainerSpec spec;
  try {
    fleet = load_inventory(o.inventory);
    spec.memory_mib = o.memory_mib;
    spec.cpu_mode = parse_cpu_mode(o.cpu_mode);
    if (!o.image.empty()) spec.image_ref = o.image;
    spec.validate();
    if (o.timeout_s <= 0) throw Error(Errc::InvalidArgument, "--timeout must be positive");
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  FileStore store(o.store);
  CampaignConfig config;
  config.deadline = std::chrono::seconds{o.timeout_s};
  config.max_parallel_hosts = o.parallel;
  Orchestrator orchestrator(&store, default_engine_factory(), config);
  const CampaignResult result = orchestrator.run_campaign(std::move(fleet), spec);

  out << "run_id: " << result.run.run_id << '\n';
  out << "dataset_id: " << result.run.dataset_id.value_or("-") << '\n';
  std::size_t failed = 0;
  for (const auto& h : result.run.hosts) {
    char line[256];
    std::snprintf(line, sizeof line, "  %-16s %-8s %8.3fs", h.host_id.c_str(), std::string(to_string(h.state)).c_str(),
                  h.duration_seconds);
    out << line;
    if (!h.reason.empty()) out << "  " << h.reason;
    out << '\n';
    if (h.state != HostState::Done) ++failed;
  }
  if (failed > 0) {
    err << failed << " of " << result.run.hosts.size() << " hosts failed\n";
    return kExitFailure;
  }
  if (!result.report.complete) {
    err << "dataset incomplete: " << result.report.gaps.size() << " missing measurements\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_rank(const Options& o, std::ostream& out, std::ostream& err) {
  RankRequest request;
  try {
    request.dataset_id = o.dataset;
    request.weights = WeightVector::parse(o.weights);
    request.mode = parse_rank_mode(o.mode);
    if (request.mode == RankMode::Empirical) throw Error(Errc::InvalidArgument, "--mode must be lightweight or hybrid");
    request.options.aggregate = parse_group_aggregate(o.aggregate);
    request.historic_max_age_days = o.max_age_days;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  FileStore store(o.store);
  RankTable table;
  try {
    table = rank_dataset(store, default_taxonomy(), request);
  } catch (const Error& e) {
    if (e.code() == Errc::NoEligibleHistoric || e.code() == Errc::StaleHistoricData) {
      err << "error: " << e.what() << "\n"
          << "hint: import a recent historic dataset, or rank with --mode lightweight\n";
      return kExitFailure;
    }
    throw;
  }
  if (o.format == "records") {
    out << to_json(table).dump() << '\n';
  } else {
    out << format_rank_table(table);
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream&) {
  const auto timings = load_timings(o.timings);
  std::map<std::pair<std::string, ExecutionMode>, std::vector<TimingRecord>> by_group;
  std::set<std::string> apps;
  for (const auto& t : timings) {
    by_group[{t.application, t.execution_mode}].push_back(t);
    apps.insert(t.application);
  }

  struct Key {
    std::string application;
    ExecutionMode execution;
    RankMode method;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<RankTable>> groups;
  std::vector<Key> order;
  for (const auto& path : o.ranktables) {
    for (auto& t : load_rank_tables(path)) {
      if (t.application.empty()) {
        if (apps.size() != 1) {
          throw UsageError(path + ": rank table has no application and timings cover " + std::to_string(apps.size()));
        }
        t.application = *apps.begin();
      }
      if (!t.execution_mode) throw UsageError(path + ": rank table needs execution_mode or container");
      Key key{t.application, *t.execution_mode, t.mode};
      if (groups.count(key) == 0) order.push_back(key);
      groups[key].push_back(std::move(t));
    }
  }
  if (groups.empty()) throw UsageError("no rank tables given");

  std::map<RankMode, std::vector<CorrelationReport>> summaries;
  json records = json::array();
  for (const auto& key : order) {
    auto it = by_group.find({key.application, key.execution});
    if (it == by_group.end()) {
      throw Error(Errc::MissingVm, "no timings for " + key.application + " (" +
                                       std::string(to_string(key.execution)) + ")");
    }
    const auto& tables = groups[key];
    const auto vms = tables.front().vm_ids();
    const RankTable empirical = empirical_ranks(it->second, vms);
    const EvaluationReport report = build_report(empirical, tables);
    for (const auto& c : report.correlations) {
      summaries[key.method].push_back(c);
      json j = to_json(c);
      j["method"] = std::string(to_string(key.method));
      records.push_back(std::move(j));
    }
    if (o.format != "records") {
      out << "== " << key.application << "  " << to_string(key.execution) << "  " << to_string(key.method) << '\n'
          << report.rank_table_text << '\n';
    }
  }
  if (o.format == "records") {
    out << records.dump() << '\n';
    return kExitOk;
  }
  for (const auto& [method, reports] : summaries) {
    out << "correlation (%) " << to_string(method) << '\n' << format_correlation_summary(reports) << '\n';
  }
  return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
  try {
    parse_listen_address(o.listen);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  FileStore store(o.store);
  Orchestrator orchestrator(&store, default_engine_factory());
  ApiService api(store, orchestrator);

  // Block the stop signals before any server thread exists so they are only
  // delivered to the sigwait below.
  sigset_t stop_signals, previous;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);

  int port = 0;
  try {
    port = api.bind(o.listen);
  } catch (const Error& e) {
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  out << "listening on " << parse_listen_address(o.listen).first << ':' << port << std::endl;

  std::thread server([&] { api.serve(); });
  int sig = 0;
  sigwait(&stop_signals, &sig);
  api.stop();
  server.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  out << "stopped" << std::endl;
  return kExitOk;
}

int cmd_import(const Options& o, std::ostream& out, std::ostream&) {
  DatasetRole role{};
  std::optional<Timestamp> stored_at;
  try {
    role = parse_dataset_role(o.role);
    if (!o.stored_at.empty()) stored_at = parse_timestamp(o.stored_at);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const BenchmarkDataset ds = read_canonical_file(o.file, {}, role);
  if (ds.empty()) throw Error(Errc::EmptyInput, o.file + ": no records");
  FileStore store(o.store);
  out << store.put_dataset(ds, role, stored_at) << '\n';
  return kExitOk;
}

int cmd_export(const Options& o, std::ostream& out, std::ostream&) {
  FileStore store(o.store);
  const StoredDataset sd = store.get_dataset(o.dataset);
  if (o.out_file.empty()) {
    write_canonical_records(out, sd.dataset);
    return kExitOk;
  }
  std::ofstream f(o.out_file);
  if (!f) throw Error(Errc::InvalidArgument, "cannot write '" + o.out_file + "'");
  write_canonical_records(f, sd.dataset);
  return kExitOk;
}

int cmd_datasets(const Options& o, std::ostream& out, std::ostream&) {
  FileStore store(o.store);
  const auto entries = store.list_datasets();
  if (o.format == "records") {
    json items = json::array();
    for (const auto& e : entries) {
      items.push_back(json{{"dataset_id", e.dataset_id},
                           {"role", std::string(to_string(e.role))},
                           {"container", to_json(e.container)},
                           {"stored_at", format_timestamp(e.stored_at)},
                           {"vm_ids", e.vm_ids},
                           {"measurements", e.measurement_count}});
    }
    out << items.dump() << '\n';
    return kExitOk;
  }
  for (const auto& e : entries) {
    out << e.dataset_id << "  " << to_string(e.role) << "  " << e.container.memory_mib << "MiB "
        << to_string(e.container.cpu_mode) << "  " << format_timestamp(e.stored_at) << "  " << e.vm_ids.size()
        << " vms  " << e.measurement_count << " measurements\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  o.store = default_store();

  CLI::App app{"Container-slice benchmarking and ranking of cloud VMs", "slicebench"};
  app.require_subcommand(1);
  app.add_option("--store", o.store, "Dataset store directory (env " + std::string(kStoreEnv) + ")");

  auto* bench = app.add_subcommand("benchmark", "Benchmark every host in an inventory");
  bench->add_option("inventory", o.inventory, "Inventory JSON file")->required();
  bench->add_option("--memory-mib", o.memory_mib, "Container memory cap (MiB)")->capture_default_str();
  bench->add_option("--cpu-mode", o.cpu_mode, "single-core or all-cores")->capture_default_str();
  bench->add_option("--image", o.image, "Benchmark image");
  bench->add_option("--timeout", o.timeout_s, "Per-host deadline (seconds)")->capture_default_str();
  bench->add_option("--parallel", o.parallel, "Hosts benchmarked at once")->check(CLI::PositiveNumber);

  auto* rank = app.add_subcommand("rank", "Rank the VMs of a stored dataset");
  rank->add_option("--dataset", o.dataset, "Dataset id")->required();
  rank->add_option("--weights", o.weights, "Group weights w1,w2,w3,w4 in [0,5]")->required();
  rank->add_option("--mode", o.mode, "lightweight or hybrid")->capture_default_str();
  rank->add_option("--historic-max-age-days", o.max_age_days, "Oldest historic data accepted")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  rank->add_option("--aggregate", o.aggregate, "Group aggregate: mean or sum")->capture_default_str();
  rank->add_option("--format", o.format, "text or records")->check(CLI::IsMember({"text", "records"}));

  auto* eval = app.add_subcommand("evaluate", "Correlate benchmark ranks with empirical ranks");
  eval->add_option("--timings", o.timings, "Application timings (JSON lines)")->required();
  eval->add_option("--ranktables", o.ranktables, "Rank table files")->required();
  eval->add_option("--format", o.format, "text or records")->check(CLI::IsMember({"text", "records"}));

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--listen", o.listen, "host:port")->capture_default_str();

  auto* import = app.add_subcommand("import", "Store a dataset from canonical records");
  import->add_option("file", o.file, "Canonical records (JSON lines)")->required();
  import->add_option("--role", o.role, "current or historic")->capture_default_str();
  import->add_option("--stored-at", o.stored_at, "Override storage time (ISO-8601 UTC)");

  auto* exp = app.add_subcommand("export", "Write a stored dataset as canonical records");
  exp->add_option("--dataset", o.dataset, "Dataset id")->required();
  exp->add_option("--out", o.out_file, "Output file (default stdout)");

  auto* list = app.add_subcommand("datasets", "List stored datasets");
  list->add_option("--format", o.format, "text or records")->check(CLI::IsMember({"text", "records"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*bench) return cmd_benchmark(o, out, err);
    if (*rank) return cmd_rank(o, out, err);
    if (*eval) return cmd_evaluate(o, out, err);
    if (*serve) return cmd_serve(o, out, err);
    if (*import) return cmd_import(o, out, err);
    if (*exp) return cmd_export(o, out, err);
    if (*list) return cmd_datasets(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace slicebench
