#include "slicebench/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace slicebench {

using nlohmann::json;

namespace {

template <typename F>
auto guarded(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(ExecutorBinding::Kind kind) {
  return kind == ExecutorBinding::Kind::EngineApi ? "engine-api" : "simulated";
}

ExecutorBinding::Kind parse_executor_kind(std::string_view text) {
  if (text == "engine-api") return ExecutorBinding::Kind::EngineApi;
  if (text == "simulated") return ExecutorBinding::Kind::Simulated;
  throw Error(Errc::InvalidArgument, "executor must be 'engine-api' or 'simulated', got '" + std::string(text) + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::NotFound, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// --- container / hosts ---------------------------------------------------------

json to_json(const ContainerSpec& spec) {
  return json{{"memory_mib", spec.memory_mib}, {"cpu_mode", to_string(spec.cpu_mode)}};
}

ContainerSpec container_from_json(const json& j) {
  return guarded("container", [&] {
    ContainerSpec spec;
    spec.memory_mib = j.at("memory_mib").get<std::int64_t>();
    spec.cpu_mode = parse_cpu_mode(j.at("cpu_mode").get<std::string>());
    if (j.contains("image")) spec.image_ref = j.at("image").get<std::string>();
    return spec;
  });
}

json to_json(const VmDescriptor& vm) {
  return json{{"id", vm.id},        {"vm_type", vm.vm_type},   {"vcpus", vm.vcpus},
              {"memory_gib", vm.memory_gib}, {"endpoint", vm.endpoint}, {"tags", vm.tags}};
}

json to_json(const HostBinding& host) {
  json j = to_json(host.vm);
  j["executor"] = to_string(host.executor.kind);
  if (host.executor.kind == ExecutorBinding::Kind::Simulated) j["profile_seed"] = host.executor.profile_seed;
  return j;
}

HostBinding host_from_json(const json& j) {
  return guarded("host", [&] {
    HostBinding h;
    h.vm.id = j.at("id").get<std::string>();
    h.vm.vm_type = j.value("vm_type", std::string{});
    h.vm.vcpus = j.at("vcpus").get<int>();
    h.vm.memory_gib = j.at("memory_gib").get<double>();
    h.vm.endpoint = j.value("endpoint", std::string{});
    if (j.contains("tags")) h.vm.tags = j.at("tags").get<std::map<std::string, std::string>>();
    h.executor.kind = parse_executor_kind(j.value("executor", std::string{"simulated"}));
    h.executor.endpoint = h.vm.endpoint;
    h.executor.profile_seed = j.value("profile_seed", std::uint64_t{0});
    h.vm.validate();
    if (h.executor.kind == ExecutorBinding::Kind::EngineApi && h.executor.endpoint.empty()) {
      throw Error(Errc::InvalidArgument, "host '" + h.vm.id + "' uses engine-api but has no endpoint");
    }
    return h;
  });
}

std::vector<HostBinding> parse_inventory(std::string_view json_text) {
  const json doc = guarded("inventory", [&] { return json::parse(json_text); });
  const json& hosts = doc.is_object() && doc.contains("hosts") ? doc.at("hosts") : doc;
  if (!hosts.is_array()) throw Error(Errc::SchemaViolation, "inventory must be an array of hosts");
  std::vector<HostBinding> out;
  std::set<std::string> ids;
  for (const auto& h : hosts) {
    out.push_back(host_from_json(h));
    if (!ids.insert(out.back().vm.id).second) {
      throw Error(Errc::InvalidArgument, "duplicate host id '" + out.back().vm.id + "' in inventory");
    }
  }
  if (out.empty()) throw Error(Errc::InvalidArgument, "inventory is empty");
  return out;
}

std::vector<HostBinding> load_inventory(const std::string& path) { return parse_inventory(read_file(path)); }

// --- run records ------------------------------------------------------------------

json to_json(const RunRecord& run) {
  json hosts = json::array();
  for (const auto& h : run.hosts) {
    json jh{{"host_id", h.host_id},
            {"state", to_string(h.state)},
            {"duration_seconds", h.duration_seconds},
            {"benchmark_seconds", h.benchmark_seconds}};
    if (!h.reason.empty()) jh["reason"] = h.reason;
    hosts.push_back(std::move(jh));
  }
  json j{{"run_id", run.run_id},
         {"container", to_json(run.container)},
         {"hosts", std::move(hosts)},
         {"started_at", format_timestamp(run.started_at)},
         {"finished", run.finished()},
         {"total_seconds", run.total_seconds},
         {"dataset_complete", run.dataset_complete}};
  j["finished_at"] = run.finished_at ? json(format_timestamp(*run.finished_at)) : json(nullptr);
  j["dataset_id"] = run.dataset_id ? json(*run.dataset_id) : json(nullptr);
  return j;
}

RunRecord run_from_json(const json& j) {
  return guarded("run record", [&] {
    RunRecord run;
    run.run_id = j.at("run_id").get<std::string>();
    run.container = container_from_json(j.at("container"));
    for (const auto& jh : j.at("hosts")) {
      HostStatus h;
      h.host_id = jh.at("host_id").get<std::string>();
      h.state = parse_host_state(jh.at("state").get<std::string>());
      h.duration_seconds = jh.value("duration_seconds", 0.0);
      h.benchmark_seconds = jh.value("benchmark_seconds", 0.0);
      h.reason = jh.value("reason", std::string{});
      run.hosts.push_back(std::move(h));
    }
    run.started_at = parse_timestamp(j.at("started_at").get<std::string>());
    if (j.contains("finished_at") && !j.at("finished_at").is_null()) {
      run.finished_at = parse_timestamp(j.at("finished_at").get<std::string>());
    }
    if (j.contains("dataset_id") && !j.at("dataset_id").is_null()) {
      run.dataset_id = j.at("dataset_id").get<std::string>();
    }
    run.total_seconds = j.value("total_seconds", 0.0);
    run.dataset_complete = j.value("dataset_complete", false);
    return run;
  });
}

// --- rank tables -------------------------------------------------------------------

json to_json(const RankTable& table) {
  json entries = json::array();
  for (const auto& e : table.entries) {
    json je{{"vm_id", e.vm_id}, {"rank", e.rank}};
    je["value"] = e.value ? json(*e.value) : json(nullptr);
    entries.push_back(std::move(je));
  }
  json j{{"mode", to_string(table.mode)}, {"dataset_ids", table.dataset_ids}};
  j["application"] = table.application.empty() ? json(nullptr) : json(table.application);
  j["execution_mode"] = table.execution_mode ? json(to_string(*table.execution_mode)) : json(nullptr);
  j["container"] = table.container ? to_json(*table.container) : json(nullptr);
  j["weights"] = table.weights ? json(table.weights->w) : json(nullptr);
  j["entries"] = std::move(entries);
  return j;
}

RankTable rank_table_from_json(const json& j) {
  return guarded("rank table", [&] {
    RankTable t;
    t.mode = parse_rank_mode(j.at("mode").get<std::string>());
    if (j.contains("dataset_ids")) t.dataset_ids = j.at("dataset_ids").get<std::vector<std::string>>();
    if (j.contains("application") && !j.at("application").is_null()) {
      t.application = j.at("application").get<std::string>();
    }
    if (j.contains("container") && !j.at("container").is_null()) t.container = container_from_json(j.at("container"));
    if (j.contains("execution_mode") && !j.at("execution_mode").is_null()) {
      t.execution_mode = parse_execution_mode(j.at("execution_mode").get<std::string>());
    } else if (t.container) {
      t.execution_mode = execution_mode_for(t.container->cpu_mode);
    }
    if (j.contains("weights") && !j.at("weights").is_null()) {
      const auto w = j.at("weights").get<std::vector<double>>();
      if (w.size() != kGroupCount) throw Error(Errc::SchemaViolation, "rank table weights must have 4 entries");
      t.weights = WeightVector(w[0], w[1], w[2], w[3]);
      t.weights->validate();
    }
    for (const auto& je : j.at("entries")) {
      RankEntry e;
      e.vm_id = je.at("vm_id").get<std::string>();
      e.rank = je.at("rank").get<int>();
      if (je.contains("value") && !je.at("value").is_null()) e.value = je.at("value").get<double>();
      if (e.rank < 1) throw Error(Errc::SchemaViolation, "rank for '" + e.vm_id + "' must be >= 1");
      if (t.find(e.vm_id) != nullptr) throw Error(Errc::SchemaViolation, "duplicate vm '" + e.vm_id + "'");
      t.entries.push_back(std::move(e));
    }
    return t;
  });
}

std::vector<RankTable> load_rank_tables(const std::string& path) {
  const json doc = guarded(path, [&] { return json::parse(read_file(path)); });
  std::vector<RankTable> out;
  if (doc.is_array()) {
    for (const auto& t : doc) out.push_back(rank_table_from_json(t));
  } else {
    out.push_back(rank_table_from_json(doc));
  }
  return out;
}

std::string format_rank_table(const RankTable& table) {
  std::ostringstream out;
  out << "mode: " << to_string(table.mode);
  if (table.container) {
    out << "  container: " << table.container->memory_mib << " MiB " << to_string(table.container->cpu_mode);
  }
  if (table.weights) out << "  weights: {" << table.weights->to_string() << "}";
  if (!table.dataset_ids.empty()) {
    out << "  datasets:";
    for (const auto& id : table.dataset_ids) out << ' ' << id;
  }
  out << '\n';

  std::size_t width = 2;
  for (const auto& e : table.entries) width = std::max(width, e.vm_id.size());
  char line[256];
  std::snprintf(line, sizeof line, "%4s  %-*s  %14s\n", "rank", static_cast<int>(width), "vm",
                table.mode == RankMode::Empirical ? "seconds" : "score");
  out << line;
  for (const auto& e : table.entries) {
    if (e.value) {
      std::snprintf(line, sizeof line, "%4d  %-*s  %14.6f\n", e.rank, static_cast<int>(width), e.vm_id.c_str(),
                    *e.value);
    } else {
      std::snprintf(line, sizeof line, "%4d  %-*s  %14s\n", e.rank, static_cast<int>(width), e.vm_id.c_str(), "-");
    }
    out << line;
  }
  return out.str();
}

}  // namespace slicebench
