#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "slicebench/model.hpp"

namespace slicebench {

/// One inventory entry: a VM plus how to reach its container engine.
struct ExecutorBinding {
  enum class Kind { EngineApi, Simulated };
  Kind kind = Kind::Simulated;
  std::string endpoint;            // engine-api: "unix:///var/run/docker.sock" or "tcp://host:port"
  std::uint64_t profile_seed = 0;  // simulated
};

std::string_view to_string(ExecutorBinding::Kind kind);
ExecutorBinding::Kind parse_executor_kind(std::string_view text);

struct HostBinding {
  VmDescriptor vm;
  ExecutorBinding executor;
};

nlohmann::json to_json(const ContainerSpec& spec);
ContainerSpec container_from_json(const nlohmann::json& j);

nlohmann::json to_json(const VmDescriptor& vm);
nlohmann::json to_json(const HostBinding& host);
HostBinding host_from_json(const nlohmann::json& j);

/// Inventory: a JSON array of hosts, or {"hosts": [...]}. Each host carries
/// {id, vm_type, vcpus, memory_gib, endpoint, executor, profile_seed, tags}.
std::vector<HostBinding> parse_inventory(std::string_view json_text);
std::vector<HostBinding> load_inventory(const std::string& path);

nlohmann::json to_json(const RunRecord& run);
RunRecord run_from_json(const nlohmann::json& j);

/// Structured rank-table record. Entry values are optional so published
/// rank-only tables can be loaded as fixtures.
nlohmann::json to_json(const RankTable& table);
RankTable rank_table_from_json(const nlohmann::json& j);
/// A file holds one table object or an array of them.
std::vector<RankTable> load_rank_tables(const std::string& path);

/// Plain-text table: rank, VM, value.
std::string format_rank_table(const RankTable& table);

std::string read_file(const std::string& path);

}  // namespace slicebench
