#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slicebench {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class Errc {
  InvalidArgument,
  UnknownAttribute,
  DuplicateMeasurement,
  MalformedNumber,
  EmptyOutput,
  SchemaViolation,
  IncompleteDataset,
  NonFiniteValue,
  EmptyInput,
  VmSetMismatch,
  StaleHistoricData,
  NotFound,
  StorageCorrupt,
  NoEligibleHistoric,
  HostUnreachable,
  ContainerCreateFailed,
  BenchmarkTimeout,
  EngineError,
  UnknownRun,
  Conflict,
  DuplicateTiming,
  MissingVm,
  LengthMismatch,
  DegenerateRanks,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

using Timestamp = std::chrono::sys_seconds;

Timestamp now_utc();
/// ISO-8601 UTC, e.g. "2015-06-01T12:00:00Z".
std::string format_timestamp(Timestamp t);
/// Accepts "YYYY-MM-DDTHH:MM:SSZ" (the 'Z' is optional). Throws InvalidArgument.
Timestamp parse_timestamp(std::string_view text);

// ---------------------------------------------------------------------------
// Fleet and container slice
// ---------------------------------------------------------------------------

struct VmDescriptor {
  std::string id;
  std::string vm_type;
  int vcpus = 1;
  double memory_gib = 1.0;
  std::string endpoint;
  std::map<std::string, std::string> tags;

  void validate() const;
};

enum class CpuMode { SingleCore, AllCores };

std::string_view to_string(CpuMode mode);
CpuMode parse_cpu_mode(std::string_view text);

inline constexpr std::string_view kDefaultBenchmarkImage = "lawansubba/lmbench";

/// The resource slice benchmarked on each VM. Two specs describe the same
/// slice when memory and CPU mode agree; the image is run configuration and
/// does not take part in equality.
struct ContainerSpec {
  std::int64_t memory_mib = 100;
  CpuMode cpu_mode = CpuMode::SingleCore;
  std::string image_ref{kDefaultBenchmarkImage};

  static constexpr std::int64_t kMinMemoryMib = 4;

  void validate() const;
  std::int64_t memory_bytes() const { return memory_mib * (std::int64_t{1} << 20); }
  /// CPU-set string for a host with `vcpus` logical CPUs ("0" or "0-7").
  std::string cpuset_for(int vcpus) const;

  friend bool operator==(const ContainerSpec& a, const ContainerSpec& b) {
    return a.memory_mib == b.memory_mib && a.cpu_mode == b.cpu_mode;
  }
};

// ---------------------------------------------------------------------------
// Attribute taxonomy
// ---------------------------------------------------------------------------

enum class Group { MemoryProcess = 0, LocalCommunication = 1, Computation = 2, Storage = 3 };
inline constexpr std::size_t kGroupCount = 4;

std::string_view to_string(Group group);
Group parse_group(std::string_view text);
constexpr std::size_t index_of(Group g) { return static_cast<std::size_t>(g); }

enum class Polarity { HigherBetter, LowerBetter };

std::string_view to_string(Polarity polarity);
Polarity parse_polarity(std::string_view text);

struct AttributeDef {
  std::string key;
  Group group = Group::MemoryProcess;
  Polarity polarity = Polarity::LowerBetter;
  std::string unit;

  friend bool operator==(const AttributeDef&, const AttributeDef&) = default;
};

class Taxonomy {
 public:
  Taxonomy() = default;
  explicit Taxonomy(std::vector<AttributeDef> defs);

  const AttributeDef* find(std::string_view key) const;
  const AttributeDef& at(std::string_view key) const;
  const std::vector<AttributeDef>& attributes() const { return defs_; }
  std::size_t size() const { return defs_.size(); }

  /// Adds or replaces definitions from a JSON object of the form
  /// {"<key>": {"group": "G1", "polarity": "lower-better", "unit": "ns"}, ...}.
  void apply_override(std::string_view json_text);
  void apply_override_file(const std::string& path);

 private:
  void upsert(AttributeDef def);

  std::vector<AttributeDef> defs_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// The shipped lmbench-style attribute map (four groups, polarity per attribute).
const Taxonomy& default_taxonomy();

// ---------------------------------------------------------------------------
// Measurements and datasets
// ---------------------------------------------------------------------------

struct AttributeMeasurement {
  std::string vm_id;
  std::string attribute_key;
  double value = 0.0;
  std::string unit;
  ContainerSpec container;
  Timestamp captured_at{};

  friend bool operator==(const AttributeMeasurement&, const AttributeMeasurement&) = default;
};

enum class DatasetRole { Current, Historic };

std::string_view to_string(DatasetRole role);
DatasetRole parse_dataset_role(std::string_view text);

/// Measurements for m VMs x n attributes under one container slice.
/// (vm_id, attribute_key) pairs are unique; add() rejects duplicates.
class BenchmarkDataset {
 public:
  BenchmarkDataset() = default;
  BenchmarkDataset(std::string dataset_id, DatasetRole role, ContainerSpec container)
      : dataset_id_(std::move(dataset_id)), role_(role), container_(std::move(container)) {}

  void add(AttributeMeasurement m);

  const std::string& dataset_id() const { return dataset_id_; }
  void set_dataset_id(std::string id) { dataset_id_ = std::move(id); }
  DatasetRole role() const { return role_; }
  void set_role(DatasetRole role) { role_ = role; }
  const ContainerSpec& container() const { return container_; }
  void set_container(ContainerSpec c) { container_ = std::move(c); }

  const std::vector<AttributeMeasurement>& measurements() const { return measurements_; }
  bool empty() const { return measurements_.empty(); }
  std::size_t size() const { return measurements_.size(); }

  /// Sorted, unique.
  std::vector<std::string> vm_ids() const;
  std::vector<std::string> attribute_keys() const;

  std::optional<double> value(std::string_view vm_id, std::string_view key) const;
  bool contains(std::string_view vm_id, std::string_view key) const;

  /// True iff non-empty and every VM has every attribute seen in the dataset.
  bool is_complete() const;

  /// Copy containing only the listed VMs.
  BenchmarkDataset restricted_to(std::span<const std::string> vm_ids) const;

  /// Same measurements regardless of insertion order.
  bool content_equal(const BenchmarkDataset& other) const;

 private:
  std::string dataset_id_;
  DatasetRole role_ = DatasetRole::Current;
  ContainerSpec container_;
  std::vector<AttributeMeasurement> measurements_;
  std::map<std::pair<std::string, std::string>, std::size_t> cells_;
};

struct CompletenessReport {
  bool complete = false;
  std::vector<std::pair<std::string, std::string>> gaps;        // (vm_id, attribute_key)
  std::vector<std::pair<std::string, std::string>> duplicates;  // (vm_id, attribute_key)
  std::vector<std::string> unknown_keys;
  std::vector<std::string> unexpected_vms;  // present in data, absent from the fleet
};

/// Expected cells are fleet VMs (or the dataset's VMs when the fleet is empty)
/// crossed with every attribute key observed in the data.
CompletenessReport validate_measurements(std::span<const AttributeMeasurement> measurements,
                                         std::span<const VmDescriptor> fleet,
                                         const Taxonomy& taxonomy = default_taxonomy());

CompletenessReport validate_dataset(const BenchmarkDataset& dataset,
                                    std::span<const VmDescriptor> fleet,
                                    const Taxonomy& taxonomy = default_taxonomy());

// ---------------------------------------------------------------------------
// Weights and rank tables
// ---------------------------------------------------------------------------

/// Group weights W1..W4, each in [0, 5].
struct WeightVector {
  std::array<double, kGroupCount> w{};

  static constexpr double kMin = 0.0;
  static constexpr double kMax = 5.0;

  WeightVector() = default;
  WeightVector(double w1, double w2, double w3, double w4) : w{w1, w2, w3, w4} {}

  double operator[](std::size_t k) const { return w[k]; }
  double operator[](Group g) const { return w[index_of(g)]; }

  void validate() const;
  /// "4,3,5,0" in G1..G4 order; validates range.
  static WeightVector parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

enum class RankMode { Lightweight, Hybrid, Empirical };

std::string_view to_string(RankMode mode);
RankMode parse_rank_mode(std::string_view text);

enum class ExecutionMode { Sequential, Parallel };

std::string_view to_string(ExecutionMode mode);
ExecutionMode parse_execution_mode(std::string_view text);
/// single-core benchmarks pair with sequential runs, all-cores with parallel.
ExecutionMode execution_mode_for(CpuMode mode);

struct RankEntry {
  std::string vm_id;
  std::optional<double> value;  // score, or time for empirical tables
  int rank = 0;

  friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

struct RankTable {
  RankMode mode = RankMode::Lightweight;
  std::vector<RankEntry> entries;
  std::optional<WeightVector> weights;
  std::vector<std::string> dataset_ids;
  std::optional<ContainerSpec> container;
  std::string application;                      // evaluation label, may be empty
  std::optional<ExecutionMode> execution_mode;  // evaluation pairing

  const RankEntry* find(std::string_view vm_id) const;
  std::vector<std::string> vm_ids() const;  // sorted
};

// ---------------------------------------------------------------------------
// Campaign lifecycle
// ---------------------------------------------------------------------------

enum class HostState { Pending, Provisioning, Benchmarking, Collecting, Done, Failed };

std::string_view to_string(HostState state);
HostState parse_host_state(std::string_view text);
bool is_terminal(HostState state);
/// Forward moves along the lifecycle order, or to Failed from any non-terminal state.
bool can_transition(HostState from, HostState to);

struct HostStatus {
  std::string host_id;
  HostState state = HostState::Pending;
  std::string reason;              // set when failed
  double duration_seconds = 0.0;   // provisioning through collection
  double benchmark_seconds = 0.0;  // container start to exit
};

struct RunRecord {
  std::string run_id;
  ContainerSpec container;
  std::vector<HostStatus> hosts;
  Timestamp started_at{};
  std::optional<Timestamp> finished_at;
  std::optional<std::string> dataset_id;
  bool dataset_complete = false;

  bool finished() const;
  bool all_done() const;
  double total_seconds = 0.0;
};

}  // namespace slicebench
