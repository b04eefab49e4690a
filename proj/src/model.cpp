#include "slicebench/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>

namespace slicebench {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  throw Error(Errc::InvalidArgument, std::string("unknown ") + std::string(what) + ": '" +
                                         std::string(text) + "'");
}

constexpr std::array<std::pair<std::string_view, CpuMode>, 2> kCpuModes{{
    {"single-core", CpuMode::SingleCore},
    {"all-cores", CpuMode::AllCores},
}};

constexpr std::array<std::pair<std::string_view, Group>, 4> kGroups{{
    {"G1", Group::MemoryProcess},
    {"G2", Group::LocalCommunication},
    {"G3", Group::Computation},
    {"G4", Group::Storage},
}};

constexpr std::array<std::pair<std::string_view, Polarity>, 2> kPolarities{{
    {"higher-better", Polarity::HigherBetter},
    {"lower-better", Polarity::LowerBetter},
}};

constexpr std::array<std::pair<std::string_view, DatasetRole>, 2> kRoles{{
    {"current", DatasetRole::Current},
    {"historic", DatasetRole::Historic},
}};

constexpr std::array<std::pair<std::string_view, RankMode>, 3> kRankModes{{
    {"lightweight", RankMode::Lightweight},
    {"hybrid", RankMode::Hybrid},
    {"empirical", RankMode::Empirical},
}};

constexpr std::array<std::pair<std::string_view, ExecutionMode>, 2> kExecModes{{
    {"sequential", ExecutionMode::Sequential},
    {"parallel", ExecutionMode::Parallel},
}};

constexpr std::array<std::pair<std::string_view, HostState>, 6> kHostStates{{
    {"pending", HostState::Pending},
    {"provisioning", HostState::Provisioning},
    {"benchmarking", HostState::Benchmarking},
    {"collecting", HostState::Collecting},
    {"done", HostState::Done},
    {"failed", HostState::Failed},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

}  // namespace

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownAttribute: return "UnknownAttribute";
    case Errc::DuplicateMeasurement: return "DuplicateMeasurement";
    case Errc::MalformedNumber: return "MalformedNumber";
    case Errc::EmptyOutput: return "EmptyOutput";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::IncompleteDataset: return "IncompleteDataset";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::VmSetMismatch: return "VmSetMismatch";
    case Errc::StaleHistoricData: return "StaleHistoricData";
    case Errc::NotFound: return "NotFound";
    case Errc::StorageCorrupt: return "StorageCorrupt";
    case Errc::NoEligibleHistoric: return "NoEligibleHistoric";
    case Errc::HostUnreachable: return "HostUnreachable";
    case Errc::ContainerCreateFailed: return "ContainerCreateFailed";
    case Errc::BenchmarkTimeout: return "BenchmarkTimeout";
    case Errc::EngineError: return "EngineError";
    case Errc::UnknownRun: return "UnknownRun";
    case Errc::Conflict: return "Conflict";
    case Errc::DuplicateTiming: return "DuplicateTiming";
    case Errc::MissingVm: return "MissingVm";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateRanks: return "DegenerateRanks";
  }
  return "Unknown";
}

// --- time -------------------------------------------------------------------

Timestamp now_utc() {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string format_timestamp(Timestamp t) {
  const std::time_t tt = t.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  auto bad = [&] {
    return Error(Errc::InvalidArgument, "bad timestamp '" + std::string(text) + "'");
  };
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':') {
    throw bad();
  }
  auto field = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (ec != std::errc{} || ptr != text.data() + pos + len) throw bad();
    return v;
  };
  using namespace std::chrono;
  const year_month_day ymd{year{field(0, 4)}, month{static_cast<unsigned>(field(5, 2))},
                           day{static_cast<unsigned>(field(8, 2))}};
  const int hh = field(11, 2), mm = field(14, 2), ss = field(17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) throw bad();
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

// --- fleet ------------------------------------------------------------------

void VmDescriptor::validate() const {
  if (id.empty()) throw Error(Errc::InvalidArgument, "vm id must not be empty");
  if (vcpus < 1) throw Error(Errc::InvalidArgument, "vm '" + id + "': vcpus must be >= 1");
  if (!(memory_gib > 0.0) || !std::isfinite(memory_gib)) {
    throw Error(Errc::InvalidArgument, "vm '" + id + "': memory_gib must be > 0");
  }
}

std::string_view to_string(CpuMode mode) { return name_of(mode, kCpuModes); }
CpuMode parse_cpu_mode(std::string_view text) { return parse_enum(text, kCpuModes, "cpu mode"); }

void ContainerSpec::validate() const {
  if (memory_mib < kMinMemoryMib) {
    throw Error(Errc::InvalidArgument,
                "memory_mib must be >= " + std::to_string(kMinMemoryMib) + ", got " + std::to_string(memory_mib));
  }
  // Keeps memory_bytes() from overflowing.
  if (memory_mib > (std::int64_t{1} << 40)) {
    throw Error(Errc::InvalidArgument, "memory_mib is unreasonably large");
  }
}

std::string ContainerSpec::cpuset_for(int vcpus) const {
  if (cpu_mode == CpuMode::SingleCore || vcpus <= 1) return "0";
  return "0-" + std::to_string(vcpus - 1);
}

// --- taxonomy enums -----------------------------------------------------------

std::string_view to_string(Group group) { return name_of(group, kGroups); }
Group parse_group(std::string_view text) { return parse_enum(text, kGroups, "group"); }

std::string_view to_string(Polarity polarity) { return name_of(polarity, kPolarities); }
Polarity parse_polarity(std::string_view text) { return parse_enum(text, kPolarities, "polarity"); }

std::string_view to_string(DatasetRole role) { return name_of(role, kRoles); }
DatasetRole parse_dataset_role(std::string_view text) { return parse_enum(text, kRoles, "dataset role"); }

std::string_view to_string(RankMode mode) { return name_of(mode, kRankModes); }
RankMode parse_rank_mode(std::string_view text) { return parse_enum(text, kRankModes, "rank mode"); }

std::string_view to_string(ExecutionMode mode) { return name_of(mode, kExecModes); }
ExecutionMode parse_execution_mode(std::string_view text) {
  return parse_enum(text, kExecModes, "execution mode");
}
ExecutionMode execution_mode_for(CpuMode mode) {
  return mode == CpuMode::SingleCore ? ExecutionMode::Sequential : ExecutionMode::Parallel;
}

std::string_view to_string(HostState state) { return name_of(state, kHostStates); }
HostState parse_host_state(std::string_view text) { return parse_enum(text, kHostStates, "host state"); }

bool is_terminal(HostState state) { return state == HostState::Done || state == HostState::Failed; }

bool can_transition(HostState from, HostState to) {
  if (is_terminal(from)) return false;
  if (to == HostState::Failed) return true;
  return static_cast<int>(to) > static_cast<int>(from);
}

// --- dataset ------------------------------------------------------------------

void BenchmarkDataset::add(AttributeMeasurement m) {
  if (!std::isfinite(m.value)) {
    throw Error(Errc::NonFiniteValue, "non-finite value for " + m.vm_id + "/" + m.attribute_key);
  }
  auto key = std::make_pair(m.vm_id, m.attribute_key);
  if (cells_.count(key) != 0) {
    throw Error(Errc::DuplicateMeasurement,
                "duplicate measurement for " + m.vm_id + "/" + m.attribute_key);
  }
  cells_.emplace(std::move(key), measurements_.size());
  measurements_.push_back(std::move(m));
}

std::vector<std::string> BenchmarkDataset::vm_ids() const {
  std::set<std::string> ids;
  for (const auto& m : measurements_) ids.insert(m.vm_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> BenchmarkDataset::attribute_keys() const {
  std::set<std::string> keys;
  for (const auto& m : measurements_) keys.insert(m.attribute_key);
  return {keys.begin(), keys.end()};
}

std::optional<double> BenchmarkDataset::value(std::string_view vm_id, std::string_view key) const {
  auto it = cells_.find(std::make_pair(std::string(vm_id), std::string(key)));
  if (it == cells_.end()) return std::nullopt;
  return measurements_[it->second].value;
}

bool BenchmarkDataset::contains(std::string_view vm_id, std::string_view key) const {
  return value(vm_id, key).has_value();
}

bool BenchmarkDataset::is_complete() const {
  if (measurements_.empty()) return false;
  return cells_.size() == vm_ids().size() * attribute_keys().size();
}

BenchmarkDataset BenchmarkDataset::restricted_to(std::span<const std::string> vm_ids) const {
  const std::set<std::string> keep(vm_ids.begin(), vm_ids.end());
  BenchmarkDataset out(dataset_id_, role_, container_);
  for (const auto& m : measurements_) {
    if (keep.count(m.vm_id) != 0) out.add(m);
  }
  return out;
}

bool BenchmarkDataset::content_equal(const BenchmarkDataset& other) const {
  if (size() != other.size() || !(container_ == other.container_)) return false;
  for (const auto& m : measurements_) {
    auto it = other.cells_.find({m.vm_id, m.attribute_key});
    if (it == other.cells_.end() || !(other.measurements_[it->second] == m)) return false;
  }
  return true;
}

CompletenessReport validate_measurements(std::span<const AttributeMeasurement> measurements,
                                         std::span<const VmDescriptor> fleet,
                                         const Taxonomy& taxonomy) {
  CompletenessReport report;
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> keys, data_vms, unknown;
  for (const auto& m : measurements) {
    if (!seen.emplace(m.vm_id, m.attribute_key).second) {
      report.duplicates.emplace_back(m.vm_id, m.attribute_key);
    }
    keys.insert(m.attribute_key);
    data_vms.insert(m.vm_id);
    if (taxonomy.find(m.attribute_key) == nullptr) unknown.insert(m.attribute_key);
  }
  report.unknown_keys.assign(unknown.begin(), unknown.end());

  std::set<std::string> expected_vms;
  if (fleet.empty()) {
    expected_vms = data_vms;
  } else {
    for (const auto& vm : fleet) expected_vms.insert(vm.id);
    for (const auto& id : data_vms) {
      if (expected_vms.count(id) == 0) report.unexpected_vms.push_back(id);
    }
  }
  for (const auto& vm : expected_vms) {
    for (const auto& key : keys) {
      if (seen.count({vm, key}) == 0) report.gaps.emplace_back(vm, key);
    }
  }
  report.complete = !measurements.empty() && report.gaps.empty() && report.duplicates.empty() &&
                    report.unknown_keys.empty() && report.unexpected_vms.empty();
  return report;
}

CompletenessReport validate_dataset(const BenchmarkDataset& dataset, std::span<const VmDescriptor> fleet,
                                    const Taxonomy& taxonomy) {
  return validate_measurements(dataset.measurements(), fleet, taxonomy);
}

// --- weights ------------------------------------------------------------------

void WeightVector::validate() const {
  for (std::size_t k = 0; k < kGroupCount; ++k) {
    if (!(w[k] >= kMin && w[k] <= kMax)) {
      throw Error(Errc::InvalidArgument, "weight W" + std::to_string(k + 1) + " = " +
                                             std::to_string(w[k]) + " is outside [0, 5]");
    }
  }
}

WeightVector WeightVector::parse(std::string_view text) {
  WeightVector out;
  std::size_t k = 0;
  while (true) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (k >= kGroupCount) throw Error(Errc::InvalidArgument, "expected exactly 4 weights");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      throw Error(Errc::InvalidArgument, "bad weight '" + std::string(item) + "'");
    }
    out.w[k++] = v;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (k != kGroupCount) throw Error(Errc::InvalidArgument, "expected exactly 4 weights");
  out.validate();
  return out;
}

std::string WeightVector::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < kGroupCount; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", w[k]);
    if (k) out += ',';
    out += buf;
  }
  return out;
}

// --- rank table / run record --------------------------------------------------

const RankEntry* RankTable::find(std::string_view vm_id) const {
  for (const auto& e : entries) {
    if (e.vm_id == vm_id) return &e;
  }
  return nullptr;
}

std::vector<std::string> RankTable::vm_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.vm_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool RunRecord::finished() const {
  return std::all_of(hosts.begin(), hosts.end(), [](const HostStatus& h) { return is_terminal(h.state); });
}

bool RunRecord::all_done() const {
  return std::all_of(hosts.begin(), hosts.end(),
                     [](const HostStatus& h) { return h.state == HostState::Done; });
}

}  // namespace slicebench
