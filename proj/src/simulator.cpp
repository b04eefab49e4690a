#include "slicebench/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace slicebench {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform in [-1, 1).
double unit_noise(std::uint64_t h) {
  const double u = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

// Nominal values at factor 1.0, in each attribute's canonical unit.
const std::map<std::string, double, std::less<>>& nominal_values() {
  static const std::map<std::string, double, std::less<>> values{
      {"l1_cache_latency_ns", 1.2},     {"l2_cache_latency_ns", 4.5},     {"main_mem_latency_ns", 80.0},
      {"random_mem_latency_ns", 120.0}, {"null_syscall_us", 0.08},        {"null_io_us", 0.15},
      {"stat_us", 0.6},                 {"open_close_us", 1.5},           {"signal_install_us", 0.12},
      {"signal_handle_us", 0.9},        {"fork_proc_us", 120.0},          {"exec_proc_us", 400.0},
      {"shell_proc_us", 1100.0},        {"ctx_switch_2p_0k_us", 2.5},     {"ctx_switch_16p_64k_us", 8.0},
      {"page_fault_us", 0.4},           {"pipe_bw_mbps", 3000.0},         {"af_unix_bw_mbps", 6000.0},
      {"mem_read_bw_mbps", 9000.0},     {"mem_write_bw_mbps", 7000.0},    {"bcopy_libc_bw_mbps", 5000.0},
      {"bcopy_hand_bw_mbps", 4500.0},   {"int_add_latency_ns", 0.4},      {"int_mul_latency_ns", 1.2},
      {"int_div_latency_ns", 9.0},      {"int_mod_latency_ns", 10.0},     {"float_add_latency_ns", 1.2},
      {"float_mul_latency_ns", 1.6},    {"float_div_latency_ns", 7.8},    {"double_add_latency_ns", 1.2},
      {"double_mul_latency_ns", 1.6},   {"double_div_latency_ns", 9.5},   {"file_create_0k_us", 12.0},
      {"file_delete_0k_us", 8.0},       {"file_create_10k_us", 35.0},     {"file_delete_10k_us", 15.0},
      {"mmap_latency_us", 700.0},       {"file_reread_bw_mbps", 4500.0},  {"mmap_reread_bw_mbps", 8000.0},
  };
  return values;
}

// Relative group factors {memory/process, local comm, computation, storage}
// for the reference fleet. cr1/cc2 lead memory and computation, the m3 pair
// has the best memory latency among the general-purpose types, hi1/hs1 lead
// storage.
const std::map<std::string, std::array<double, kGroupCount>, std::less<>>& reference_profiles() {
  static const std::map<std::string, std::array<double, kGroupCount>, std::less<>> profiles{
      {"m1.xlarge", {0.70, 0.70, 0.75, 0.80}},   {"m2.xlarge", {0.85, 0.80, 0.90, 0.70}},
      {"m2.2xlarge", {0.86, 0.82, 0.90, 0.75}},  {"m2.4xlarge", {0.87, 0.85, 0.90, 0.80}},
      {"m3.xlarge", {1.00, 0.95, 1.00, 0.90}},   {"m3.2xlarge", {1.00, 1.00, 1.00, 0.95}},
      {"cr1.8xlarge", {1.10, 1.30, 1.05, 1.00}}, {"cc2.8xlarge", {1.05, 1.15, 1.10, 0.90}},
      {"hi1.4xlarge", {0.80, 0.90, 0.85, 1.60}}, {"hs1.8xlarge", {0.75, 0.85, 0.80, 1.30}},
  };
  return profiles;
}

}  // namespace

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

PerformanceProfile profile_for(const VmDescriptor& vm) {
  PerformanceProfile p;
  if (auto it = reference_profiles().find(vm.vm_type); it != reference_profiles().end()) {
    p.group_factor = it->second;
  } else {
    for (std::size_t k = 0; k < kGroupCount; ++k) {
      p.group_factor[k] = 1.0 + 0.4 * unit_noise(stable_hash(vm.vm_type, k));
    }
  }
  if (auto it = vm.tags.find("sim.perf_factor"); it != vm.tags.end()) {
    auto f = parse_decimal(it->second);
    if (!f || *f <= 0.0) throw Error(Errc::InvalidArgument, "vm '" + vm.id + "': bad sim.perf_factor");
    for (auto& g : p.group_factor) g *= *f;
  }
  return p;
}

RawBenchmarkOutput simulated_execute(const VmDescriptor& vm, const ContainerSpec& spec, std::uint64_t profile_seed,
                                     const SimulationConfig& config, const AliasTable& aliases,
                                     const Taxonomy& taxonomy) {
  const auto profile = profile_for(vm);
  RawBenchmarkOutput out;
  out.vm_id = vm.id;
  out.container = spec;
  out.lines.push_back("# slicebench simulated lmbench");
  out.lines.push_back("# host: " + vm.id + " (" + vm.vm_type + ", " + std::to_string(vm.vcpus) + " vCPU)");
  out.lines.push_back("# container: " + std::to_string(spec.memory_mib) + " MiB, cpuset " +
                      spec.cpuset_for(vm.vcpus));

  const std::string slice = std::to_string(spec.memory_mib) + "/" + std::string(to_string(spec.cpu_mode));
  for (const auto& def : taxonomy.attributes()) {
    auto nominal = nominal_values().find(def.key);
    const double base = nominal == nominal_values().end() ? 1.0 : nominal->second;
    // Per-(type, attribute) spread so attributes inside a group do not move in lockstep.
    const double spread = 1.0 + 0.05 * unit_noise(stable_hash(vm.vm_type + "|" + def.key));
    const double factor = profile.group_factor[index_of(def.group)] * spread;
    double value = def.polarity == Polarity::HigherBetter ? base * factor : base / factor;
    const double noise = unit_noise(stable_hash(vm.id + "|" + def.key + "|" + slice, profile_seed));
    value *= 1.0 + config.noise_pct / 100.0 * noise;

    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    out.lines.push_back(aliases.label_for(def.key) + ": " + buf + " " + def.unit);
  }
  return out;
}

std::chrono::microseconds simulated_work_time(const ContainerSpec& spec, const SimulationConfig& config) {
  const double ms = config.work_ms_base + config.work_ms_per_mib * static_cast<double>(spec.memory_mib);
  return std::chrono::microseconds(static_cast<std::int64_t>(std::llround(std::max(ms, 0.0) * 1000.0)));
}

std::vector<HostBinding> reference_fleet(std::uint64_t profile_seed) {
  struct Row {
    const char* type;
    int vcpus;
    double memory_gib;
  };
  static constexpr Row rows[] = {
      {"m1.xlarge", 4, 15.0},    {"m2.xlarge", 2, 17.1},    {"m2.2xlarge", 4, 34.2}, {"m2.4xlarge", 8, 68.4},
      {"m3.xlarge", 4, 15.0},    {"m3.2xlarge", 8, 30.0},   {"cr1.8xlarge", 32, 244.0},
      {"cc2.8xlarge", 32, 60.5}, {"hi1.4xlarge", 16, 60.5}, {"hs1.8xlarge", 16, 117.0},
  };
  std::vector<HostBinding> fleet;
  for (const auto& r : rows) {
    HostBinding h;
    h.vm.id = r.type;
    h.vm.vm_type = r.type;
    h.vm.vcpus = r.vcpus;
    h.vm.memory_gib = r.memory_gib;
    h.executor.kind = ExecutorBinding::Kind::Simulated;
    h.executor.profile_seed = profile_seed;
    fleet.push_back(std::move(h));
  }
  return fleet;
}

}  // namespace slicebench
