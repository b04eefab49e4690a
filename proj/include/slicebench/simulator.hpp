#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <vector>

#include "slicebench/ingest.hpp"
#include "slicebench/serialize.hpp"

namespace slicebench {

/// Knobs for the simulated executor.
struct SimulationConfig {
  /// Per-value multiplicative noise bound, in percent.
  double noise_pct = 1.0;
  /// Simulated benchmark duration: base + per_mib * memory_mib.
  double work_ms_base = 2.0;
  double work_ms_per_mib = 0.02;
};

/// Relative performance per attribute group (1.0 = nominal, larger is faster).
struct PerformanceProfile {
  std::array<double, kGroupCount> group_factor{1.0, 1.0, 1.0, 1.0};
};

/// Profile for a VM: the built-in reference profile of its vm_type (or one
/// derived from the type name), scaled by the optional "sim.perf_factor" tag.
PerformanceProfile profile_for(const VmDescriptor& vm);

/// Deterministic lmbench-style output for (vm, spec, seed). Values depend on
/// the container slice only through the seeded noise term, so at zero noise
/// every slice yields identical output.
RawBenchmarkOutput simulated_execute(const VmDescriptor& vm, const ContainerSpec& spec, std::uint64_t profile_seed,
                                     const SimulationConfig& config = {},
                                     const AliasTable& aliases = AliasTable::defaults(),
                                     const Taxonomy& taxonomy = default_taxonomy());

std::chrono::microseconds simulated_work_time(const ContainerSpec& spec, const SimulationConfig& config);

/// The ten-VM reference fleet (m1.xlarge ... hs1.8xlarge), bound to the
/// simulated executor.
std::vector<HostBinding> reference_fleet(std::uint64_t profile_seed = 1);

/// Stable 64-bit mixing used for seeded noise.
std::uint64_t stable_hash(std::string_view text, std::uint64_t seed = 0);

}  // namespace slicebench
