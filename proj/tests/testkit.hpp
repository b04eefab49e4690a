#pragma once

// Shared by the unit tests and the acceptance binary: reference oracles
// written straight from the definitions, random instance generators, a
// recording fake container engine and the randomized property checks.

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "slicebench/engine.hpp"
#include "slicebench/ranking.hpp"

namespace testkit {

using namespace slicebench;

// --- oracles -------------------------------------------------------------------

/// rank_i = 1 + number of values strictly better than value_i.
std::vector<int> oracle_competition_ranks(const std::vector<double>& values, bool higher_better);

/// Plain two-pass Pearson in long double, times 100.
double oracle_pearson_percent(const std::vector<double>& a, const std::vector<double>& b);

/// Weighted group-mean score for every VM, computed cell by cell from the
/// definitions: orient by polarity, standardise with the population stddev,
/// average within groups, weight.
struct RawInstance {
  std::vector<std::string> vms;
  std::vector<AttributeDef> attributes;
  std::vector<std::vector<double>> values;  // [vm][attribute]

  Taxonomy taxonomy() const { return Taxonomy(attributes); }
  BenchmarkDataset dataset(std::string id = "ds") const;
};
std::vector<double> oracle_scores(const RawInstance& instance, const WeightVector& weights);

/// Ranks by exhaustive pairwise comparison of oracle scores (exact ties only).
std::vector<int> oracle_ranks(const std::vector<double>& scores);

// --- generators ----------------------------------------------------------------

RawInstance random_instance(std::mt19937_64& rng, std::size_t m, std::size_t n);
WeightVector random_weights(std::mt19937_64& rng, bool integral = false);

/// Rank of every VM in `table`, in `vms` order.
std::vector<int> ranks_in_order(const RankTable& table, const std::vector<std::string>& vms);

// --- fake engine ---------------------------------------------------------------

enum class FailAt { Never, Create, Start, Wait, Timeout, Logs, EmptyLogs, NonZeroExit };
const char* to_string(FailAt stage);
/// gtest value printers.
inline void PrintTo(FailAt stage, std::ostream* os) { *os << to_string(stage); }

/// Records every call, keeps a live-container count across all hosts and can
/// fail one host at a chosen stage. Logs come from the simulator.
class RecordingEngineHub {
 public:
  struct Call {
    std::string host;
    std::string op;
    std::string container;
  };

  std::map<std::string, FailAt> failures;  // by host id
  std::chrono::milliseconds work_time{1};

  std::function<std::unique_ptr<ContainerEngine>(const HostBinding&)> factory();

  std::vector<ContainerCreateRequest> creates() const;
  std::vector<Call> calls() const;
  std::size_t live() const;
  /// Highest number of containers alive at the same time.
  std::size_t max_live() const;

 private:
  friend class RecordingEngine;
  mutable std::mutex mutex_;
  std::vector<ContainerCreateRequest> creates_;
  std::vector<Call> calls_;
  std::set<std::string> live_;
  std::uint64_t next_ = 1;
  std::size_t max_live_ = 0;
};

// --- properties ----------------------------------------------------------------

/// Each returns std::nullopt on success or a description of the first
/// counterexample. `instances` is the number of random instances checked.
using PropertyResult = std::optional<std::string>;

PropertyResult prop_normalization_moments(std::uint64_t seed, int instances);
PropertyResult prop_affine_invariance(std::uint64_t seed, int instances);
PropertyResult prop_zero_weight_insensitivity(std::uint64_t seed, int instances);
PropertyResult prop_hybrid_self_equivalence(std::uint64_t seed, int instances);
PropertyResult prop_rank_bounds_and_gaps(std::uint64_t seed, int instances);
PropertyResult prop_correlation_laws(std::uint64_t seed, int instances);
PropertyResult prop_bruteforce_oracle(std::uint64_t seed, int instances);

struct NamedProperty {
  const char* name;
  PropertyResult (*check)(std::uint64_t, int);
};
const std::vector<NamedProperty>& all_properties();
inline void PrintTo(const NamedProperty& p, std::ostream* os) { *os << p.name; }

// --- reference values ---------------------------------------------------------

/// Published correlations, in table order: case study 1..3, then
/// sequential 100/500/1000 MiB followed by parallel 100/500/1000 MiB.
struct PublishedRow {
  int case_study;
  const char* method;  // "lightweight" | "hybrid"
  double values[6];
};
const std::vector<PublishedRow>& published_correlations();

std::string fixture_path(const std::string& relative);

/// A loopback TCP port that was free a moment ago (bound to port 0, then closed).
int free_loopback_port();

}  // namespace testkit
