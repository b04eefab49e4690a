#pragma once

#include <span>
#include <string>
#include <vector>

#include "slicebench/model.hpp"

namespace slicebench {

struct AttributeStats {
  std::string attribute_key;
  double mean = 0.0;
  double stddev = 0.0;  // population, over the dataset's VMs
};

/// Per-attribute z-scores, VMs x attributes, row-major.
///
/// Lower-better attributes are negated before standardisation so a larger
/// z is uniformly better. A constant column (including m == 1) gets z = 0.
class NormalizedMatrix {
 public:
  NormalizedMatrix() = default;
  NormalizedMatrix(std::vector<std::string> vm_ids, std::vector<std::string> attribute_keys,
                   std::vector<Group> groups, std::vector<AttributeStats> stats, std::vector<double> z);

  const std::vector<std::string>& vm_ids() const { return vm_ids_; }
  const std::vector<std::string>& attribute_keys() const { return keys_; }
  const std::vector<Group>& groups() const { return groups_; }
  const std::vector<AttributeStats>& stats() const { return stats_; }

  std::size_t vm_count() const { return vm_ids_.size(); }
  std::size_t attribute_count() const { return keys_.size(); }
  double z(std::size_t vm, std::size_t attribute) const { return z_[vm * keys_.size() + attribute]; }

 private:
  std::vector<std::string> vm_ids_;
  std::vector<std::string> keys_;
  std::vector<Group> groups_;
  std::vector<AttributeStats> stats_;
  std::vector<double> z_;
};

/// How member z-values of one group are reduced before weighting.
enum class GroupAggregate { Mean, Sum };

std::string_view to_string(GroupAggregate aggregate);
GroupAggregate parse_group_aggregate(std::string_view text);

struct ScoreVector {
  std::vector<std::string> vm_ids;
  std::vector<double> scores;
  WeightVector weights;
  RankMode mode = RankMode::Lightweight;
};

enum class RankDirection { HigherFirst, LowerFirst };

struct RankingOptions {
  GroupAggregate aggregate = GroupAggregate::Mean;
  /// Scores within the same multiple of this quantum tie; 0 means exact equality.
  double tie_quantum = 0.0;
};

/// Throws IncompleteDataset (listing gaps), UnknownAttribute, NonFiniteValue, EmptyInput.
NormalizedMatrix normalize(const BenchmarkDataset& dataset, const Taxonomy& taxonomy = default_taxonomy());

/// S_i = sum_k W_k * aggregate_k(z_i). Groups with no attributes contribute 0.
ScoreVector score(const NormalizedMatrix& nm, const WeightVector& weights,
                  GroupAggregate aggregate = GroupAggregate::Mean);

/// Standard competition ranking ("1224"). Output is ordered best first; ties
/// are listed by vm_id.
std::vector<RankEntry> competition_rank(std::span<const std::string> vm_ids, std::span<const double> values,
                                        RankDirection direction, double tie_quantum = 0.0);

RankTable lightweight_rank(const BenchmarkDataset& current, const WeightVector& weights,
                           const Taxonomy& taxonomy = default_taxonomy(), const RankingOptions& options = {});

/// Current and historic data are normalised separately and their weighted
/// scores summed. Both datasets must cover exactly the same VMs.
RankTable hybrid_rank(const BenchmarkDataset& current, const BenchmarkDataset& historic,
                      const WeightVector& weights, const Taxonomy& taxonomy = default_taxonomy(),
                      const RankingOptions& options = {});

/// Throws StaleHistoricData when `historic_stored_at` is older than max_age_days at `now`.
void check_staleness(Timestamp historic_stored_at, Timestamp now, int max_age_days);

}  // namespace slicebench
