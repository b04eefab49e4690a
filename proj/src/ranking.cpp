#include "slicebench/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace slicebench {

NormalizedMatrix::NormalizedMatrix(std::vector<std::string> vm_ids, std::vector<std::string> attribute_keys,
                                   std::vector<Group> groups, std::vector<AttributeStats> stats,
                                   std::vector<double> z)
    : vm_ids_(std::move(vm_ids)),
      keys_(std::move(attribute_keys)),
      groups_(std::move(groups)),
      stats_(std::move(stats)),
      z_(std::move(z)) {}

std::string_view to_string(GroupAggregate aggregate) {
  return aggregate == GroupAggregate::Mean ? "mean" : "sum";
}

GroupAggregate parse_group_aggregate(std::string_view text) {
  if (text == "mean") return GroupAggregate::Mean;
  if (text == "sum") return GroupAggregate::Sum;
  throw Error(Errc::InvalidArgument, "group aggregate must be 'mean' or 'sum'");
}

NormalizedMatrix normalize(const BenchmarkDataset& dataset, const Taxonomy& taxonomy) {
  if (dataset.empty()) throw Error(Errc::EmptyInput, "dataset '" + dataset.dataset_id() + "' is empty");

  auto vms = dataset.vm_ids();
  auto keys = dataset.attribute_keys();
  if (!dataset.is_complete()) {
    const auto report = validate_dataset(dataset, {}, taxonomy);
    std::string msg = "dataset '" + dataset.dataset_id() + "' is incomplete: " +
                      std::to_string(report.gaps.size()) + " missing cell(s)";
    for (std::size_t i = 0; i < report.gaps.size() && i < 10; ++i) {
      msg += (i ? ", " : " ") + report.gaps[i].first + "/" + report.gaps[i].second;
    }
    throw Error(Errc::IncompleteDataset, msg);
  }

  const std::size_t m = vms.size();
  const std::size_t n = keys.size();
  std::vector<Group> groups;
  std::vector<AttributeStats> stats;
  std::vector<double> z(m * n, 0.0);
  std::vector<double> column(m);

  for (std::size_t j = 0; j < n; ++j) {
    const AttributeDef& def = taxonomy.at(keys[j]);
    groups.push_back(def.group);
    const double sign = def.polarity == Polarity::LowerBetter ? -1.0 : 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = *dataset.value(vms[i], keys[j]);
      if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "non-finite value " + vms[i] + "/" + keys[j]);
      column[i] = sign * v;
    }

    double sum = 0.0;
    for (double v : column) sum += v;
    const double mean = sum / static_cast<double>(m);
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());

    double stddev = 0.0;
    if (*lo != *hi) {
      double ss = 0.0;
      for (double v : column) ss += (v - mean) * (v - mean);
      stddev = std::sqrt(ss / static_cast<double>(m));
      for (std::size_t i = 0; i < m; ++i) z[i * n + j] = (column[i] - mean) / stddev;
    }
    stats.push_back(AttributeStats{keys[j], mean, stddev});
  }
  return NormalizedMatrix(std::move(vms), std::move(keys), std::move(groups), std::move(stats), std::move(z));
}

ScoreVector score(const NormalizedMatrix& nm, const WeightVector& weights, GroupAggregate aggregate) {
  weights.validate();
  std::array<std::size_t, kGroupCount> members{};
  for (Group g : nm.groups()) ++members[index_of(g)];

  ScoreVector out;
  out.vm_ids = nm.vm_ids();
  out.weights = weights;
  out.scores.reserve(nm.vm_count());
  for (std::size_t i = 0; i < nm.vm_count(); ++i) {
    std::array<double, kGroupCount> group_sum{};
    for (std::size_t j = 0; j < nm.attribute_count(); ++j) group_sum[index_of(nm.groups()[j])] += nm.z(i, j);

    double s = 0.0;
    for (std::size_t k = 0; k < kGroupCount; ++k) {
      if (members[k] == 0) continue;
      const double g = aggregate == GroupAggregate::Mean ? group_sum[k] / static_cast<double>(members[k])
                                                         : group_sum[k];
      s += weights[k] * g;
    }
    out.scores.push_back(s);
  }
  return out;
}

std::vector<RankEntry> competition_rank(std::span<const std::string> vm_ids, std::span<const double> values,
                                        RankDirection direction, double tie_quantum) {
  if (vm_ids.size() != values.size()) throw Error(Errc::LengthMismatch, "vm ids and values differ in length");
  if (values.empty()) throw Error(Errc::EmptyInput, "nothing to rank");
  if (!(tie_quantum >= 0.0) || !std::isfinite(tie_quantum)) {
    throw Error(Errc::InvalidArgument, "tie quantum must be a finite value >= 0");
  }

  std::vector<double> keys(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw Error(Errc::NonFiniteValue, "non-finite value for " + vm_ids[i]);
    double k = tie_quantum > 0.0 ? std::round(values[i] / tie_quantum) : values[i];
    keys[i] = direction == RankDirection::HigherFirst ? -k : k;  // ascending key = better
  }

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return vm_ids[a] < vm_ids[b];
  });

  std::vector<RankEntry> out;
  out.reserve(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t i = order[pos];
    int rank = static_cast<int>(pos) + 1;
    if (pos > 0 && keys[order[pos - 1]] == keys[i]) rank = out.back().rank;
    out.push_back(RankEntry{vm_ids[i], values[i], rank});
  }
  return out;
}

RankTable lightweight_rank(const BenchmarkDataset& current, const WeightVector& weights, const Taxonomy& taxonomy,
                           const RankingOptions& options) {
  weights.validate();
  const auto sv = score(normalize(current, taxonomy), weights, options.aggregate);

  RankTable table;
  table.mode = RankMode::Lightweight;
  table.entries = competition_rank(sv.vm_ids, sv.scores, RankDirection::HigherFirst, options.tie_quantum);
  table.weights = weights;
  table.dataset_ids = {current.dataset_id()};
  table.container = current.container();
  table.execution_mode = execution_mode_for(current.container().cpu_mode);
  return table;
}

RankTable hybrid_rank(const BenchmarkDataset& current, const BenchmarkDataset& historic,
                      const WeightVector& weights, const Taxonomy& taxonomy, const RankingOptions& options) {
  weights.validate();
  if (current.vm_ids() != historic.vm_ids()) {
    throw Error(Errc::VmSetMismatch, "current dataset '" + current.dataset_id() + "' and historic dataset '" +
                                         historic.dataset_id() + "' cover different VMs");
  }
  const auto now_scores = score(normalize(current, taxonomy), weights, options.aggregate);
  const auto past_scores = score(normalize(historic, taxonomy), weights, options.aggregate);

  std::vector<double> combined(now_scores.scores.size());
  for (std::size_t i = 0; i < combined.size(); ++i) combined[i] = now_scores.scores[i] + past_scores.scores[i];

  RankTable table;
  table.mode = RankMode::Hybrid;
  table.entries = competition_rank(now_scores.vm_ids, combined, RankDirection::HigherFirst, options.tie_quantum);
  table.weights = weights;
  table.dataset_ids = {current.dataset_id(), historic.dataset_id()};
  table.container = current.container();
  table.execution_mode = execution_mode_for(current.container().cpu_mode);
  return table;
}

void check_staleness(Timestamp historic_stored_at, Timestamp now, int max_age_days) {
  if (max_age_days <= 0) throw Error(Errc::InvalidArgument, "max_age_days must be > 0");
  if (now - historic_stored_at > std::chrono::days{max_age_days}) {
    throw Error(Errc::StaleHistoricData, "historic data stored " + format_timestamp(historic_stored_at) +
                                             " is older than " + std::to_string(max_age_days) + " days");
  }
}

}  // namespace slicebench
