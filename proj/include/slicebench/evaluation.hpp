#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "slicebench/model.hpp"

namespace slicebench {

/// Measured wall time of one application run on one VM.
struct TimingRecord {
  std::string vm_id;
  std::string application;
  ExecutionMode execution_mode = ExecutionMode::Sequential;
  double wall_time_seconds = 0.0;
};

/// JSON lines: {"vm_id", "application", "mode", "seconds"}.
std::vector<TimingRecord> read_timings(std::istream& in);
std::vector<TimingRecord> load_timings(const std::string& path);

/// Lowest time ranks first, ties share a rank. All records must belong to one
/// (application, mode). When `expected_vms` is non-empty every listed VM must
/// have a timing (MissingVm). Duplicate VMs throw DuplicateTiming.
RankTable empirical_ranks(std::span<const TimingRecord> timings, std::span<const std::string> expected_vms = {});

/// Pearson correlation of two rank vectors, as a percentage in [-100, 100].
/// Throws LengthMismatch (different lengths or fewer than 2) and
/// DegenerateRanks (a vector with zero variance).
double rank_correlation(std::span<const double> a, std::span<const double> b);

/// Pairs the tables by vm_id; throws VmSetMismatch when the VM sets differ.
double rank_correlation(const RankTable& a, const RankTable& b);

struct CorrelationReport {
  std::string application;
  ExecutionMode execution_mode = ExecutionMode::Sequential;
  std::int64_t memory_mib = 0;
  double correlation_percent = 0.0;
};

struct EvaluationReport {
  std::vector<CorrelationReport> correlations;
  /// VM rows; empirical column then one rank column per container size.
  std::string rank_table_text;
};

/// Correlates one empirical table against benchmark tables for one
/// (application, mode), one table per container size. Benchmark tables are
/// ordered by memory size in the output.
EvaluationReport build_report(const RankTable& empirical, std::span<const RankTable> benchmark_tables);

/// Rows are applications; columns are (mode, memory size) pairs, sequential first.
std::string format_correlation_summary(std::span<const CorrelationReport> reports);

nlohmann::json to_json(const CorrelationReport& report);

}  // namespace slicebench
