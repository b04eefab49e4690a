#include "slicebench/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "slicebench/ranking.hpp"

namespace slicebench {

using nlohmann::json;

std::vector<TimingRecord> read_timings(std::istream& in) {
  std::vector<TimingRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      TimingRecord r;
      r.vm_id = j.at("vm_id").get<std::string>();
      r.application = j.at("application").get<std::string>();
      r.execution_mode = parse_execution_mode(j.at("mode").get<std::string>());
      r.wall_time_seconds = j.at("seconds").get<double>();
      if (r.vm_id.empty() || r.application.empty()) throw Error(Errc::SchemaViolation, "empty vm_id or application");
      if (!std::isfinite(r.wall_time_seconds) || r.wall_time_seconds < 0.0) {
        throw Error(Errc::NonFiniteValue, "seconds must be finite and non-negative");
      }
      out.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(e.code(), "timings line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::SchemaViolation, "timings line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TimingRecord> load_timings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::NotFound, "cannot open '" + path + "'");
  return read_timings(in);
}

RankTable empirical_ranks(std::span<const TimingRecord> timings, std::span<const std::string> expected_vms) {
  if (timings.empty()) throw Error(Errc::EmptyInput, "no timings");
  const auto& app = timings.front().application;
  const auto mode = timings.front().execution_mode;
  std::vector<std::string> ids;
  std::vector<double> secs;
  std::set<std::string> seen;
  for (const auto& t : timings) {
    if (t.application != app || t.execution_mode != mode) {
      throw Error(Errc::InvalidArgument, "timings mix applications or execution modes");
    }
    if (!seen.insert(t.vm_id).second) {
      throw Error(Errc::DuplicateTiming, "duplicate timing for '" + t.vm_id + "' (" + app + ", " +
                                             std::string(to_string(mode)) + ")");
    }
    ids.push_back(t.vm_id);
    secs.push_back(t.wall_time_seconds);
  }
  for (const auto& vm : expected_vms) {
    if (seen.count(vm) == 0) throw Error(Errc::MissingVm, "no timing for '" + vm + "' in " + app);
  }
  RankTable table;
  table.mode = RankMode::Empirical;
  table.application = app;
  table.execution_mode = mode;
  table.entries = competition_rank(ids, secs, RankDirection::LowerFirst);
  return table;
}

double rank_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "rank vectors differ in length");
  if (a.size() < 2) throw Error(Errc::LengthMismatch, "need at least two ranks");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(Errc::DegenerateRanks, "a rank vector has zero variance");
  return 100.0 * sab / std::sqrt(saa * sbb);
}

double rank_correlation(const RankTable& a, const RankTable& b) {
  if (a.vm_ids() != b.vm_ids()) throw Error(Errc::VmSetMismatch, "rank tables cover different VMs");
  std::vector<double> ra, rb;
  for (const auto& e : a.entries) {
    ra.push_back(static_cast<double>(e.rank));
    rb.push_back(static_cast<double>(b.find(e.vm_id)->rank));
  }
  return rank_correlation(ra, rb);
}

EvaluationReport build_report(const RankTable& empirical, std::span<const RankTable> benchmark_tables) {
  std::vector<const RankTable*> tables;
  for (const auto& t : benchmark_tables) tables.push_back(&t);
  std::stable_sort(tables.begin(), tables.end(), [](const RankTable* x, const RankTable* y) {
    const auto mx = x->container ? x->container->memory_mib : 0;
    const auto my = y->container ? y->container->memory_mib : 0;
    return mx < my;
  });

  EvaluationReport report;
  const ExecutionMode mode = empirical.execution_mode.value_or(ExecutionMode::Sequential);
  for (const RankTable* t : tables) {
    CorrelationReport c;
    c.application = empirical.application;
    c.execution_mode = mode;
    c.memory_mib = t->container ? t->container->memory_mib : 0;
    c.correlation_percent = rank_correlation(empirical, *t);
    report.correlations.push_back(c);
  }

  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-14s %5s", "vm", "emp");
  os << buf;
  for (const RankTable* t : tables) {
    std::snprintf(buf, sizeof buf, " %6lld", static_cast<long long>(t->container ? t->container->memory_mib : 0));
    os << buf;
  }
  os << '\n';
  // Rows follow the empirical table's entry order (best first).
  for (const auto& e : empirical.entries) {
    std::snprintf(buf, sizeof buf, "%-14s %5d", e.vm_id.c_str(), e.rank);
    os << buf;
    for (const RankTable* t : tables) {
      std::snprintf(buf, sizeof buf, " %6d", t->find(e.vm_id)->rank);
      os << buf;
    }
    os << '\n';
  }
  os << "r%";
  for (const auto& c : report.correlations) {
    std::snprintf(buf, sizeof buf, " %.1f", c.correlation_percent);
    os << buf;
  }
  os << '\n';
  report.rank_table_text = os.str();
  return report;
}

std::string format_correlation_summary(std::span<const CorrelationReport> reports) {
  using Column = std::pair<ExecutionMode, std::int64_t>;
  std::set<Column> columns;
  std::vector<std::string> apps;
  std::map<std::pair<std::string, Column>, double> cells;
  for (const auto& r : reports) {
    const Column col{r.execution_mode, r.memory_mib};
    columns.insert(col);
    if (std::find(apps.begin(), apps.end(), r.application) == apps.end()) apps.push_back(r.application);
    cells[{r.application, col}] = r.correlation_percent;
  }
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-16s", "application");
  os << buf;
  for (const auto& [mode, mib] : columns) {
    std::snprintf(buf, sizeof buf, " %5s/%-5lld", mode == ExecutionMode::Sequential ? "seq" : "par",
                  static_cast<long long>(mib));
    os << buf;
  }
  os << '\n';
  for (const auto& app : apps) {
    std::snprintf(buf, sizeof buf, "%-16s", app.c_str());
    os << buf;
    for (const auto& col : columns) {
      auto it = cells.find({app, col});
      if (it == cells.end()) {
        std::snprintf(buf, sizeof buf, " %11s", "-");
      } else {
        std::snprintf(buf, sizeof buf, " %11.1f", it->second);
      }
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

json to_json(const CorrelationReport& report) {
  return json{{"application", report.application},
              {"mode", std::string(to_string(report.execution_mode))},
              {"memory_mib", report.memory_mib},
              {"correlation_percent", report.correlation_percent}};
}

}  // namespace slicebench
