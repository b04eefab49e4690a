#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "slicebench/model.hpp"

namespace slicebench {

/// Captured stdout of one benchmark container.
struct RawBenchmarkOutput {
  std::string vm_id;
  ContainerSpec container;
  std::vector<std::string> lines;
};

/// Maps tool-specific labels ("Float div", "Mem read") to canonical attribute
/// keys. Matching ignores case and collapses runs of whitespace. Every
/// canonical key is also accepted as its own label.
class AliasTable {
 public:
  AliasTable() = default;

  static const AliasTable& defaults();

  void add(std::string_view label, std::string key);
  /// JSON object {"<label>": "<canonical key>", ...}. Every key must be in
  /// `taxonomy` (UnknownAttribute).
  void load_json(std::string_view json_text, const Taxonomy& taxonomy = default_taxonomy());

  const std::string* resolve(std::string_view label) const;
  /// The preferred display label for a key (first one registered).
  std::string label_for(std::string_view key) const;

 private:
  std::map<std::string, std::string, std::less<>> by_label_;
  std::map<std::string, std::string, std::less<>> preferred_;
};

struct ParseResult {
  std::vector<AttributeMeasurement> measurements;
  std::vector<std::string> warnings;
};

/// Line grammar: `<label>: <number> [<unit>]`. Blank lines and lines starting
/// with '#' are skipped. Lines whose label is not in the alias table become
/// warnings. A recognised label with a non-numeric payload throws
/// MalformedNumber; output with no non-blank lines throws EmptyOutput.
ParseResult parse_tool_output(const RawBenchmarkOutput& raw, Timestamp captured_at,
                              const AliasTable& aliases = AliasTable::defaults(),
                              const Taxonomy& taxonomy = default_taxonomy());

/// Locale-independent decimal with optional exponent; the whole token must be
/// consumed and the result finite.
std::optional<double> parse_decimal(std::string_view token);

/// Scale factor taking `unit` to `canonical_unit`, if the two are compatible.
std::optional<double> unit_scale(std::string_view unit, std::string_view canonical_unit);

/// Thrown by read_canonical_records with a 1-based line number.
class RecordError : public Error {
 public:
  RecordError(std::size_t line, const std::string& message)
      : Error(Errc::SchemaViolation, "line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// One JSON object per line:
/// {"vm_id","attribute","value","unit","memory_mib","cpu_mode","captured_at"}.
std::string to_canonical_record(const AttributeMeasurement& m);
AttributeMeasurement parse_canonical_record(std::string_view line, std::size_t line_number = 1);

BenchmarkDataset read_canonical_records(std::istream& in, std::string dataset_id = {},
                                        DatasetRole role = DatasetRole::Current);
void write_canonical_records(std::ostream& out, const BenchmarkDataset& dataset);

BenchmarkDataset read_canonical_file(const std::string& path, std::string dataset_id = {},
                                     DatasetRole role = DatasetRole::Current);

}  // namespace slicebench
