#include "slicebench/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace slicebench {

namespace {

std::string normalize_label(std::string_view label) {
  std::string out;
  bool space = false;
  for (char c : label) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct UnitInfo {
  std::string_view dimension;
  double scale;  // to the dimension's base unit
};

std::optional<UnitInfo> lookup_unit(std::string_view unit) {
  static const std::map<std::string, UnitInfo, std::less<>> units{
      {"ns", {"time", 1.0}},          {"nanoseconds", {"time", 1.0}},
      {"us", {"time", 1e3}},          {"microseconds", {"time", 1e3}},
      {"ms", {"time", 1e6}},          {"milliseconds", {"time", 1e6}},
      {"s", {"time", 1e9}},           {"seconds", {"time", 1e9}},
      {"kb/s", {"bw", 1.0 / 1024.0}}, {"mb/s", {"bw", 1.0}},
      {"mb/sec", {"bw", 1.0}},        {"gb/s", {"bw", 1024.0}},
  };
  auto it = units.find(normalize_label(unit));
  if (it == units.end()) return std::nullopt;
  return it->second;
}

}  // namespace

// --- alias table ------------------------------------------------------------

void AliasTable::add(std::string_view label, std::string key) {
  preferred_.try_emplace(key, std::string(trim(label)));
  by_label_[normalize_label(label)] = std::move(key);
}

void AliasTable::load_json(std::string_view json_text, const Taxonomy& taxonomy) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("alias table: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::SchemaViolation, "alias table must be a JSON object");
  for (const auto& [label, key] : doc.items()) {
    if (!key.is_string()) throw Error(Errc::SchemaViolation, "alias '" + label + "' must map to a string");
    if (!taxonomy.find(key.get<std::string>())) {
      throw Error(Errc::UnknownAttribute, "alias '" + label + "' maps to unknown attribute '" + key.get<std::string>() + "'");
    }
    add(label, key.get<std::string>());
  }
}

const std::string* AliasTable::resolve(std::string_view label) const {
  auto it = by_label_.find(normalize_label(label));
  return it == by_label_.end() ? nullptr : &it->second;
}

std::string AliasTable::label_for(std::string_view key) const {
  auto it = preferred_.find(key);
  return it == preferred_.end() ? std::string(key) : it->second;
}

const AliasTable& AliasTable::defaults() {
  static const AliasTable table = [] {
    AliasTable t;
    const std::pair<const char*, const char*> labels[] = {
        {"L1 cache latency", "l1_cache_latency_ns"},
        {"L2 cache latency", "l2_cache_latency_ns"},
        {"Main mem latency", "main_mem_latency_ns"},
        {"Random mem latency", "random_mem_latency_ns"},
        {"Null syscall", "null_syscall_us"},
        {"Null I/O", "null_io_us"},
        {"Stat", "stat_us"},
        {"Open/close", "open_close_us"},
        {"Signal install", "signal_install_us"},
        {"Signal handle", "signal_handle_us"},
        {"Fork proc", "fork_proc_us"},
        {"Exec proc", "exec_proc_us"},
        {"Shell proc", "shell_proc_us"},
        {"Context switch 2p/0K", "ctx_switch_2p_0k_us"},
        {"Context switch 16p/64K", "ctx_switch_16p_64k_us"},
        {"Page fault", "page_fault_us"},
        {"Pipe bandwidth", "pipe_bw_mbps"},
        {"AF_UNIX bandwidth", "af_unix_bw_mbps"},
        {"Mem read", "mem_read_bw_mbps"},
        {"Mem write", "mem_write_bw_mbps"},
        {"Bcopy libc", "bcopy_libc_bw_mbps"},
        {"Bcopy hand", "bcopy_hand_bw_mbps"},
        {"Integer add", "int_add_latency_ns"},
        {"Integer mul", "int_mul_latency_ns"},
        {"Integer div", "int_div_latency_ns"},
        {"Integer mod", "int_mod_latency_ns"},
        {"Float add", "float_add_latency_ns"},
        {"Float mul", "float_mul_latency_ns"},
        {"Float div", "float_div_latency_ns"},
        {"Double add", "double_add_latency_ns"},
        {"Double mul", "double_mul_latency_ns"},
        {"Double div", "double_div_latency_ns"},
        {"0K file create", "file_create_0k_us"},
        {"0K file delete", "file_delete_0k_us"},
        {"10K file create", "file_create_10k_us"},
        {"10K file delete", "file_delete_10k_us"},
        {"Mmap latency", "mmap_latency_us"},
        {"File reread", "file_reread_bw_mbps"},
        {"Mmap reread", "mmap_reread_bw_mbps"},
    };
    for (const auto& [label, key] : labels) t.add(label, key);
    for (const auto& def : default_taxonomy().attributes()) {
      if (t.resolve(def.key) == nullptr) t.add(def.key, def.key);
    }
    return t;
  }();
  return table;
}

// --- numbers and units --------------------------------------------------------

std::optional<double> parse_decimal(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v,
                                   std::chars_format::general);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<double> unit_scale(std::string_view unit, std::string_view canonical_unit) {
  if (normalize_label(unit) == normalize_label(canonical_unit)) return 1.0;
  auto from = lookup_unit(unit);
  auto to = lookup_unit(canonical_unit);
  if (!from || !to || from->dimension != to->dimension) return std::nullopt;
  return from->scale / to->scale;
}

// --- tool output --------------------------------------------------------------

ParseResult parse_tool_output(const RawBenchmarkOutput& raw, Timestamp captured_at,
                              const AliasTable& aliases, const Taxonomy& taxonomy) {
  const bool blank = std::all_of(raw.lines.begin(), raw.lines.end(), [](const std::string& l) {
    return l.find_first_not_of(" \t\r") == std::string::npos;
  });
  if (blank) {
    throw Error(Errc::EmptyOutput, "benchmark output for '" + raw.vm_id + "' is empty");
  }
  ParseResult result;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < raw.lines.size(); ++i) {
    const std::string_view line = trim(raw.lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto where = "line " + std::to_string(i + 1);

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      result.warnings.push_back(where + ": unrecognised line '" + std::string(line) + "'");
      continue;
    }
    const std::string_view label = trim(line.substr(0, colon));
    const std::string* key = aliases.resolve(label);
    if (key == nullptr) {
      result.warnings.push_back(where + ": unrecognised label '" + std::string(label) + "'");
      continue;
    }

    std::string_view payload = trim(line.substr(colon + 1));
    const auto space = payload.find_first_of(" \t");
    const std::string_view number = payload.substr(0, space);
    const std::string_view unit = space == std::string_view::npos ? std::string_view{} : trim(payload.substr(space));

    auto value = parse_decimal(number);
    if (!value) {
      throw Error(Errc::MalformedNumber, where + ": '" + std::string(label) + "' has non-numeric payload '" +
                                             std::string(payload) + "'");
    }
    const AttributeDef* def = taxonomy.find(*key);
    if (def == nullptr) {
      result.warnings.push_back(where + ": alias '" + std::string(label) + "' maps to unknown attribute '" +
                                *key + "'");
      continue;
    }
    double scaled = *value;
    if (!unit.empty()) {
      auto scale = unit_scale(unit, def->unit);
      if (!scale) {
        result.warnings.push_back(where + ": unit '" + std::string(unit) + "' incompatible with " + def->unit);
        continue;
      }
      scaled *= *scale;
    }
    if (auto it = seen.find(*key); it != seen.end()) {
      result.warnings.push_back(where + ": repeated attribute '" + *key + "', keeping the last value");
      result.measurements[it->second].value = scaled;
      continue;
    }
    seen.emplace(*key, result.measurements.size());
    result.measurements.push_back(
        AttributeMeasurement{raw.vm_id, *key, scaled, def->unit, raw.container, captured_at});
  }
  return result;
}

// --- canonical records --------------------------------------------------------

std::string to_canonical_record(const AttributeMeasurement& m) {
  nlohmann::ordered_json j;
  j["vm_id"] = m.vm_id;
  j["attribute"] = m.attribute_key;
  j["value"] = m.value;
  j["unit"] = m.unit;
  j["memory_mib"] = m.container.memory_mib;
  j["cpu_mode"] = to_string(m.container.cpu_mode);
  j["captured_at"] = format_timestamp(m.captured_at);
  return j.dump();
}

AttributeMeasurement parse_canonical_record(std::string_view line, std::size_t line_number) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw RecordError(line_number, "not a JSON object");
  }
  if (!j.is_object()) throw RecordError(line_number, "not a JSON object");

  auto require = [&](const char* field) -> const nlohmann::json& {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) throw RecordError(line_number, std::string("missing field '") + field + "'");
    return *it;
  };
  auto string_field = [&](const char* field) {
    const auto& v = require(field);
    if (!v.is_string()) throw RecordError(line_number, std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
  };

  AttributeMeasurement m;
  m.vm_id = string_field("vm_id");
  m.attribute_key = string_field("attribute");
  const auto& value = require("value");
  if (!value.is_number()) throw RecordError(line_number, "field 'value' must be a number");
  m.value = value.get<double>();
  if (!std::isfinite(m.value)) throw RecordError(line_number, "field 'value' must be finite");
  m.unit = string_field("unit");
  const auto& mem = require("memory_mib");
  if (!mem.is_number_integer()) throw RecordError(line_number, "field 'memory_mib' must be an integer");
  m.container.memory_mib = mem.get<std::int64_t>();
  m.container.image_ref.clear();
  try {
    m.container.cpu_mode = parse_cpu_mode(string_field("cpu_mode"));
    m.captured_at = parse_timestamp(string_field("captured_at"));
    m.container.validate();
  } catch (const RecordError&) {
    throw;
  } catch (const Error& e) {
    throw RecordError(line_number, e.what());
  }
  if (m.vm_id.empty() || m.attribute_key.empty()) {
    throw RecordError(line_number, "vm_id and attribute must be non-empty");
  }
  return m;
}

BenchmarkDataset read_canonical_records(std::istream& in, std::string dataset_id, DatasetRole role) {
  BenchmarkDataset ds(std::move(dataset_id), role, ContainerSpec{});
  std::string line;
  std::size_t line_number = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    auto m = parse_canonical_record(line, line_number);
    if (first) {
      ds.set_container(m.container);
      first = false;
    } else if (!(m.container == ds.container())) {
      throw RecordError(line_number, "record container differs from the dataset's container");
    }
    try {
      ds.add(std::move(m));
    } catch (const Error& e) {
      throw RecordError(line_number, e.what());
    }
  }
  return ds;
}

void write_canonical_records(std::ostream& out, const BenchmarkDataset& dataset) {
  for (const auto& m : dataset.measurements()) out << to_canonical_record(m) << '\n';
}

BenchmarkDataset read_canonical_file(const std::string& path, std::string dataset_id, DatasetRole role) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::NotFound, "cannot open '" + path + "'");
  return read_canonical_records(in, std::move(dataset_id), role);
}

}  // namespace slicebench
