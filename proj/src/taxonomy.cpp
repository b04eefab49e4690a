#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slicebench/model.hpp"

namespace slicebench {

Taxonomy::Taxonomy(std::vector<AttributeDef> defs) {
  for (auto& d : defs) upsert(std::move(d));
}

void Taxonomy::upsert(AttributeDef def) {
  if (def.key.empty()) throw Error(Errc::InvalidArgument, "attribute key must not be empty");
  if (auto it = index_.find(def.key); it != index_.end()) {
    defs_[it->second] = std::move(def);
    return;
  }
  index_.emplace(def.key, defs_.size());
  defs_.push_back(std::move(def));
}

const AttributeDef* Taxonomy::find(std::string_view key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &defs_[it->second];
}

const AttributeDef& Taxonomy::at(std::string_view key) const {
  if (const auto* def = find(key)) return *def;
  throw Error(Errc::UnknownAttribute, "attribute '" + std::string(key) + "' is not in the taxonomy");
}

void Taxonomy::apply_override(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("taxonomy override: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::SchemaViolation, "taxonomy override must be a JSON object");
  for (const auto& [key, spec] : doc.items()) {
    try {
      upsert(AttributeDef{key, parse_group(spec.at("group").get<std::string>()),
                          parse_polarity(spec.at("polarity").get<std::string>()),
                          spec.at("unit").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::SchemaViolation, "taxonomy override for '" + key + "': " + e.what());
    }
  }
}

void Taxonomy::apply_override_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::NotFound, "cannot open taxonomy file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_override(buf.str());
}

const Taxonomy& default_taxonomy() {
  static const Taxonomy taxonomy = [] {
    constexpr auto G1 = Group::MemoryProcess;
    constexpr auto G2 = Group::LocalCommunication;
    constexpr auto G3 = Group::Computation;
    constexpr auto G4 = Group::Storage;
    constexpr auto lo = Polarity::LowerBetter;
    constexpr auto hi = Polarity::HigherBetter;
    return Taxonomy({
        // memory hierarchy latencies
        {"l1_cache_latency_ns", G1, lo, "ns"},
        {"l2_cache_latency_ns", G1, lo, "ns"},
        {"main_mem_latency_ns", G1, lo, "ns"},
        {"random_mem_latency_ns", G1, lo, "ns"},
        // process operations
        {"null_syscall_us", G1, lo, "us"},
        {"null_io_us", G1, lo, "us"},
        {"stat_us", G1, lo, "us"},
        {"open_close_us", G1, lo, "us"},
        {"signal_install_us", G1, lo, "us"},
        {"signal_handle_us", G1, lo, "us"},
        {"fork_proc_us", G1, lo, "us"},
        {"exec_proc_us", G1, lo, "us"},
        {"shell_proc_us", G1, lo, "us"},
        {"ctx_switch_2p_0k_us", G1, lo, "us"},
        {"ctx_switch_16p_64k_us", G1, lo, "us"},
        {"page_fault_us", G1, lo, "us"},
        // local communication bandwidths
        {"pipe_bw_mbps", G2, hi, "MB/s"},
        {"af_unix_bw_mbps", G2, hi, "MB/s"},
        {"mem_read_bw_mbps", G2, hi, "MB/s"},
        {"mem_write_bw_mbps", G2, hi, "MB/s"},
        {"bcopy_libc_bw_mbps", G2, hi, "MB/s"},
        {"bcopy_hand_bw_mbps", G2, hi, "MB/s"},
        // integer / float / double operation latencies
        {"int_add_latency_ns", G3, lo, "ns"},
        {"int_mul_latency_ns", G3, lo, "ns"},
        {"int_div_latency_ns", G3, lo, "ns"},
        {"int_mod_latency_ns", G3, lo, "ns"},
        {"float_add_latency_ns", G3, lo, "ns"},
        {"float_mul_latency_ns", G3, lo, "ns"},
        {"float_div_latency_ns", G3, lo, "ns"},
        {"double_add_latency_ns", G3, lo, "ns"},
        {"double_mul_latency_ns", G3, lo, "ns"},
        {"double_div_latency_ns", G3, lo, "ns"},
        // file system
        {"file_create_0k_us", G4, lo, "us"},
        {"file_delete_0k_us", G4, lo, "us"},
        {"file_create_10k_us", G4, lo, "us"},
        {"file_delete_10k_us", G4, lo, "us"},
        {"mmap_latency_us", G4, lo, "us"},
        {"file_reread_bw_mbps", G4, hi, "MB/s"},
        {"mmap_reread_bw_mbps", G4, hi, "MB/s"},
    });
  }();
  return taxonomy;
}

}  // namespace slicebench
