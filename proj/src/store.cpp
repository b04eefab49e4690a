#include "slicebench/store.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include "slicebench/ingest.hpp"
#include "slicebench/serialize.hpp"

namespace slicebench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::StorageCorrupt, "sha256 failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

StoredDataset DatasetStore::latest_historic(std::span<const std::string> vm_set, const ContainerSpec& container,
                                            int max_age_days, Timestamp now) const {
  if (max_age_days <= 0) throw Error(Errc::InvalidArgument, "max_age_days must be > 0");
  const DatasetIndexEntry* best = nullptr;
  const auto entries = list_datasets();
  for (const auto& e : entries) {
    if (e.role != DatasetRole::Historic || !(e.container == container)) continue;
    if (e.stored_at > now || now - e.stored_at > std::chrono::days{max_age_days}) continue;
    const std::set<std::string> have(e.vm_ids.begin(), e.vm_ids.end());
    const bool covers = std::all_of(vm_set.begin(), vm_set.end(),
                                    [&](const std::string& vm) { return have.count(vm) != 0; });
    if (!covers) continue;
    if (best == nullptr || e.stored_at > best->stored_at ||
        (e.stored_at == best->stored_at && e.dataset_id > best->dataset_id)) {
      best = &e;
    }
  }
  if (best == nullptr) {
    throw Error(Errc::NoEligibleHistoric,
                "no historic dataset for " + std::to_string(container.memory_mib) + " MiB " +
                    std::string(to_string(container.cpu_mode)) + " covering all " + std::to_string(vm_set.size()) +
                    " VM(s) within " + std::to_string(max_age_days) + " days");
  }
  return get_dataset(best->dataset_id);
}

// --- FileStore ------------------------------------------------------------------

namespace {

json index_line(const DatasetIndexEntry& e) {
  return json{{"dataset_id", e.dataset_id},      {"role", to_string(e.role)},
              {"container", to_json(e.container)}, {"stored_at", format_timestamp(e.stored_at)},
              {"checksum", e.checksum},           {"vm_ids", e.vm_ids},
              {"measurements", e.measurement_count}};
}

bool valid_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  }) && id.front() != '.';
}

void write_atomically(const fs::path& target, std::string_view content) {
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::StorageCorrupt, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(Errc::StorageCorrupt, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

/// Exclusive advisory lock on <root>/store.lock, so separate processes
/// sharing a store (CLI and server) do not interleave writes.
class StoreLock {
 public:
  explicit StoreLock(const fs::path& root) {
    fd_ = ::open((root / "store.lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
      if (fd_ >= 0) ::close(fd_);
      throw Error(Errc::StorageCorrupt, "cannot lock store at '" + root.string() + "'");
    }
  }
  ~StoreLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  int fd_ = -1;
};

/// Drops a torn final line so the next append starts on a fresh line.
void repair_index_tail(const fs::path& index) {
  std::error_code ec;
  const auto size = fs::file_size(index, ec);
  if (ec || size == 0) return;
  std::ifstream in(index, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.back() == '\n') return;
  const auto last = content.rfind('\n');
  fs::resize_file(index, last == std::string::npos ? 0 : last + 1);
}

}  // namespace

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "datasets");
  fs::create_directories(root_ / "runs");
}

std::vector<DatasetIndexEntry> FileStore::list_datasets() const {
  std::vector<DatasetIndexEntry> out;
  std::ifstream in(root_ / "index.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      DatasetIndexEntry e;
      e.dataset_id = j.at("dataset_id").get<std::string>();
      e.role = parse_dataset_role(j.at("role").get<std::string>());
      e.container = container_from_json(j.at("container"));
      e.stored_at = parse_timestamp(j.at("stored_at").get<std::string>());
      e.checksum = j.at("checksum").get<std::string>();
      e.vm_ids = j.at("vm_ids").get<std::vector<std::string>>();
      e.measurement_count = j.at("measurements").get<std::size_t>();
      out.push_back(std::move(e));
    } catch (const json::exception&) {
      // A torn final line from an interrupted append is not committed.
      if (in.peek() == EOF) break;
      throw Error(Errc::StorageCorrupt, "index.jsonl has a malformed line");
    }
  }
  return out;
}

std::string FileStore::put_dataset(const BenchmarkDataset& dataset, DatasetRole role,
                                   std::optional<Timestamp> stored_at) {
  std::lock_guard lock(write_mutex_);
  StoreLock file_lock(root_);
  repair_index_tail(root_ / "index.jsonl");
  const auto existing = list_datasets();
  char id_buf[32];
  std::snprintf(id_buf, sizeof id_buf, "ds-%06zu", existing.size() + 1);
  const std::string id = id_buf;

  std::ostringstream payload;
  write_canonical_records(payload, dataset);
  const std::string body = payload.str();

  DatasetIndexEntry entry;
  entry.dataset_id = id;
  entry.role = role;
  entry.container = dataset.container();
  entry.stored_at = stored_at.value_or(now_utc());
  entry.checksum = sha256_hex(body);
  entry.vm_ids = dataset.vm_ids();
  entry.measurement_count = dataset.size();

  write_atomically(root_ / "datasets" / (id + ".jsonl"), body);
  std::ofstream index(root_ / "index.jsonl", std::ios::app);
  index << index_line(entry).dump() << '\n';
  index.flush();
  if (!index) throw Error(Errc::StorageCorrupt, "cannot append to index.jsonl");
  return id;
}

StoredDataset FileStore::get_dataset(std::string_view dataset_id) const {
  const auto entries = list_datasets();
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const DatasetIndexEntry& e) { return e.dataset_id == dataset_id; });
  if (it == entries.end()) throw Error(Errc::NotFound, "dataset '" + std::string(dataset_id) + "' not found");

  const fs::path path = root_ / "datasets" / (it->dataset_id + ".jsonl");
  std::string body;
  try {
    body = read_file(path.string());
  } catch (const Error&) {
    throw Error(Errc::StorageCorrupt, "payload for '" + it->dataset_id + "' is missing");
  }
  if (sha256_hex(body) != it->checksum) {
    throw Error(Errc::StorageCorrupt, "checksum mismatch for dataset '" + it->dataset_id + "'");
  }
  std::istringstream in(body);
  StoredDataset out;
  try {
    out.dataset = read_canonical_records(in, it->dataset_id, it->role);
  } catch (const Error& e) {
    throw Error(Errc::StorageCorrupt, "dataset '" + it->dataset_id + "': " + e.what());
  }
  if (out.dataset.empty()) out.dataset.set_container(it->container);
  out.stored_at = it->stored_at;
  out.checksum = it->checksum;
  return out;
}

void FileStore::put_run(const RunRecord& run) {
  if (!valid_id(run.run_id)) throw Error(Errc::InvalidArgument, "bad run id '" + run.run_id + "'");
  std::lock_guard lock(write_mutex_);
  StoreLock file_lock(root_);
  write_atomically(root_ / "runs" / (run.run_id + ".json"), to_json(run).dump(2));
}

std::optional<RunRecord> FileStore::get_run(std::string_view run_id) const {
  if (!valid_id(run_id)) return std::nullopt;
  const fs::path path = root_ / "runs" / (std::string(run_id) + ".json");
  if (!fs::exists(path)) return std::nullopt;
  try {
    return run_from_json(json::parse(read_file(path.string())));
  } catch (const json::exception& e) {
    throw Error(Errc::StorageCorrupt, "run record '" + std::string(run_id) + "': " + e.what());
  }
}

std::vector<RunRecord> FileStore::list_runs() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "runs")) {
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  std::vector<RunRecord> out;
  for (const auto& id : ids) {
    if (auto run = get_run(id)) out.push_back(std::move(*run));
  }
  return out;
}

}  // namespace slicebench
