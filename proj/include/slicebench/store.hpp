#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slicebench/model.hpp"

namespace slicebench {

struct StoredDataset {
  BenchmarkDataset dataset;
  Timestamp stored_at{};
  std::string checksum;  // sha256 of the payload, hex

  DatasetRole role() const { return dataset.role(); }
};

struct DatasetIndexEntry {
  std::string dataset_id;
  DatasetRole role = DatasetRole::Current;
  ContainerSpec container;
  Timestamp stored_at{};
  std::string checksum;
  std::vector<std::string> vm_ids;
  std::size_t measurement_count = 0;
};

inline constexpr int kDefaultHistoricMaxAgeDays = 30;

/// Append-only dataset repository plus run-record storage.
class DatasetStore {
 public:
  virtual ~DatasetStore() = default;

  /// Stores a copy of `dataset` under a fresh id and returns the id. The
  /// dataset's own id, if any, is replaced.
  virtual std::string put_dataset(const BenchmarkDataset& dataset, DatasetRole role,
                                  std::optional<Timestamp> stored_at = std::nullopt) = 0;
  /// Throws NotFound or StorageCorrupt.
  virtual StoredDataset get_dataset(std::string_view dataset_id) const = 0;
  /// Ordered by storage order.
  virtual std::vector<DatasetIndexEntry> list_datasets() const = 0;

  /// Run records are keyed by run id; later writes replace earlier ones.
  virtual void put_run(const RunRecord& run) = 0;
  virtual std::optional<RunRecord> get_run(std::string_view run_id) const = 0;
  virtual std::vector<RunRecord> list_runs() const = 0;

  /// Newest historic dataset covering every VM in `vm_set` with the same
  /// container slice and age <= max_age_days at `now`. Ties on stored_at go to
  /// the larger dataset id. Throws NoEligibleHistoric.
  StoredDataset latest_historic(std::span<const std::string> vm_set, const ContainerSpec& container,
                                int max_age_days, Timestamp now) const;
};

/// Directory layout:
///   index.jsonl            one line per dataset: {dataset_id, role, container,
///                          stored_at, checksum, vm_ids, measurements}
///   datasets/<id>.jsonl    canonical measurement records
///   runs/<run_id>.json     run records
///
/// A payload is written and renamed into place before its index line is
/// appended, so readers only see committed datasets.
class FileStore final : public DatasetStore {
 public:
  explicit FileStore(std::filesystem::path root);

  std::string put_dataset(const BenchmarkDataset& dataset, DatasetRole role,
                          std::optional<Timestamp> stored_at = std::nullopt) override;
  StoredDataset get_dataset(std::string_view dataset_id) const override;
  std::vector<DatasetIndexEntry> list_datasets() const override;

  void put_run(const RunRecord& run) override;
  std::optional<RunRecord> get_run(std::string_view run_id) const override;
  std::vector<RunRecord> list_runs() const override;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  mutable std::mutex write_mutex_;
};

std::string sha256_hex(std::string_view data);

}  // namespace slicebench
