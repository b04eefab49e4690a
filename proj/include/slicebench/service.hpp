#pragma once

#include <optional>
#include <string>

#include "slicebench/model.hpp"
#include "slicebench/ranking.hpp"
#include "slicebench/store.hpp"

namespace slicebench {

struct RankRequest {
  std::string dataset_id;
  WeightVector weights;
  RankMode mode = RankMode::Lightweight;
  int historic_max_age_days = kDefaultHistoricMaxAgeDays;
  RankingOptions options;
};

/// Ranks a stored dataset. Hybrid mode pairs it with the newest eligible
/// historic dataset for the same container slice, restricted to the ranked
/// VMs. Both the CLI and the HTTP API go through here so their output matches.
/// Throws NotFound, NoEligibleHistoric, StaleHistoricData, IncompleteDataset.
RankTable rank_dataset(const DatasetStore& store, const Taxonomy& taxonomy, const RankRequest& request,
                       Timestamp now = now_utc());

}  // namespace slicebench
