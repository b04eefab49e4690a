#include "slicebench/service.hpp"

namespace slicebench {

RankTable rank_dataset(const DatasetStore& store, const Taxonomy& taxonomy, const RankRequest& request,
                       Timestamp now) {
  request.weights.validate();
  if (request.historic_max_age_days <= 0) throw Error(Errc::InvalidArgument, "max_age_days must be > 0");
  if (request.mode == RankMode::Empirical) {
    throw Error(Errc::InvalidArgument, "empirical ranks come from timings, not benchmark datasets");
  }
  const StoredDataset current = store.get_dataset(request.dataset_id);
  if (request.mode == RankMode::Lightweight) {
    return lightweight_rank(current.dataset, request.weights, taxonomy, request.options);
  }

  const auto vms = current.dataset.vm_ids();
  const StoredDataset historic =
      store.latest_historic(vms, current.dataset.container(), request.historic_max_age_days, now);
  check_staleness(historic.stored_at, now, request.historic_max_age_days);
  const BenchmarkDataset hb = historic.dataset.restricted_to(vms);
  return hybrid_rank(current.dataset, hb, request.weights, taxonomy, request.options);
}

}  // namespace slicebench
