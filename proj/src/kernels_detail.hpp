#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "sqa/corpus.hpp"

namespace sqa::kernels::detail {

struct BucketMeans {
  // (subject area entity, year) -> mean citation count
  std::map<std::pair<EntityIndex, int>, double> mean;
};

BucketMeans bucket_means(const Corpus& corpus);
std::optional<double> article_fwci(const Article& a, const BucketMeans& means);
EntityAggregate entity_aggregate(const Corpus& corpus, EntityIndex e,
                                 const std::vector<std::optional<double>>& fwci);

}  // namespace sqa::kernels::detail
