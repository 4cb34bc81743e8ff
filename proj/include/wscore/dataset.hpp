#ifndef WSCORE_DATASET_HPP
#define WSCORE_DATASET_HPP

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wscore/error.hpp"

namespace wscore {

/// Observed measurements of one cluster, sorted by within-cluster index.
struct Cluster {
  std::string id;
  std::vector<int> index;  ///< within-cluster position, 1-based, strictly increasing
  std::vector<int> y;      ///< category 1..K
  Eigen::MatrixXd x;       ///< one covariate row per measurement

  int size() const noexcept { return static_cast<int>(y.size()); }
};

/// Clustered ordinal observations; cluster sizes may differ.
struct OrdinalDataset {
  std::vector<std::string> covariate_names;
  int categories = 0;  ///< K
  std::vector<Cluster> clusters;

  int num_clusters() const noexcept { return static_cast<int>(clusters.size()); }
  int num_covariates() const noexcept { return static_cast<int>(covariate_names.size()); }
  int num_cutpoints() const noexcept { return categories - 1; }

  std::size_t num_observations() const {
    std::size_t total = 0;
    for (const auto& c : clusters) total += c.y.size();
    return total;
  }

  /// Largest within-cluster index; the dimension of the latent correlation matrix.
  int dimension() const {
    int d = 0;
    for (const auto& c : clusters)
      if (!c.index.empty()) d = std::max(d, c.index.back());
    return d;
  }

  void validate() const {
    if (categories < 2) throw InputError("an ordinal response needs at least two categories");
    const auto p = static_cast<Eigen::Index>(covariate_names.size());
    for (const auto& c : clusters) {
      if (c.index.size() != c.y.size() || c.x.rows() != static_cast<Eigen::Index>(c.y.size()) || c.x.cols() != p)
        throw InputError("cluster '" + c.id + "' has inconsistent shapes");
      for (std::size_t t = 0; t < c.y.size(); ++t) {
        if (c.y[t] < 1 || c.y[t] > categories)
          throw InputError("cluster '" + c.id + "': response outside 1.." + std::to_string(categories));
        if (c.index[t] < 1 || (t > 0 && c.index[t] <= c.index[t - 1]))
          throw InputError("cluster '" + c.id + "': within-cluster indices must be unique and increasing");
      }
      if (!c.x.allFinite()) throw InputError("cluster '" + c.id + "' has a missing or non-finite covariate");
    }
  }
};

/// Keeps only the named covariate columns, in the given order.
inline OrdinalDataset select_covariates(const OrdinalDataset& data, const std::vector<std::string>& names) {
  std::vector<Eigen::Index> cols;
  for (const auto& name : names) {
    auto it = std::find(data.covariate_names.begin(), data.covariate_names.end(), name);
    if (it == data.covariate_names.end()) throw InputError("unknown covariate '" + name + "'");
    cols.push_back(it - data.covariate_names.begin());
  }
  OrdinalDataset out;
  out.covariate_names = names;
  out.categories = data.categories;
  out.clusters.reserve(data.clusters.size());
  for (const auto& c : data.clusters) {
    Cluster nc{c.id, c.index, c.y, Eigen::MatrixXd(c.x.rows(), static_cast<Eigen::Index>(cols.size()))};
    for (std::size_t k = 0; k < cols.size(); ++k) nc.x.col(static_cast<Eigen::Index>(k)) = c.x.col(cols[k]);
    out.clusters.push_back(std::move(nc));
  }
  return out;
}

}  // namespace wscore

#endif  // WSCORE_DATASET_HPP
