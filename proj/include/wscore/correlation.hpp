#ifndef WSCORE_CORRELATION_HPP
#define WSCORE_CORRELATION_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wscore/error.hpp"

namespace wscore {

enum class Structure { independence, exchangeable, ar1, unstructured };

inline std::string structure_name(Structure s) {
  switch (s) {
    case Structure::independence: return "independence";
    case Structure::exchangeable: return "exchangeable";
    case Structure::ar1: return "ar1";
    case Structure::unstructured: return "unstructured";
  }
  return "unknown";
}

inline Structure parse_structure(const std::string& name) {
  if (name == "independence" || name == "ind" || name == "indep") return Structure::independence;
  if (name == "exchangeable" || name == "exch") return Structure::exchangeable;
  if (name == "ar1" || name == "AR1" || name == "ar(1)") return Structure::ar1;
  if (name == "unstructured" || name == "unstr") return Structure::unstructured;
  throw InputError("unknown correlation structure '" + name + "'");
}

/// Number of pairs j < k among d coordinates.
inline int num_pairs(int d) { return d * (d - 1) / 2; }

/// Position of pair (j, k), 1 <= j < k <= d, in the order (1,2), (1,3), ..., (1,d), (2,3), ...
inline int pair_index(int j, int k, int d) {
  if (j > k) std::swap(j, k);
  if (j < 1 || k > d || j == k) throw DomainError("invalid pair index");
  return (j - 1) * d - (j - 1) * j / 2 + (k - j) - 1;
}

/// Latent correlation matrix R(theta) of the discretized normal working model.
class CorrelationModel {
 public:
  CorrelationModel() = default;
  CorrelationModel(Structure structure, int d, Eigen::VectorXd theta) : structure_(structure), d_(d), theta_(std::move(theta)) {
    if (d < 1) throw DomainError("correlation dimension must be positive");
    if (theta_.size() != free_parameters(structure, d))
      throw DomainError("structure " + structure_name(structure) + " with d=" + std::to_string(d) + " needs " +
                        std::to_string(free_parameters(structure, d)) + " parameters");
    for (Eigen::Index i = 0; i < theta_.size(); ++i)
      if (!(std::abs(theta_[i]) < 1.0)) throw DomainError("correlation parameter outside (-1, 1)");
    if (structure == Structure::exchangeable && d > 1 && !(theta_[0] > -1.0 / (d - 1)))
      throw DomainError("exchangeable correlation must exceed -1/(d-1)");
  }

  static CorrelationModel identity(int d) { return {Structure::independence, d, Eigen::VectorXd()}; }
  static CorrelationModel exchangeable(int d, double rho) {
    return {Structure::exchangeable, d, Eigen::VectorXd::Constant(1, rho)};
  }
  static CorrelationModel ar1(int d, double rho) { return {Structure::ar1, d, Eigen::VectorXd::Constant(1, rho)}; }
  static CorrelationModel unstructured(const Eigen::MatrixXd& r) {
    const int d = static_cast<int>(r.rows());
    Eigen::VectorXd theta(num_pairs(d));
    for (int j = 1; j <= d; ++j)
      for (int k = j + 1; k <= d; ++k) theta[pair_index(j, k, d)] = r(j - 1, k - 1);
    return {Structure::unstructured, d, theta};
  }

  static int free_parameters(Structure s, int d) {
    switch (s) {
      case Structure::independence: return 0;
      case Structure::exchangeable:
      case Structure::ar1: return 1;
      case Structure::unstructured: return num_pairs(d);
    }
    return 0;
  }

  Structure structure() const noexcept { return structure_; }
  int dimension() const noexcept { return d_; }
  const Eigen::VectorXd& theta() const noexcept { return theta_; }
  int num_free() const noexcept { return static_cast<int>(theta_.size()); }

  /// rho_jk for 1-based indices.
  double rho(int j, int k) const {
    if (j == k) return 1.0;
    switch (structure_) {
      case Structure::independence: return 0.0;
      case Structure::exchangeable: return theta_[0];
      case Structure::ar1: return std::pow(theta_[0], std::abs(j - k));
      case Structure::unstructured: return theta_[pair_index(j, k, d_)];
    }
    return 0.0;
  }

  /// d rho_jk / d theta.
  Eigen::VectorXd rho_gradient(int j, int k) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(num_free());
    if (j == k) return g;
    switch (structure_) {
      case Structure::independence: break;
      case Structure::exchangeable: g[0] = 1.0; break;
      case Structure::ar1: {
        const int lag = std::abs(j - k);
        g[0] = lag * std::pow(theta_[0], lag - 1);
        break;
      }
      case Structure::unstructured: g[pair_index(j, k, d_)] = 1.0; break;
    }
    return g;
  }

  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd r(d_, d_);
    for (int j = 1; j <= d_; ++j)
      for (int k = 1; k <= d_; ++k) r(j - 1, k - 1) = rho(j, k);
    return r;
  }

  /// Correlation of the coordinates listed in `index` (1-based).
  Eigen::MatrixXd submatrix(const std::vector<int>& index) const {
    const auto m = static_cast<Eigen::Index>(index.size());
    Eigen::MatrixXd r(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) r(a, b) = rho(index[a], index[b]);
    return r;
  }

  bool positive_definite() const {
    Eigen::LLT<Eigen::MatrixXd> llt(matrix());
    return llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 1e-8;
  }

 private:
  Structure structure_ = Structure::independence;
  int d_ = 1;
  Eigen::VectorXd theta_;
};

/// Eigenvalue clipping at `floor` followed by rescaling to a unit diagonal.
inline Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& r, double floor = 1e-6) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (r + r.transpose()));
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::VectorXd scale = out.diagonal().cwiseSqrt().cwiseInverse();
  out = scale.asDiagonal() * out * scale.asDiagonal();
  out.diagonal().setOnes();
  return out;
}

}  // namespace wscore

#endif  // WSCORE_CORRELATION_HPP
