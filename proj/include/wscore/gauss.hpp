#ifndef WSCORE_GAUSS_HPP
#define WSCORE_GAUSS_HPP

// Distribution kernels: univariate cdf/pdf/quantile for the link families,
// bivariate normal rectangle probabilities with derivatives, and normal
// rectangle probabilities in three and four dimensions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "wscore/error.hpp"

namespace wscore {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Largest |rho| handed to the bivariate kernels; larger values are clamped.
inline constexpr double kRhoLimit = 1.0 - 1e-10;

inline double norm_pdf(double z) {
  if (std::isinf(z)) return 0.0;
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(z) without cancellation.
inline double norm_ccdf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile: p must lie in (0,1), got " + std::to_string(p));
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// A standardized, symmetric univariate distribution used either as the
/// ordinal link (normal = probit, logistic = logit) or as a copula margin.
class Link {
 public:
  enum class Kind { normal, logistic, student_t };

  static Link probit() { return Link(Kind::normal, 0.0); }
  static Link logit() { return Link(Kind::logistic, 0.0); }
  static Link student_t(double df) {
    if (!(df > 0.0)) throw DomainError("student t: degrees of freedom must be positive");
    return Link(Kind::student_t, df);
  }

  /// Accepts "probit"/"normal", "logit"/"logistic".
  static Link parse(const std::string& name) {
    if (name == "probit" || name == "normal") return probit();
    if (name == "logit" || name == "logistic") return logit();
    throw InputError("unknown link '" + name + "' (expected probit or logit)");
  }

  Kind kind() const noexcept { return kind_; }
  double df() const noexcept { return df_; }

  std::string name() const {
    switch (kind_) {
      case Kind::normal: return "probit";
      case Kind::logistic: return "logit";
      case Kind::student_t: return "t(" + std::to_string(df_) + ")";
    }
    return {};
  }

  double cdf(double z) const {
    if (std::isnan(z)) throw DomainError("cdf of NaN");
    if (z == kInf) return 1.0;
    if (z == -kInf) return 0.0;
    switch (kind_) {
      case Kind::normal: return norm_cdf(z);
      case Kind::logistic:
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        else {
          const double e = std::exp(z);
          return e / (1.0 + e);
        }
      case Kind::student_t: return boost::math::cdf(boost::math::students_t_distribution<double>(df_), z);
    }
    return 0.0;
  }

  /// 1 - cdf(z); all three families are symmetric about zero.
  double ccdf(double z) const { return cdf(-z); }

  double pdf(double z) const {
    if (std::isinf(z)) return 0.0;
    switch (kind_) {
      case Kind::normal: return norm_pdf(z);
      case Kind::logistic: {
        const double e = std::exp(-std::abs(z));
        return e / ((1.0 + e) * (1.0 + e));
      }
      case Kind::student_t: return boost::math::pdf(boost::math::students_t_distribution<double>(df_), z);
    }
    return 0.0;
  }

  /// d pdf / dz.
  double pdf_derivative(double z) const {
    if (std::isinf(z)) return 0.0;
    switch (kind_) {
      case Kind::normal: return -z * norm_pdf(z);
      case Kind::logistic: return pdf(z) * (1.0 - 2.0 * cdf(z));
      case Kind::student_t: return -pdf(z) * (df_ + 1.0) * z / (df_ + z * z);
    }
    return 0.0;
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1), got " + std::to_string(p));
    switch (kind_) {
      case Kind::normal: return norm_quantile(p);
      case Kind::logistic: return std::log(p) - std::log1p(-p);
      case Kind::student_t: return boost::math::quantile(boost::math::students_t_distribution<double>(df_), p);
    }
    return 0.0;
  }

  friend bool operator==(const Link&, const Link&) = default;

 private:
  Link(Kind kind, double df) : kind_(kind), df_(df) {}
  Kind kind_;
  double df_;
};

inline double std_cdf(const Link& link, double z) { return link.cdf(z); }
inline double std_pdf(const Link& link, double z) { return link.pdf(z); }
inline double std_quantile(const Link& link, double p) { return link.quantile(p); }

/// Validates rho for the bivariate kernels. |rho| >= 1 or NaN is a domain
/// error; values within 1e-10 of +-1 are pulled back to +-kRhoLimit and
/// reported through `clamped`.
inline double clamp_rho(double rho, bool* clamped = nullptr) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("correlation must satisfy |rho| < 1, got " + std::to_string(rho));
  const bool hit = std::abs(rho) > kRhoLimit;
  if (clamped) *clamped = hit;
  return hit ? std::copysign(kRhoLimit, rho) : rho;
}

namespace detail {

// P(X > h, Y > k) for finite h, k. Drezner & Wesolowsky's method with
// Genz's refinements; Gauss-Legendre order grows with |r|.
inline double bvn_upper(double h, double k, double r) {
  using boost::math::quadrature::gauss;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  auto legendre = [&](auto&& body) {
    const double ar = std::abs(r);
    if (ar < 0.3) {
      const auto& x = gauss<double, 6>::abscissa();
      const auto& w = gauss<double, 6>::weights();
      for (std::size_t i = 0; i < x.size(); ++i) body(x[i], w[i]);
    } else if (ar < 0.75) {
      const auto& x = gauss<double, 12>::abscissa();
      const auto& w = gauss<double, 12>::weights();
      for (std::size_t i = 0; i < x.size(); ++i) body(x[i], w[i]);
    } else {
      const auto& x = gauss<double, 20>::abscissa();
      const auto& w = gauss<double, 20>::weights();
      for (std::size_t i = 0; i < x.size(); ++i) body(x[i], w[i]);
    }
  };

  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    legendre([&](double x, double w) {
      for (double sign : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sign * x) / 2.0);
        bvn += w * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    });
    bvn = bvn * asr / (4.0 * std::numbers::pi);
    bvn += norm_ccdf(h) * norm_ccdf(k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (std::abs(r) < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      if (hk > -100.0) {
        const double b = std::sqrt(bs);
        const double sp = std::sqrt(two_pi) * norm_cdf(-b / a);
        bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      legendre([&](double x, double w) {
        for (double sign : {-1.0, 1.0}) {
          const double xs = (a * (sign * x + 1.0)) * (a * (sign * x + 1.0));
          const double rs = std::sqrt(1.0 - xs);
          const double asr2 = -(bs / xs + hk) / 2.0;
          if (asr2 > -100.0) {
            const double sp = 1.0 + c * xs * (1.0 + d * xs);
            const double ep = std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs;
            bvn += a * w * std::exp(asr2) * (ep - sp);
          }
        }
      });
      bvn = -bvn / two_pi;
    }
    if (r > 0.0) {
      bvn += norm_ccdf(std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += norm_cdf(k) - norm_cdf(h);
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

}  // namespace detail

/// Standard bivariate normal cdf P(X <= a, Y <= b) with correlation rho.
inline double bvn_cdf(double a, double b, double rho) {
  if (std::isnan(a) || std::isnan(b)) throw DomainError("bvn_cdf: NaN bound");
  rho = clamp_rho(rho);
  if (a == -kInf || b == -kInf) return 0.0;
  if (a == kInf) return norm_cdf(b);
  if (b == kInf) return norm_cdf(a);
  return detail::bvn_upper(-a, -b, rho);
}

/// Standard bivariate normal density.
inline double bvn_pdf(double x, double y, double rho) {
  if (std::isinf(x) || std::isinf(y)) return 0.0;
  const double om = (1.0 - rho) * (1.0 + rho);
  return std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * om)) / (2.0 * std::numbers::pi * std::sqrt(om));
}

/// Axis-aligned rectangle under a standard bivariate normal.
struct Rect2 {
  double lower_a = -kInf;
  double upper_a = kInf;
  double lower_b = -kInf;
  double upper_b = kInf;
  double rho = 0.0;
};

enum class RectBound { lower_a, upper_a, lower_b, upper_b };

namespace detail {

inline void check_rect(const Rect2& r) {
  if (std::isnan(r.lower_a) || std::isnan(r.upper_a) || std::isnan(r.lower_b) || std::isnan(r.upper_b))
    throw DomainError("rectangle with NaN bound");
  if (r.lower_a > r.upper_a || r.lower_b > r.upper_b) throw DomainError("rectangle with lower bound above upper bound");
}

// Reflect a coordinate so the interval leans into the lower tail; keeps the
// inclusion-exclusion differences small when the box sits in an upper tail.
inline bool leans_upper(double lo, double hi) {
  if (lo == -kInf) return false;
  if (hi == kInf) return true;
  return lo + hi > 0.0;
}

}  // namespace detail

/// P(lower_a < X < upper_a, lower_b < Y < upper_b).
inline double bvn_rect(const Rect2& r) {
  detail::check_rect(r);
  double la = r.lower_a, ua = r.upper_a, lb = r.lower_b, ub = r.upper_b;
  double rho = clamp_rho(r.rho);
  if (la == ua || lb == ub) return 0.0;
  if (detail::leans_upper(la, ua)) {
    std::swap(la, ua);
    la = -la;
    ua = -ua;
    rho = -rho;
  }
  if (detail::leans_upper(lb, ub)) {
    std::swap(lb, ub);
    lb = -lb;
    ub = -ub;
    rho = -rho;
  }
  const double p = bvn_cdf(ua, ub, rho) - bvn_cdf(la, ub, rho) - bvn_cdf(ua, lb, rho) + bvn_cdf(la, lb, rho);
  return std::clamp(p, 0.0, 1.0);
}

/// d bvn_rect / d rho, i.e. inclusion-exclusion of the density at the corners.
inline double bvn_rect_drho(const Rect2& r) {
  detail::check_rect(r);
  const double rho = clamp_rho(r.rho);
  return bvn_pdf(r.upper_a, r.upper_b, rho) - bvn_pdf(r.lower_a, r.upper_b, rho) - bvn_pdf(r.upper_a, r.lower_b, rho) +
         bvn_pdf(r.lower_a, r.lower_b, rho);
}

/// d bvn_rect / d (selected bound). Zero when the selected bound is infinite.
inline double bvn_rect_dbound(const Rect2& r, RectBound which) {
  detail::check_rect(r);
  const double rho = clamp_rho(r.rho);
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  auto slice = [&](double at, double lo, double hi) {
    if (std::isinf(at)) return 0.0;
    return norm_pdf(at) * (norm_cdf((hi - rho * at) / s) - norm_cdf((lo - rho * at) / s));
  };
  switch (which) {
    case RectBound::upper_a: return slice(r.upper_a, r.lower_b, r.upper_b);
    case RectBound::lower_a: return -slice(r.lower_a, r.lower_b, r.upper_b);
    case RectBound::upper_b: return slice(r.upper_b, r.lower_a, r.upper_a);
    case RectBound::lower_b: return -slice(r.lower_b, r.lower_a, r.upper_a);
  }
  return 0.0;
}

/// Box under a standard normal of dimension 1..4 with correlation `corr`.
struct RectD {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::MatrixXd corr;
};

struct MvnOptions {
  /// Target absolute accuracy of a box probability.
  double tolerance = 1e-6;
};

namespace detail {

inline double kronrod_tolerance(const MvnOptions& opt) { return std::clamp(opt.tolerance * 1e-4, 1e-13, 1e-5); }

// Box probability by conditioning on the coordinate with the least mass and
// integrating the conditional (d-1)-dimensional box probability.
inline double rect_prob(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr,
                        const MvnOptions& opt) {
  const Eigen::Index d0 = lower.size();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < d0; ++i) {
    if (lower[i] >= upper[i]) return 0.0;
    if (!(lower[i] == -kInf && upper[i] == kInf)) keep.push_back(i);
  }
  const auto d = static_cast<Eigen::Index>(keep.size());
  if (d == 0) return 1.0;
  if (d == 1) {
    const double lo = lower[keep[0]], hi = upper[keep[0]];
    return hi <= 0.0 ? norm_cdf(hi) - norm_cdf(lo) : norm_ccdf(lo) - norm_ccdf(hi);
  }
  if (d == 2) {
    const auto i = keep[0], j = keep[1];
    return bvn_rect({lower[i], upper[i], lower[j], upper[j], corr(i, j)});
  }

  Eigen::Index pivot = 0;
  double least = 2.0;
  for (Eigen::Index t = 0; t < d; ++t) {
    const double lo = lower[keep[t]], hi = upper[keep[t]];
    const double mass = norm_cdf(hi) - norm_cdf(lo);
    if (mass < least) {
      least = mass;
      pivot = t;
    }
  }
  const auto c = keep[pivot];
  std::vector<Eigen::Index> rest;
  for (Eigen::Index t = 0; t < d; ++t)
    if (t != pivot) rest.push_back(keep[t]);
  const auto m = static_cast<Eigen::Index>(rest.size());

  Eigen::VectorXd load(m), scale(m);
  Eigen::MatrixXd cond(m, m);
  for (Eigen::Index a = 0; a < m; ++a) load[a] = corr(rest[a], c);
  for (Eigen::Index a = 0; a < m; ++a) {
    const double v = 1.0 - load[a] * load[a];
    if (!(v > 0.0)) throw MatrixError("correlation matrix is not positive definite");
    scale[a] = std::sqrt(v);
  }
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      cond(a, b) = a == b ? 1.0 : (corr(rest[a], rest[b]) - load[a] * load[b]) / (scale[a] * scale[b]);

  Eigen::VectorXd lo(m), hi(m);
  auto integrand = [&](double x) {
    for (Eigen::Index a = 0; a < m; ++a) {
      lo[a] = (lower[rest[a]] - load[a] * x) / scale[a];
      hi[a] = (upper[rest[a]] - load[a] * x) / scale[a];
    }
    return norm_pdf(x) * rect_prob(lo, hi, cond, opt);
  };
  // |x| > 9 carries mass below 1e-18.
  const double a = std::max(lower[c], -9.0);
  const double b = std::min(upper[c], 9.0);
  if (a >= b) return 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, a, b, 12, kronrod_tolerance(opt));
  return std::clamp(value, 0.0, 1.0);
}

inline void check_corr(const Eigen::MatrixXd& corr, Eigen::Index dim) {
  if (corr.rows() != dim || corr.cols() != dim) throw DomainError("correlation matrix has the wrong shape");
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (std::abs(corr(i, i) - 1.0) > 1e-12) throw MatrixError("correlation matrix needs a unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(corr(i, j) - corr(j, i)) > 1e-12) throw MatrixError("correlation matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) throw MatrixError("correlation matrix is not positive definite");
}

}  // namespace detail

/// Normal box probability for dimension up to 4.
inline double mvn_rect(const RectD& r, const MvnOptions& opt = {}) {
  const Eigen::Index d = r.lower.size();
  if (d < 1 || d > 4 || r.upper.size() != d) throw DomainError("mvn_rect supports dimensions 1 to 4");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::isnan(r.lower[i]) || std::isnan(r.upper[i])) throw DomainError("mvn_rect: NaN bound");
    if (r.lower[i] > r.upper[i]) throw DomainError("mvn_rect: lower bound above upper bound");
  }
  detail::check_corr(r.corr, d);
  return detail::rect_prob(r.lower, r.upper, r.corr, opt);
}

/// Normal cdf P(X <= upper) for dimension up to 4.
inline double mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr, const MvnOptions& opt = {}) {
  return mvn_rect({Eigen::VectorXd::Constant(upper.size(), -kInf), upper, corr}, opt);
}

/// Joint cell probabilities of a discretized normal vector. `cuts[k]` holds
/// the increasing cut levels of coordinate k (usually starting at -inf and
/// ending at +inf); cell (i_1..i_d) is the box between consecutive levels.
/// The cdf is evaluated once per lattice node and differenced along each
/// axis. Result is row-major with the last coordinate fastest.
inline std::vector<double> mvn_lattice_cells(const std::vector<std::vector<double>>& cuts, const Eigen::MatrixXd& corr,
                                             const MvnOptions& opt = {}) {
  const auto d = static_cast<Eigen::Index>(cuts.size());
  if (d < 1 || d > 4) throw DomainError("lattice dimension must be 1 to 4");
  detail::check_corr(corr, d);
  std::vector<std::size_t> extent(d);
  std::size_t nodes = 1;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (cuts[k].size() < 2) throw DomainError("each lattice axis needs at least two levels");
    for (std::size_t t = 1; t < cuts[k].size(); ++t)
      if (!(cuts[k][t] >= cuts[k][t - 1])) throw DomainError("lattice levels must be nondecreasing");
    extent[k] = cuts[k].size();
    nodes *= extent[k];
  }

  std::vector<double> cdf(nodes);
  std::vector<std::size_t> idx(d, 0);
  Eigen::VectorXd upper(d);
  for (std::size_t flat = 0; flat < nodes; ++flat) {
    std::size_t rem = flat;
    for (Eigen::Index k = d - 1; k >= 0; --k) {
      idx[k] = rem % extent[k];
      rem /= extent[k];
    }
    bool zero = false;
    for (Eigen::Index k = 0; k < d; ++k) {
      upper[k] = cuts[k][idx[k]];
      if (upper[k] == -kInf) zero = true;
    }
    if (zero) {
      cdf[flat] = 0.0;
      continue;
    }
    if (d == 2) {
      cdf[flat] = bvn_cdf(upper[0], upper[1], corr(0, 1));
    } else {
      cdf[flat] = detail::rect_prob(Eigen::VectorXd::Constant(d, -kInf), upper, corr, opt);
    }
  }

  // Difference along each axis, highest index first.
  std::size_t stride = 1;
  for (Eigen::Index k = d - 1; k >= 0; --k) {
    for (std::size_t flat = nodes; flat-- > 0;) {
      const std::size_t pos = (flat / stride) % extent[k];
      if (pos > 0) cdf[flat] -= cdf[flat - stride];
    }
    stride *= extent[k];
  }

  std::size_t cells = 1;
  for (Eigen::Index k = 0; k < d; ++k) cells *= extent[k] - 1;
  std::vector<double> out(cells);
  std::vector<std::size_t> cidx(d);
  for (std::size_t flat = 0; flat < cells; ++flat) {
    std::size_t rem = flat;
    for (Eigen::Index k = d - 1; k >= 0; --k) {
      cidx[k] = rem % (extent[k] - 1);
      rem /= extent[k] - 1;
    }
    std::size_t node = 0;
    for (Eigen::Index k = 0; k < d; ++k) node = node * extent[k] + cidx[k] + 1;
    out[flat] = std::max(0.0, cdf[node]);
  }
  return out;
}

}  // namespace wscore

#endif  // WSCORE_GAUSS_HPP
