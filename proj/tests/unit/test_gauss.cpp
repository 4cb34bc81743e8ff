#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wscore/gauss.hpp"

using namespace wscore;

TEST(NormalKernels, QuantileInvertsCdf) {
  for (double p : {1e-12, 1e-6, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-9}) EXPECT_NEAR(norm_cdf(norm_quantile(p)), p, 1e-13 + 1e-12 * p);
  EXPECT_THROW(norm_quantile(0.0), DomainError);
  EXPECT_THROW(norm_quantile(1.0), DomainError);
}

TEST(NormalKernels, LinkFamilies) {
  const auto logit = Link::logit();
  EXPECT_NEAR(logit.cdf(std::log(3.0)), 0.75, 1e-15);
  EXPECT_NEAR(logit.quantile(0.75), std::log(3.0), 1e-14);
  EXPECT_NEAR(Link::probit().cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(Link::student_t(5).cdf(0.0), 0.5, 1e-15);
  for (const auto& link : {Link::probit(), Link::logit(), Link::student_t(4)}) {
    for (double z : {-3.0, -0.7, 0.0, 1.1, 2.5}) {
      EXPECT_NEAR(link.pdf(z), oracle::central_difference([&](double v) { return link.cdf(v); }, z), 1e-8);
      EXPECT_NEAR(link.pdf_derivative(z), oracle::central_difference([&](double v) { return link.pdf(v); }, z), 1e-8);
      EXPECT_NEAR(link.cdf(z) + link.cdf(-z), 1.0, 1e-14);
    }
  }
  EXPECT_THROW(Link::parse("cloglog"), InputError);
  EXPECT_EQ(Link::parse("logit"), Link::logit());
}

TEST(BivariateNormal, OrthantClosedForm) {
  for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9, 0.99, -0.999})
    EXPECT_NEAR(bvn_cdf(0, 0, rho), 0.25 + std::asin(rho) / (2 * std::numbers::pi), 1e-12) << rho;
}

TEST(BivariateNormal, IndependenceFactorizes) {
  for (double a : {-2.0, -0.3, 0.7})
    for (double b : {-1.0, 0.4, 3.0}) EXPECT_NEAR(bvn_cdf(a, b, 0.0), norm_cdf(a) * norm_cdf(b), 1e-14);
}

TEST(BivariateNormal, RectanglesMatchTwoDimensionalQuadrature) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> bound(-3.5, 3.5), corr(-0.95, 0.95);
  for (int t = 0; t < 100; ++t) {
    double a1 = bound(rng), b1 = bound(rng), a2 = bound(rng), b2 = bound(rng);
    if (a1 > b1) std::swap(a1, b1);
    if (a2 > b2) std::swap(a2, b2);
    if (t % 5 == 0) a1 = -kInf;
    if (t % 7 == 0) b2 = kInf;
    const double rho = corr(rng);
    const double expect = oracle::bvn_rect_quadrature(a1, b1, a2, b2, rho);
    EXPECT_NEAR(bvn_rect({a1, b1, a2, b2, rho}), expect, 1e-9) << a1 << " " << b1 << " " << a2 << " " << b2 << " " << rho;
  }
}

TEST(BivariateNormal, UpperTailBoxKeepsRelativeAccuracy) {
  // Box far in the joint upper tail: inclusion-exclusion on the lower cdf would cancel.
  const Rect2 r{5.0, 6.0, 5.2, kInf, 0.6};
  const double expect = oracle::bvn_rect_quadrature(5.0, 6.0, 5.2, 9.0, 0.6);
  EXPECT_GT(expect, 0.0);
  EXPECT_NEAR(bvn_rect(r) / expect, 1.0, 1e-6);
}

TEST(BivariateNormal, CorrelationDomain) {
  EXPECT_THROW(bvn_cdf(0, 0, 1.0), DomainError);
  EXPECT_THROW(bvn_cdf(0, 0, -1.2), DomainError);
  bool hit = false;
  clamp_rho(1.0 - 1e-12, &hit);
  EXPECT_TRUE(hit);
  clamp_rho(0.999, &hit);
  EXPECT_FALSE(hit);
  EXPECT_NEAR(bvn_cdf(0.3, 0.3, 1.0 - 1e-12), norm_cdf(0.3), 1e-5);
  EXPECT_THROW(bvn_rect({1.0, 0.0, 0.0, 1.0, 0.2}), DomainError);
}

TEST(BivariateNormal, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> bound(-2.5, 2.5), corr(-0.9, 0.9);
  for (int t = 0; t < 50; ++t) {
    double a1 = bound(rng), b1 = bound(rng), a2 = bound(rng), b2 = bound(rng);
    if (a1 > b1) std::swap(a1, b1);
    if (a2 > b2) std::swap(a2, b2);
    const double rho = corr(rng);
    Rect2 r{a1, b1, a2, b2, rho};
    EXPECT_NEAR(bvn_rect_drho(r),
                oracle::central_difference([&](double v) { return bvn_rect({a1, b1, a2, b2, v}); }, rho), 1e-7);
    EXPECT_NEAR(bvn_rect_dbound(r, RectBound::lower_a),
                oracle::central_difference([&](double v) { return bvn_rect({v, b1, a2, b2, rho}); }, a1), 1e-7);
    EXPECT_NEAR(bvn_rect_dbound(r, RectBound::upper_a),
                oracle::central_difference([&](double v) { return bvn_rect({a1, v, a2, b2, rho}); }, b1), 1e-7);
    EXPECT_NEAR(bvn_rect_dbound(r, RectBound::lower_b),
                oracle::central_difference([&](double v) { return bvn_rect({a1, b1, v, b2, rho}); }, a2), 1e-7);
    EXPECT_NEAR(bvn_rect_dbound(r, RectBound::upper_b),
                oracle::central_difference([&](double v) { return bvn_rect({a1, b1, a2, v, rho}); }, b2), 1e-7);
  }
  EXPECT_EQ(bvn_rect_dbound({-kInf, 1.0, 0.0, 1.0, 0.3}, RectBound::lower_a), 0.0);
}

TEST(MultivariateNormal, TrivariateOrthantExchangeable) {
  // P(X1<0, X2<0, X3<0) = 1/8 + sum_{j<k} asin(rho_jk) / (4 pi).
  for (double rho : {0.5, 0.2, -0.3, 0.8}) {
    Eigen::Matrix3d r = Eigen::Matrix3d::Constant(rho);
    r.diagonal().setOnes();
    const double expect = 0.125 + 3.0 * std::asin(rho) / (4.0 * std::numbers::pi);
    EXPECT_NEAR(mvn_cdf(Eigen::Vector3d::Zero(), r), expect, 1e-8) << rho;
  }
}

TEST(MultivariateNormal, FourDimensionalOrthant) {
  // Exchangeable rho = 1/2: P(all four below 0) = 1/5.
  Eigen::Matrix4d r = Eigen::Matrix4d::Constant(0.5);
  r.diagonal().setOnes();
  EXPECT_NEAR(mvn_cdf(Eigen::Vector4d::Zero(), r), 0.2, 1e-8);
}

TEST(MultivariateNormal, TrivariateBoxesMatchQuadrature) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> bound(-2.0, 2.0), load(-0.8, 0.8);
  for (int t = 0; t < 8; ++t) {
    Eigen::Vector3d l(load(rng), load(rng), load(rng));
    Eigen::Matrix3d r = l * l.transpose();
    r.diagonal().setOnes();
    Eigen::Vector3d lo, hi;
    for (int k = 0; k < 3; ++k) {
      double a = bound(rng), b = bound(rng);
      lo[k] = std::min(a, b);
      hi[k] = std::max(a, b);
    }
    EXPECT_NEAR(mvn_rect({lo, hi, r}), oracle::tvn_rect_quadrature(lo, hi, r), 1e-8);
  }
}

TEST(MultivariateNormal, ReducesToLowerDimension) {
  Eigen::Matrix3d r;
  r << 1, 0.4, 0.2, 0.4, 1, -0.3, 0.2, -0.3, 1;
  const Eigen::Vector3d lo(-1.0, -kInf, -0.5), hi(0.7, kInf, 1.2);
  EXPECT_NEAR(mvn_rect({lo, hi, r}), bvn_rect({-1.0, 0.7, -0.5, 1.2, 0.2}), 1e-12);
  EXPECT_THROW(mvn_rect({Eigen::VectorXd::Zero(5), Eigen::VectorXd::Ones(5), Eigen::MatrixXd::Identity(5, 5)}),
               DomainError);
  Eigen::Matrix3d bad = Eigen::Matrix3d::Constant(0.9);
  bad.diagonal().setOnes();
  bad(0, 1) = bad(1, 0) = -0.9;
  EXPECT_THROW(mvn_cdf(Eigen::Vector3d::Zero(), bad), MatrixError);
}

TEST(MultivariateNormal, LatticeCellsMatchDirectBoxes) {
  Eigen::Matrix3d r;
  r << 1, 0.5, 0.3, 0.5, 1, 0.4, 0.3, 0.4, 1;
  const std::vector<std::vector<double>> cuts{{-kInf, -0.5, 0.6, kInf}, {-kInf, 0.0, kInf}, {-kInf, -1.0, 1.0, kInf}};
  const auto cells = mvn_lattice_cells(cuts, r);
  ASSERT_EQ(cells.size(), 3u * 2u * 3u);
  double total = 0.0;
  std::size_t flat = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 3; ++c, ++flat) {
        const Eigen::Vector3d lo(cuts[0][a], cuts[1][b], cuts[2][c]), hi(cuts[0][a + 1], cuts[1][b + 1], cuts[2][c + 1]);
        EXPECT_NEAR(cells[flat], mvn_rect({lo, hi, r}), 1e-9);
        total += cells[flat];
      }
  EXPECT_NEAR(total, 1.0, 1e-10);
}
