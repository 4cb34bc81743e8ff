#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "enumeration.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "wscore/weighted_scores.hpp"

using namespace wscore;

namespace {

Eigen::MatrixXd exch_matrix(int d, double rho) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(d, d, rho);
  r.diagonal().setOnes();
  return r;
}

OrdinalDataset sample(std::uint64_t seed, int n, int d, int K, int p, const Link& link, const Eigen::MatrixXd& R,
                      UnivariateParams* truth = nullptr) {
  gen::Rng rng(seed);
  const auto a = gen::params(rng, p, K - 1);
  if (truth) *truth = a;
  return gen::dataset(rng, n, d, K, a, link, R);
}

}  // namespace

TEST(WorkingWeights, OmegaMatchesJointCellEnumeration) {
  gen::Rng rng(31);
  for (int t = 0; t < 5; ++t) {
    const auto a = gen::params(rng, 2, 2);
    const auto link = gen::link(rng);
    const Eigen::MatrixXd R = gen::correlation(rng, 3);
    Cluster c{"c", {1, 2, 3}, {1, 2, 3}, Eigen::MatrixXd(3, 2)};
    for (int j = 0; j < 3; ++j) c.x.row(j) << gen::uniform(rng, -1, 1), gen::uniform(rng, -1, 1);
    const auto corr = CorrelationModel::unstructured(R);
    const Eigen::MatrixXd omega = score_covariance(c, a, link, corr);
    EXPECT_LT((omega - oracle::enumerated_omega(c, a, link, R)).cwiseAbs().maxCoeff(), 1e-6);
    const auto w = cluster_weights(c, a, link, corr);
    EXPECT_LT((w.omega.block(0, 0, 2, 2) - w.delta.block(0, 0, 2, 2)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_FALSE(w.ridged);
  }
}

TEST(WorkingWeights, BinaryPairCovarianceByFourCells) {
  const UnivariateParams a{Eigen::VectorXd(), Eigen::VectorXd::Constant(1, 0.3)};
  Cluster c{"c", {1, 2}, {1, 2}, Eigen::MatrixXd(2, 0)};
  const double rho = 0.45;
  const auto omega = score_covariance(c, a, Link::probit(), CorrelationModel::exchangeable(2, rho));
  double cov = 0.0;
  for (int y1 = 1; y1 <= 2; ++y1)
    for (int y2 = 1; y2 <= 2; ++y2) {
      const double lo1 = y1 == 1 ? -9.0 : 0.3, hi1 = y1 == 1 ? 0.3 : 9.0;
      const double lo2 = y2 == 1 ? -9.0 : 0.3, hi2 = y2 == 1 ? 0.3 : 9.0;
      cov += oracle::bvn_rect_quadrature(lo1, hi1, lo2, hi2, rho) *
             oracle::numeric_score(Link::probit(), a.gamma, y1)[0] * oracle::numeric_score(Link::probit(), a.gamma, y2)[0];
    }
  EXPECT_NEAR(omega(0, 1), cov, 1e-7);
}

TEST(WorkingWeights, IdentityCorrelationGivesIdentityTransform) {
  gen::Rng rng(32);
  const auto a = gen::params(rng, 1, 3);
  Cluster c{"c", {1, 3}, {2, 4}, Eigen::MatrixXd(2, 1)};
  c.x << 0.2, -0.4;
  const auto w = cluster_weights(c, a, Link::logit(), CorrelationModel::identity(3));
  EXPECT_LT((w.omega - w.delta).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((w.winv - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightedScores, IndependenceReducesToMarginalMle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto link = seed % 2 ? Link::logit() : Link::probit();
    const auto data = sample(100 + seed, 150, 3, 4, 2, link, exch_matrix(3, 0.4));
    const auto mle = fit_independent(data, link);
    const auto fit = solve_weighted_scores(data, link, Structure::independence);
    EXPECT_LT((fit.params.stacked() - mle.params.stacked()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(WeightedScores, ResidualVanishesAtSolution) {
  const auto data = sample(41, 200, 4, 4, 2, Link::probit(), exch_matrix(4, 0.5));
  const auto fit = solve_weighted_scores(data, Link::probit(), Structure::exchangeable);
  const auto w = build_weights(data, fit.stage1, fit.correlation.model, Link::probit());
  const auto t = detail::weighted_terms(data, fit.params, Link::probit(), w, false);
  EXPECT_LE(t.g.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(fit.estimates.front().name, "alpha1");
  EXPECT_EQ(fit.estimates.back().name, "v2");
}

TEST(WeightedScores, RecoversTruthOnLargeSample) {
  UnivariateParams truth;
  const auto data = sample(42, 3000, 3, 4, 2, Link::probit(), exch_matrix(3, 0.6), &truth);
  const auto fit = solve_weighted_scores(data, Link::probit(), Structure::exchangeable);
  const auto est = fit.params.stacked(), ref = truth.stacked();
  for (Eigen::Index k = 0; k < est.size(); ++k) {
    const double se = std::sqrt(fit.covariance.V(k, k));
    EXPECT_LT(std::abs(est[k] - ref[k]), 4.0 * se) << k;
  }
}

TEST(WeightedScores, ScalingCovariateRescalesItsCoefficient) {
  const auto data = sample(43, 250, 3, 3, 2, Link::logit(), exch_matrix(3, 0.3));
  auto scaled = data;
  const double c = -2.5;
  for (auto& cl : scaled.clusters) cl.x.col(1) *= c;
  const auto a = solve_weighted_scores(data, Link::logit(), Structure::ar1);
  const auto b = solve_weighted_scores(scaled, Link::logit(), Structure::ar1);
  for (std::size_t k = 0; k < a.estimates.size(); ++k) {
    const bool target = a.estimates[k].name == "v2";
    EXPECT_NEAR(b.estimates[k].est, target ? a.estimates[k].est / c : a.estimates[k].est, 1e-7);
    EXPECT_NEAR(b.estimates[k].se, target ? a.estimates[k].se / std::abs(c) : a.estimates[k].se, 1e-7);
    EXPECT_NEAR(std::abs(b.estimates[k].z), std::abs(a.estimates[k].z), 1e-6);
    EXPECT_NEAR(b.estimates[k].p, a.estimates[k].p, 1e-7);
  }
}

TEST(WeightedScores, SandwichIsSymmetricPositiveSemidefinite) {
  const auto data = sample(44, 180, 3, 5, 3, Link::probit(), exch_matrix(3, 0.5));
  for (auto s : {Structure::exchangeable, Structure::ar1, Structure::unstructured}) {
    const auto fit = solve_weighted_scores(data, Link::probit(), s);
    const auto& V = fit.covariance.V;
    EXPECT_LT((V - V.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
    for (const auto& e : fit.estimates) EXPECT_GT(e.se, 0.0);
  }
}

TEST(WeightedScores, RaggedClustersUseObservedSubmatrix) {
  gen::Rng rng(45);
  const auto a = gen::params(rng, 2, 3);
  const auto data = gen::dataset(rng, 300, 4, 4, a, Link::logit(), exch_matrix(4, 0.4), true);
  const auto fit = solve_weighted_scores(data, Link::logit(), Structure::exchangeable);
  EXPECT_LE(fit.info.max_score, 1e-6);
  EXPECT_NEAR(fit.correlation.model.theta()[0], 0.4, 0.1);
}

TEST(WeightedScores, RobustMatchesModelBasedUnderIndependence) {
  const auto data = sample(46, 4000, 3, 3, 2, Link::probit(), Eigen::MatrixXd::Identity(3, 3));
  const auto fit = solve_weighted_scores(data, Link::probit(), Structure::independence);
  const Eigen::MatrixXd model_based = fit.covariance.H.inverse();
  for (Eigen::Index k = 0; k < model_based.rows(); ++k)
    EXPECT_NEAR(std::sqrt(fit.covariance.V(k, k)) / std::sqrt(model_based(k, k)), 1.0, 0.08) << k;
}

TEST(WaldTest, Basics) {
  auto [z, p] = wald_test(0.0, 0.3);
  EXPECT_EQ(z, 0.0);
  EXPECT_NEAR(p, 1.0, 1e-15);
  std::tie(z, p) = wald_test(-0.511, 0.168);
  EXPECT_NEAR(z, -3.0417, 1e-4);
  EXPECT_NEAR(p, 2.0 * oracle::Phi(-3.0417), 1e-5);
  EXPECT_THROW(wald_test(1.0, 0.0), NumericalError);
  const auto data = sample(47, 100, 2, 3, 1, Link::probit(), exch_matrix(2, 0.2));
  const auto fit = solve_weighted_scores(data, Link::probit(), Structure::exchangeable);
  EXPECT_NEAR(wald_test(fit, "v1").first, fit.estimates.back().z, 1e-14);
  EXPECT_THROW(wald_test(fit, "nope"), InputError);
}

TEST(WeightedScores, ConvergenceFailureCarriesIterate) {
  const auto data = sample(48, 200, 3, 4, 2, Link::probit(), exch_matrix(3, 0.5));
  FitOptions opt;
  opt.max_iter = 1;
  opt.score_tol = 1e-14;
  try {
    solve_weighted_scores(data, Link::probit(), Structure::exchangeable, opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.last_iterate().size(), 5u);
  }
}
