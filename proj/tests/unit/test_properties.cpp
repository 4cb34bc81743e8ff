// Randomized invariants over generated instances. Each property draws its own
// cases from a fixed seed, so failures are reproducible by case number.

#include <cmath>

#include <gtest/gtest.h>

#include "properties.hpp"
#include "wscore/selection.hpp"
#include "wscore/weighted_scores.hpp"

using namespace wscore;

namespace {

constexpr int kCases = 200;

Eigen::VectorXd random_x(gen::Rng& rng, int p) {
  Eigen::VectorXd x(p);
  for (int k = 0; k < p; ++k) x[k] = gen::uniform(rng, -1.5, 1.5);
  return x;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST(Property, PmfIsNormalizedAndNonnegative) {
  gen::Rng rng(1001);
  for (int c = 0; c < kCases; ++c) {
    const int K = gen::integer(rng, 2, 10), p = gen::integer(rng, 0, 3);
    const auto a = gen::params(rng, p, K - 1);
    const auto link = gen::link(rng);
    const Eigen::VectorXd x = random_x(rng, p);
    double total = 0.0;
    for (int y = 1; y <= K; ++y) {
      const double v = ordinal_pmf(a, link, x, y);
      ASSERT_GE(v, 0.0) << "case " << c;
      total += v;
    }
    ASSERT_NEAR(total, 1.0, 1e-12) << "case " << c;
  }
}

TEST(Property, ScoreHasMeanZeroAndInformationIdentity) {
  gen::Rng rng(1002);
  for (int c = 0; c < kCases; ++c) {
    const int K = gen::integer(rng, 2, 8);
    const auto link = gen::link(rng);
    const Eigen::VectorXd g = gen::cutpoints(rng, K - 1).array() + gen::uniform(rng, -1, 1);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(K - 1);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(K - 1, K - 1);
    for (int y = 1; y <= K; ++y) {
      const double p = ordinal_pmf(link, g, y);
      const Eigen::VectorXd s = score_gamma(link, g, y);
      mean += p * s;
      info += p * s * s.transpose();
    }
    ASSERT_LT(mean.cwiseAbs().maxCoeff(), 1e-12) << "case " << c;
    ASSERT_LT((info - fisher_block(link, g)).cwiseAbs().maxCoeff(), 1e-10) << "case " << c;
  }
}

TEST(Property, PairTablesMarginalizeToUnivariatePmf) {
  gen::Rng rng(1003);
  for (int c = 0; c < kCases; ++c) {
    const int K = gen::integer(rng, 2, 7);
    const auto a = gen::params(rng, 1, K - 1);
    const auto link = gen::link(rng);
    const Eigen::VectorXd xj = random_x(rng, 1), xk = random_x(rng, 1);
    const double rho = gen::uniform(rng, -0.95, 0.95);
    for (int yj = 1; yj <= K; ++yj) {
      double row = 0.0;
      for (int yk = 1; yk <= K; ++yk) row += pair_prob(a, link, xj, xk, yj, yk, rho);
      ASSERT_NEAR(row, ordinal_pmf(a, link, xj, yj), 1e-9) << "case " << c;
    }
  }
}

TEST(Property, LatticeCellsSumToOne) {
  gen::Rng rng(1004);
  for (int c = 0; c < kCases; ++c) {
    const int d = gen::integer(rng, 2, 4), K = gen::integer(rng, 2, 4);
    std::vector<std::vector<double>> cuts(d);
    const auto link = gen::link(rng);
    for (int j = 0; j < d; ++j) cuts[j] = normal_bounds(link, gen::cutpoints(rng, K - 1));
    const auto cells = mvn_lattice_cells(cuts, gen::correlation(rng, d));
    double total = 0.0;
    for (double v : cells) {
      ASSERT_GE(v, -1e-12) << "case " << c;
      total += v;
    }
    ASSERT_NEAR(total, 1.0, 1e-6) << "case " << c;
  }
}

TEST(Property, CorrelationModelsArePositiveDefinite) {
  gen::Rng rng(1005);
  for (int c = 0; c < kCases; ++c) {
    const int d = gen::integer(rng, 2, 10);
    const double r = gen::uniform(rng, exchangeable_lower_bound(d), 0.99);
    for (const auto& m : {CorrelationModel::exchangeable(d, r), CorrelationModel::ar1(d, gen::uniform(rng, -0.99, 0.99)),
                          CorrelationModel::unstructured(gen::correlation(rng, d))}) {
      const Eigen::MatrixXd R = m.matrix();
      ASSERT_GT(min_eigenvalue(R), 0.0) << "case " << c << " " << structure_name(m.structure());
      for (int j = 1; j <= d; ++j)
        for (int k = j + 1; k <= d; ++k) ASSERT_EQ(R(j - 1, k - 1), m.rho(j, k));
    }
  }
}

TEST(Property, WeightsArePositiveDefiniteWithFisherDiagonal) {
  gen::Rng rng(1006);
  for (int c = 0; c < kCases; ++c) {
    const int d = gen::integer(rng, 2, 4), K = gen::integer(rng, 2, 4), p = gen::integer(rng, 0, 2);
    const auto a = gen::params(rng, p, K - 1);
    const auto link = gen::link(rng);
    Cluster cl{"c", {}, {}, Eigen::MatrixXd(d, p)};
    for (int j = 0; j < d; ++j) {
      cl.index.push_back(j + 1);
      cl.y.push_back(1);
      cl.x.row(j) = random_x(rng, p).transpose();
    }
    const auto w = cluster_weights(cl, a, link, CorrelationModel::unstructured(gen::correlation(rng, d, 0.8)));
    const int q = K - 1;
    ASSERT_GT(min_eigenvalue(w.omega), 0.0) << "case " << c;
    ASSERT_LT((w.omega - w.omega.transpose()).cwiseAbs().maxCoeff(), 1e-12) << "case " << c;
    for (int j = 0; j < d; ++j)
      ASSERT_LT((w.omega.block(j * q, j * q, q, q) - w.delta.block(j * q, j * q, q, q)).cwiseAbs().maxCoeff(), 1e-10)
          << "case " << c;
  }
}

TEST(Property, VariabilityMatricesArePositiveSemidefinite) {
  gen::Rng rng(1007);
  for (int c = 0; c < kCases / 4; ++c) {
    const int d = gen::integer(rng, 2, 4), K = gen::integer(rng, 2, 4);
    const auto a = gen::params(rng, 1, K - 1);
    const auto link = gen::link(rng);
    const Eigen::MatrixXd R = gen::correlation(rng, d, 0.8);
    const auto data = gen::dataset(rng, 25, d, K, a, link, R, true);
    const auto corr = CorrelationModel::unstructured(R);
    for (auto mode : {JMode::empirical, JMode::model})
      ASSERT_GT(min_eigenvalue(assemble_J(data, a, corr, link, mode)), -1e-10) << "case " << c;
    const Eigen::MatrixXd H = assemble_H(data, a, corr, link);
    ASSERT_EQ(H.topRightCorner(a.r(), corr.num_free()).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_GT(min_eigenvalue(H.topLeftCorner(a.r(), a.r())), 0.0) << "case " << c;
  }
}

TEST(Property, SimulationIsDeterministicPerReplication) {
  gen::Rng rng(1008);
  for (int c = 0; c < kCases; ++c) {
    SimDesign d;
    d.design = static_cast<DesignId>(gen::integer(rng, 0, 2));
    d.n = gen::integer(rng, 2, 20);
    d.d = gen::integer(rng, 1, 5);
    d.K = gen::integer(rng, 2, 6);
    d.seed = rng();
    const auto rep = static_cast<std::uint64_t>(gen::integer(rng, 0, 1000));
    const auto a = simulate_dataset(d, rep), b = simulate_dataset(d, rep);
    for (int i = 0; i < d.n; ++i) {
      ASSERT_EQ(a.clusters[i].y, b.clusters[i].y) << "case " << c;
      ASSERT_EQ(a.clusters[i].x, b.clusters[i].x) << "case " << c;
      for (int y : a.clusters[i].y) ASSERT_TRUE(y >= 1 && y <= d.K);
    }
  }
}

TEST(Property, FitsAreScaleEquivariant) {
  gen::Rng rng(1009);
  int fitted = 0;
  for (int c = 0; c < kCases / 8; ++c) {
    const int d = gen::integer(rng, 2, 4), K = gen::integer(rng, 2, 4);
    const auto a = gen::params(rng, 2, K - 1);
    const auto link = gen::link(rng);
    Eigen::MatrixXd R = Eigen::MatrixXd::Constant(d, d, gen::uniform(rng, 0.0, 0.6));
    R.diagonal().setOnes();
    const auto data = gen::dataset(rng, 120, d, K, a, link, R);
    const double s = gen::uniform(rng, 0.2, 5.0) * (gen::integer(rng, 0, 1) ? 1 : -1);
    auto scaled = data;
    for (auto& cl : scaled.clusters) cl.x.col(0) *= s;
    const auto structure = static_cast<Structure>(gen::integer(rng, 1, 3));
    FitReport x, y;
    try {
      x = solve_weighted_scores(data, link, structure);
    } catch (const Error&) {
      continue;  // a fit that fails on the original data is not the property under test
    }
    y = solve_weighted_scores(scaled, link, structure);
    ++fitted;
    for (std::size_t k = 0; k < x.estimates.size(); ++k) {
      const bool target = x.estimates[k].name == "v1";
      const double tol = 1e-6 * (1 + std::abs(x.estimates[k].est));
      ASSERT_NEAR(y.estimates[k].est * (target ? s : 1.0), x.estimates[k].est, tol) << "case " << c;
      ASSERT_NEAR(y.estimates[k].se * (target ? std::abs(s) : 1.0), x.estimates[k].se, tol) << "case " << c;
    }
  }
  EXPECT_GE(fitted, kCases / 8 - 2);
}
