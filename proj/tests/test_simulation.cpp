#include <doctest.h>

#include <cmath>

#include "bfda/metrics.hpp"
#include "bfda/simulation.hpp"

using namespace bfda;

TEST_CASE("stationary generator dimensions and noise level") {
  SimSpec spec;
  spec.seed = 4;
  const SimResult sim = generate(spec);
  CHECK(sim.grid.size() == 80);
  CHECK(sim.grid[0] == 0.0);
  CHECK(sim.grid[79] == doctest::Approx(1.5707963267948966));
  CHECK(sim.truth.rows() == 80);
  CHECK(sim.truth.cols() == 50);
  CHECK(sim.data.n_curves() == 50);
  CHECK(spec.sigma_eps * spec.sigma_eps == doctest::Approx(1.25));

  // noise variance of (Y - Z) matches sigma_eps^2
  double acc = 0.0;
  for (Eigen::Index i = 0; i < 50; ++i)
    acc += (sim.data.curves[static_cast<std::size_t>(i)].y - sim.truth.col(i)).squaredNorm();
  acc /= (80.0 * 50.0);
  CHECK(acc == doctest::Approx(1.25).epsilon(0.1));
}

TEST_CASE("generator mean converges to 3 sin(4t) over replicates") {
  Vector mean_acc = Vector::Zero(40);
  const int reps = 60;
  for (int r = 0; r < reps; ++r) {
    SimSpec spec;
    spec.n = 20;
    spec.p = 40;
    spec.seed = static_cast<std::uint64_t>(100 + r);
    const SimResult sim = generate(spec);
    mean_acc += sim.truth.rowwise().mean();
  }
  mean_acc /= reps;
  SimSpec spec;
  spec.p = 40;
  const Vector grid = Vector::LinSpaced(40, 0.0, 1.5707963267948966);
  const Vector expect = sim_true_mean(spec, grid);
  // sd of the estimate ~ sqrt(5 / (20*60)) ~ 0.065
  CHECK((mean_acc - expect).cwiseAbs().maxCoeff() < 0.25);
}

TEST_CASE("nonstationary mean and covariance formulas") {
  SimSpec spec;
  spec.kind = SimKind::nonstationary;
  Vector grid(3);
  grid << 0.0, 1.0, 1.5;
  const Vector mu = sim_true_mean(spec, grid);
  CHECK(mu[0] == doctest::Approx(0.0));  // 3 * h(0) * sin(0)
  const Matrix cov = sim_true_cov(spec, grid);
  CHECK(cov(1, 1) == doctest::Approx(5.0 * 1.5 * 1.5));  // 5 h(1)^2 = 11.25
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nonstationary reduces to stationary when h=1, xi=identity") {
  // checked through the formulas: at t where h(t)=1 and xi(t)=t the entries match
  SimSpec ns;
  ns.kind = SimKind::nonstationary;
  SimSpec st;
  Vector grid(2);
  grid << 0.5, 0.5;  // h(0.5) = 1
  const Matrix c_ns = sim_true_cov(ns, grid);
  CHECK(c_ns(0, 0) == doctest::Approx(5.0));
  const Matrix c_st = sim_true_cov(st, grid);
  CHECK(c_st(0, 0) == doctest::Approx(5.0));
}

TEST_CASE("sparsify keeps ceil(fraction p) points in order") {
  SimSpec spec;
  spec.n = 50;
  spec.p = 80;
  spec.seed = 17;
  const SimResult sim = generate(spec);
  RngStream rng(17, 5);
  const FunctionalDataset sp = sparsify(sim.data, 0.6, rng);
  for (const auto& c : sp.curves) {
    CHECK(c.t.size() == 48);
    for (Eigen::Index j = 0; j + 1 < c.t.size(); ++j) CHECK(c.t[j] < c.t[j + 1]);
  }
  // fraction 1 returns the dataset unchanged
  RngStream rng2(17, 6);
  const FunctionalDataset same = sparsify(sim.data, 1.0, rng2);
  CHECK((same.curves[0].y - sim.data.curves[0].y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generation is reproducible per seed") {
  SimSpec spec;
  spec.n = 5;
  spec.p = 16;
  spec.seed = 77;
  const SimResult a = generate(spec);
  const SimResult b = generate(spec);
  CHECK((a.truth - b.truth).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.data.curves[2].y - b.data.curves[2].y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bls oracle limits and scalar case") {
  // p = 1 shrinkage: Sigma = 4, noise 1, mu = 0, y = 5 -> 4/5 * 5 = 4
  Matrix y = Matrix::Constant(1, 1, 5.0);
  Vector mu = Vector::Zero(1);
  Matrix sig = Matrix::Constant(1, 1, 4.0);
  const BlsResult b = bls_oracle(y, mu, sig, 1.0);
  CHECK(b.smoothed(0, 0) == doctest::Approx(4.0));

  // sigma_eps2 -> 0: output equals input
  SimSpec spec;
  spec.n = 4;
  spec.p = 24;
  spec.seed = 8;
  const SimResult sim = generate(spec);
  Matrix ymat = to_pooled_matrix(sim.data, pool_grids(sim.data), 0.0);
  const BlsResult b2 = bls_oracle(ymat, sim.true_mean, sim.true_cov, 1e-12);
  CHECK((b2.smoothed - ymat).cwiseAbs().maxCoeff() < 1e-4);

  // Sigma -> 0: output collapses to mu
  const BlsResult b3 = bls_oracle(ymat, sim.true_mean, Matrix::Identity(24, 24) * 1e-12, 1.0);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK((b3.smoothed.col(i) - sim.true_mean).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("bls beats the noisy data on average") {
  SimSpec spec;
  spec.seed = 123;
  const SimResult sim = generate(spec);
  const PooledGrid grid = pool_grids(sim.data);
  Matrix ymat = to_pooled_matrix(sim.data, grid, 0.0);
  const BlsResult b = bls_oracle(ymat, sim.true_mean, sim.true_cov, 1.25);
  double r_bls = 0.0, r_raw = 0.0;
  for (Eigen::Index i = 0; i < ymat.cols(); ++i) {
    r_bls += rimse_curve(b.smoothed.col(i), sim.truth.col(i), sim.grid);
    r_raw += rimse_curve(ymat.col(i), sim.truth.col(i), sim.grid);
  }
  CHECK(r_bls < r_raw);
}
