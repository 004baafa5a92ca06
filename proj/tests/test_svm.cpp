#include <doctest.h>

#include <cmath>
#include <random>

#include "fistasep/data_gen.hpp"
#include "fistasep/projections.hpp"
#include "fistasep/svm.hpp"
#include "oracles.hpp"

using namespace fistasep;

namespace {

svm::Dataset toy_dataset() {
  Matrix c(2, 2), d(2, 2);
  c << 1.0, 0.0, 0.8, 0.1;
  d << -1.0, 0.0, -0.8, -0.1;
  return svm::make_dataset(c, d);
}

svm::Dataset two_ball(std::uint64_t seed, long n = 60) {
  datagen::TwoBallModel model;
  model.n = n;
  model.seed = seed;
  return datagen::gen_two_ball(model).first;
}

}  // namespace

TEST_CASE("hyperparams: parameter scheme") {
  for (long n : {7L, 10L, 100L, 569L, 1000L, 24014L}) {
    const auto hp = svm::Hyperparams::for_size_radius(n, 1.0);
    CHECK(hp.gamma == 64.0 / static_cast<double>(n));
    CHECK(hp.mu == static_cast<double>(n) / 128.0);
    CHECK(1.0 - hp.mu * hp.gamma == 0.5);  // exact breakpoint
    CHECK(hp.kappa == doctest::Approx(129.0).epsilon(1e-15));
  }
  CHECK(svm::Hyperparams::for_size_radius(100, 2.0).kappa == doctest::Approx(513.0).epsilon(1e-15));

  const auto ds = toy_dataset();
  CHECK(ds.radius == doctest::Approx(1.0).epsilon(1e-15));
  const auto [scaled, factor] = svm::scale_to_unit_radius(ds);
  CHECK(factor == ds.radius);
  CHECK(scaled.radius == 1.0);
}

TEST_CASE("dual_gradient: closed form, finite differences, smoothness bound") {
  const auto ds = two_ball(3);
  const auto hp = svm::Hyperparams::for_dataset(ds);
  const Index n = ds.n();

  // all terms vanish at zero except the constant e
  const Vector g0 = svm::dual_gradient(ds, hp, Vector::Zero(n));
  CHECK((g0.array() - 1.0).abs().maxCoeff() == 0.0);

  std::mt19937_64 eng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector z = oracles::random_vector(n, eng, -0.2, 0.2);
    const Vector g = svm::dual_gradient(ds, hp, z);
    for (Index i = 0; i < std::min<Index>(n, 10); ++i) {
      auto fi = [&](double zi) {
        Vector zz = z;
        zz[i] = zi;
        return svm::dual_objective(ds, hp, zz);
      };
      const double fd = oracles::central_diff(fi, z[i], 1e-6);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }

    const Vector z2 = oracles::random_vector(n, eng, -0.2, 0.2);
    const Vector g2 = svm::dual_gradient(ds, hp, z2);
    CHECK((g - g2).norm() <= hp.lipschitz * (z - z2).norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("proximity_bound: formula and empirical validity") {
  const auto hp = svm::Hyperparams::for_size_radius(100, 2.0);  // kappa = 513
  CHECK(svm::proximity_bound(hp, 0.0) == 0.0);
  CHECK(svm::proximity_bound(hp, 0.01) == doctest::Approx(10.26).epsilon(1e-12));

  const auto ds = two_ball(11, 80);
  const auto hp2 = svm::Hyperparams::for_dataset(ds);
  const Vector ref = svm::reference_dual(ds, 1e-13);

  // walk the FISTA iterates and check the certified bound each step
  fista::SmoothProblem prob;
  prob.lipschitz = hp2.lipschitz;
  prob.strong_convexity = hp2.mu;
  prob.gradient = [&](const Vector& z) { return Vector(-svm::dual_gradient(ds, hp2, z)); };
  prob.projector = [&](Vector& z) { proj::project_omega_inplace(z, ds.j(), hp2.gamma); };
  auto observer = [&](const fista::State& st) {
    const double bound = svm::proximity_bound(hp2, st.last_projected_step_norm);
    CHECK((st.x - ref).norm() <= bound + 1e-9);
    return st.k >= 200 ? fista::Signal::StopEarly : fista::Signal::Continue;
  };
  fista::solve(prob, Vector::Zero(ds.n()), 250, observer);
}

TEST_CASE("plain projected gradient ascends g monotonically") {
  const auto ds = two_ball(41, 60);
  const auto hp = svm::Hyperparams::for_dataset(ds);
  Vector z = Vector::Zero(ds.n());
  double prev = svm::dual_objective(ds, hp, z);
  for (int k = 0; k < 200; ++k) {
    z += (1.0 / hp.lipschitz) * svm::dual_gradient(ds, hp, z);
    proj::project_omega_inplace(z, ds.j(), hp.gamma);
    const double g = svm::dual_objective(ds, hp, z);
    CHECK(g >= prev - 1e-12);
    prev = g;
  }
}

TEST_CASE("iterates remain in Omega and never exceed the optimal value") {
  const auto ds = two_ball(13, 70);
  const auto hp = svm::Hyperparams::for_dataset(ds);
  const Vector ref = svm::reference_dual(ds, 1e-13);
  const double gstar = svm::dual_objective(ds, hp, ref);

  fista::SmoothProblem prob;
  prob.lipschitz = hp.lipschitz;
  prob.strong_convexity = hp.mu;
  prob.gradient = [&](const Vector& z) { return Vector(-svm::dual_gradient(ds, hp, z)); };
  prob.projector = [&](Vector& z) { proj::project_omega_inplace(z, ds.j(), hp.gamma); };
  auto observer = [&](const fista::State& st) {
    const auto u = st.x.head(ds.j());
    const auto v = st.x.tail(ds.l());
    CHECK(std::abs(u.sum() - v.sum()) <=
          1e-10 * hp.gamma * static_cast<double>(ds.n()));
    CHECK((u.array() >= -1e-15).all());
    CHECK((u.array() <= hp.gamma + 1e-15).all());
    CHECK((v.array() >= -1e-15).all());
    CHECK((v.array() <= hp.gamma + 1e-15).all());
    CHECK(svm::dual_objective(ds, hp, st.x) <= gstar + 1e-9);
    return fista::Signal::Continue;
  };
  fista::solve(prob, Vector::Zero(ds.n()), 150, observer);
}

TEST_CASE("classification tracker: growth, stalling, stop rule") {
  const auto hp = svm::Hyperparams::for_size_radius(4, 1.0);
  svm::ClassificationTracker tr(4, 1e-4);

  // a huge bound admits nobody and the tracker goes stale
  Vector u = Vector::Zero(2), v = Vector::Zero(2);
  CHECK(!tr.update(hp, u, v, hp.gamma));
  CHECK(tr.size() == 0);
  CHECK(tr.stale() == 1);

  // a tiny bound with u, v strictly below gamma admits everyone
  svm::ClassificationTracker tr2(4, 1e-4);
  u.setConstant(0.5 * hp.gamma);
  v.setConstant(0.5 * hp.gamma);
  CHECK(!tr2.update(hp, u, v, 1e-12));
  CHECK(tr2.size() == 4);
  CHECK(tr2.fraction() == 1.0);
  CHECK(tr2.stale() == 0);

  // two consecutive non-improving iterations stop the run
  CHECK(!tr2.update(hp, u, v, 1e-12));
  CHECK(tr2.stale() == 1);
  CHECK(tr2.update(hp, u, v, 1e-12));
  CHECK(tr2.stale() == 2);
  CHECK(tr2.size() == 4);  // T never shrinks
}

TEST_CASE("extract_w: accumulation") {
  const auto hp = svm::Hyperparams::for_size_radius(2, 1.0);
  Matrix c(1, 2), d(1, 2);
  c << 1.0, 0.0;
  d << -1.0, 0.0;
  const auto ds = svm::make_dataset(c, d);
  Vector z(2);
  z << hp.gamma, hp.gamma;
  const Vector w = svm::extract_w(ds, z);
  CHECK(w[0] == doctest::Approx(2.0 * hp.gamma).epsilon(1e-15));
  CHECK(w[1] == 0.0);
  CHECK(svm::extract_w(ds, Vector::Zero(2)).isZero(0.0));

  std::mt19937_64 eng(21);
  const auto big = two_ball(17, 50);
  const Vector zz = oracles::random_vector(big.n(), eng);
  const Vector got = svm::extract_w(big, zz);
  Vector naive = Vector::Zero(big.dim());
  for (Index i = 0; i < big.j(); ++i) naive += zz[i] * big.c_points.row(i).transpose();
  for (Index i = 0; i < big.l(); ++i) naive -= zz[big.j() + i] * big.d_points.row(i).transpose();
  CHECK((got - naive).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("psi and psi_prime: frozen values, oracle, analytic properties") {
  const auto hp = svm::Hyperparams::for_size_radius(100, 1.0);
  CHECK(svm::psi(1.5, hp) == 0.0);
  CHECK(svm::psi(0.75, hp) == doctest::Approx(0.04).epsilon(1e-15));
  CHECK(svm::psi(0.0, hp) == doctest::Approx(0.48).epsilon(1e-15));
  CHECK(svm::psi_prime(2.0, hp) == 0.0);
  CHECK(svm::psi_prime(0.75, hp) == doctest::Approx(-0.32).epsilon(1e-15));

  // both branch formulas agree at the kink
  CHECK(svm::psi_prime(0.5, hp) == doctest::Approx(-hp.gamma).epsilon(1e-15));
  CHECK((0.5 - 1.0) / hp.mu == doctest::Approx(-hp.gamma).epsilon(1e-15));

  for (long n : {10L, 100L, 1000L}) {
    const auto h = svm::Hyperparams::for_size_radius(n, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    double prev_slope = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 500; ++i) {
      const double theta = -2.0 + 5.0 * i / 500.0;
      const double value = svm::psi(theta, h);
      CHECK(value == doctest::Approx(oracles::psi_qp_oracle(theta, h.gamma, h.mu)).epsilon(1e-9).scale(1.0));
      const double fd = oracles::central_diff([&](double x) { return svm::psi(x, h); }, theta, 1e-7);
      CHECK(svm::psi_prime(theta, h) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      CHECK(value <= prev + 1e-15);               // nonincreasing
      CHECK(std::abs(svm::psi_prime(theta, h)) <= h.gamma + 1e-15);  // gamma-Lipschitz
      const double slope = svm::psi_prime(theta, h);
      CHECK(slope >= prev_slope - 1e-15);          // convexity via monotone derivative
      prev = value;
      prev_slope = slope;
    }
    // C1 at both breakpoints
    CHECK(std::abs(svm::psi(0.5 - 1e-12, h) - svm::psi(0.5 + 1e-12, h)) <= 1e-11 * h.gamma + 1e-15);
    CHECK(svm::psi(1.0, h) == 0.0);
    CHECK(svm::psi_prime(1.0, h) == 0.0);
  }
}

TEST_CASE("intercept_bisection: symmetry, flat region, golden-section oracle") {
  const auto hp4 = svm::Hyperparams::for_size_radius(4, 1.0);
  Matrix c(2, 2), d(2, 2);
  c << 0.9, 0.2, 0.7, -0.3;
  d = -c;  // mirror symmetry forces t = 0
  const auto ds = svm::make_dataset(c, d);
  Vector w(2);
  w << 1.0, 0.2;
  CHECK(std::abs(svm::intercept_bisection(ds, hp4, w, 1e-12)) <= 1e-10);

  // far-separated classes with big w: h vanishes on an interval and the
  // midpoint is returned
  Matrix c2(1, 1), d2(1, 1);
  c2 << 1.0;
  d2 << -1.0;
  const auto ds2 = svm::make_dataset(c2, d2);
  const auto hp2 = svm::Hyperparams::for_size_radius(2, 1.0);
  Vector w2(1);
  w2 << 10.0;
  // margins exceed 1 for t in (-9, 9); the returned t is the flat-region midpoint
  const double t2 = svm::intercept_bisection(ds2, hp2, w2, 1e-12);
  CHECK(std::abs(t2) <= 1e-9);

  std::mt19937_64 eng(29);
  const auto big = two_ball(19, 40);
  const auto hpb = svm::Hyperparams::for_dataset(big);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector wb = oracles::random_vector(big.dim(), eng, -2.0, 2.0);
    const double got = svm::intercept_bisection(big, hpb, wb, 1e-12);
    const double b = 1.0 + big.radius * wb.norm() + 1.0;
    const double oracle = oracles::golden_section(
        [&](double t) { return svm::primal_objective(big, hpb, wb, t); }, -b, b, 120);
    CHECK(svm::primal_objective(big, hpb, wb, got) <=
          svm::primal_objective(big, hpb, wb, oracle) + 1e-8);
  }
}

TEST_CASE("train: stall rule and degenerate delta_min") {
  const auto ds = two_ball(23, 90);
  // delta_min = 1 can never be beaten, so the run stalls after 2 iterations
  auto res = svm::train(ds, 1.0, 1000);
  CHECK(res.report.iterations == 2);
  CHECK(res.tracker.stale() == 2);

  auto trained = svm::train(ds, 1e-4, 100000, true);
  CHECK(trained.report.stop_reason == fista::StopReason::EarlyStopped);
  CHECK(trained.trace.size() == static_cast<size_t>(trained.report.iterations));
  CHECK(trained.model.w.allFinite());
  CHECK(std::isfinite(trained.model.t));

  // the early-stopped model classifies the planted points correctly
  datagen::TwoBallModel model;
  model.n = 90;
  model.seed = 23;
  const auto [ds2, planted] = datagen::gen_two_ball(model);
  const auto labels_c = svm::predict(trained.model, ds2.c_points);
  const auto labels_d = svm::predict(trained.model, ds2.d_points);
  for (Index i : planted.c_indices) CHECK(labels_c[i] == 1);
  for (Index i : planted.d_indices) CHECK(labels_d[i] == -1);
}

TEST_CASE("tracker soundness against the reference optimum") {
  // drive the tracker along a full FISTA trajectory (training itself may
  // stall before the bound shrinks below gamma and certify nothing)
  const auto ds = two_ball(29, 80);
  const auto hp = svm::Hyperparams::for_dataset(ds);
  const Vector ref = svm::reference_dual(ds, 1e-13);

  svm::ClassificationTracker tracker(ds.n(), 1e-4);
  fista::SmoothProblem prob;
  prob.lipschitz = hp.lipschitz;
  prob.strong_convexity = hp.mu;
  prob.gradient = [&](const Vector& z) { return Vector(-svm::dual_gradient(ds, hp, z)); };
  prob.projector = [&](Vector& z) { proj::project_omega_inplace(z, ds.j(), hp.gamma); };
  auto observer = [&](const fista::State& st) {
    tracker.update(hp, st.x.head(ds.j()), st.x.tail(ds.l()),
                   svm::proximity_bound(hp, st.last_projected_step_norm));
    return fista::Signal::Continue;
  };
  fista::solve(prob, Vector::Zero(ds.n()), 300, observer);

  CHECK(tracker.size() > ds.n() / 2);  // the run actually certifies points
  for (Index i = 0; i < ds.j(); ++i)
    if (tracker.contains(i)) CHECK(ref[i] < hp.gamma);
  for (Index i = 0; i < ds.l(); ++i)
    if (tracker.contains(ds.j() + i)) CHECK(ref[ds.j() + i] < hp.gamma);
}

TEST_CASE("KKT cross-check at the reference optimum: u* = -psi'") {
  const auto ds = two_ball(31, 60);
  const auto hp = svm::Hyperparams::for_dataset(ds);
  const Vector ref = svm::reference_dual(ds, 1e-13);
  const Vector w = svm::extract_w(ds, ref);
  const double t = svm::intercept_bisection(ds, hp, w, 1e-13);
  for (Index i = 0; i < ds.j(); ++i) {
    const double theta = ds.c_points.row(i).dot(w) + t;
    CHECK(ref[i] == doctest::Approx(-svm::psi_prime(theta, hp)).epsilon(1e-6).scale(hp.gamma));
  }
  for (Index i = 0; i < ds.l(); ++i) {
    const double theta = -ds.d_points.row(i).dot(w) - t;
    CHECK(ref[ds.j() + i] ==
          doctest::Approx(-svm::psi_prime(theta, hp)).epsilon(1e-6).scale(hp.gamma));
  }
}

TEST_CASE("predict: sign convention") {
  svm::Model m;
  m.w = Vector::Zero(2);
  m.w << 1.0, 0.0;
  m.t = 0.0;
  Matrix pts(3, 2);
  pts << 0.5, 0.0, -0.5, 0.0, 0.0, 0.0;
  const auto lab = svm::predict(m, pts);
  CHECK(lab[0] == 1);
  CHECK(lab[1] == -1);
  CHECK(lab[2] == 1);  // sign(0) -> +1

  svm::Model zero;
  zero.w = Vector::Zero(2);
  zero.t = -1.0;
  const auto lab2 = svm::predict(zero, pts);
  CHECK((lab2.array() == -1).all());

  Eigen::VectorXi truth(3);
  truth << 1, -1, 1;
  CHECK(svm::accuracy(lab, truth) == 1.0);
}

TEST_CASE("theory_constants: frozen values, limits, feasibility flags") {
  const auto tc = svm::theory_constants(0.75, 0.75, 0.05, 0.01, 300);
  CHECK(tc.delta == doctest::Approx(0.42857142857142855).epsilon(1e-12));
  CHECK(tc.xi == doctest::Approx(1.5803021496858598).epsilon(1e-12));
  CHECK(tc.K == doctest::Approx(0.49486793907182517).epsilon(1e-12));
  CHECK(tc.assumption_ok);
  CHECK(tc.Delta0 == doctest::Approx(1.0 - 2.0 * tc.K).epsilon(1e-12));
  // the quoted data-model parameters admit no Kbar in [1/2, 1)
  CHECK(tc.kbar_lower == doctest::Approx(1.9208022967309682).epsilon(1e-12));
  CHECK(!tc.kbar_feasible);
  CHECK(!tc.Delta.has_value());

  // rho, nu -> 0 limits: xi -> (1-sigma)/sigma and K -> 3/(128 sigma^2)
  const auto lim = svm::theory_constants(0.75, 0.75, 1e-9, 0.0, 300);
  CHECK(lim.xi == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK(lim.K == doctest::Approx(3.0 / (128.0 * 0.75 * 0.75)).epsilon(1e-6));
  CHECK(lim.kbar_feasible);
  REQUIRE(lim.Delta.has_value());
  CHECK(*lim.Delta > 0.0);
  REQUIRE(lim.kbar_used.has_value());
  CHECK(*lim.kbar_used > lim.kbar_lower);
  CHECK(*lim.kbar_used < 1.0);

  CHECK_THROWS_AS(svm::theory_constants(0.3, 0.75, 0.05, 0.01, 300), svm::InvalidDataModel);
  CHECK_THROWS_AS(svm::theory_constants(0.75, 0.75, 0.9, 0.01, 300), svm::InvalidDataModel);
  CHECK_THROWS_AS(svm::theory_constants(0.75, 0.75, 0.05, -1.0, 300), svm::InvalidDataModel);
}

TEST_CASE("train rejects unpreprocessed radii") {
  Matrix c(1, 1), d(1, 1);
  c << 5.0;
  d << -5.0;
  const auto ds = svm::make_dataset(c, d);
  CHECK_THROWS_AS(svm::train(ds, 1e-4, 10), std::invalid_argument);
}
