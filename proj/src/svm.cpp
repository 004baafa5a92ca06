#include "fistasep/svm.hpp"

#include <algorithm>
#include <cmath>

#include "fistasep/projections.hpp"

namespace fistasep::svm {

Dataset make_dataset(Matrix c_points, Matrix d_points) {
  if (c_points.rows() < 1 || d_points.rows() < 1)
    throw std::invalid_argument("make_dataset: need at least one point per class");
  if (c_points.cols() != d_points.cols())
    throw std::invalid_argument("make_dataset: feature dimensions differ between classes");
  double r = 0.0;
  for (Index i = 0; i < c_points.rows(); ++i) r = std::max(r, c_points.row(i).norm());
  for (Index i = 0; i < d_points.rows(); ++i) r = std::max(r, d_points.row(i).norm());
  return Dataset{std::move(c_points), std::move(d_points), r};
}

std::pair<Dataset, double> scale_to_unit_radius(const Dataset& ds) {
  if (ds.radius <= 0.0)
    throw std::invalid_argument("scale_to_unit_radius: dataset radius must be positive");
  Dataset out;
  out.c_points = ds.c_points / ds.radius;
  out.d_points = ds.d_points / ds.radius;
  out.radius = 1.0;  // true max row norm is 1 within one ulp
  return {std::move(out), ds.radius};
}

Hyperparams Hyperparams::for_size_radius(long n, double radius) {
  if (n < 1) throw std::invalid_argument("Hyperparams: n must be >= 1");
  Hyperparams hp;
  hp.n = n;
  hp.gamma = 64.0 / static_cast<double>(n);
  hp.mu = static_cast<double>(n) / 128.0;
  hp.lipschitz = hp.mu + static_cast<double>(n) * radius * radius;
  hp.kappa = hp.lipschitz / hp.mu;  // = 1 + 128 R^2
  return hp;
}

Hyperparams Hyperparams::for_dataset(const Dataset& ds) {
  return for_size_radius(ds.n(), ds.radius);
}

DualPoint split_dual(const Vector& z, Index j) {
  return DualPoint{z.head(j), z.tail(z.size() - j)};
}

Vector join_dual(const DualPoint& p) {
  Vector z(p.u.size() + p.v.size());
  z.head(p.u.size()) = p.u;
  z.tail(p.v.size()) = p.v;
  return z;
}

Vector dual_gradient(const Dataset& ds, const Hyperparams& hp, const Vector& z) {
  const Index j = ds.j(), l = ds.l();
  const auto u = z.head(j);
  const auto v = z.tail(l);
  const Vector shared = ds.c_points.transpose() * u - ds.d_points.transpose() * v;
  Vector g(j + l);
  g.head(j).noalias() = -(ds.c_points * shared);
  g.head(j).array() += 1.0;
  g.head(j) -= hp.mu * u;
  g.tail(l).noalias() = ds.d_points * shared;
  g.tail(l).array() += 1.0;
  g.tail(l) -= hp.mu * v;
  return g;
}

double dual_objective(const Dataset& ds, const Hyperparams& hp, const Vector& z) {
  const Index j = ds.j(), l = ds.l();
  const auto u = z.head(j);
  const auto v = z.tail(l);
  const Vector shared = ds.c_points.transpose() * u - ds.d_points.transpose() * v;
  return -0.5 * shared.squaredNorm() + u.sum() + v.sum() -
         0.5 * hp.mu * (u.squaredNorm() + v.squaredNorm());
}

double proximity_bound(const Hyperparams& hp, double projected_step_norm) {
  return 2.0 * hp.kappa * projected_step_norm;
}

double proximity_bound(const Dataset&, const Hyperparams& hp, const Vector& p,
                       const Vector& p_plus) {
  return proximity_bound(hp, (p - p_plus).norm());
}

Vector extract_w(const Dataset& ds, const Vector& z) {
  const Index j = ds.j(), l = ds.l();
  return ds.c_points.transpose() * z.head(j) - ds.d_points.transpose() * z.tail(l);
}

double psi(double theta, const Hyperparams& hp) {
  const double kink = 1.0 - hp.mu * hp.gamma;  // exactly 1/2 under the parameter scheme
  if (theta >= 1.0) return 0.0;
  if (theta >= kink) {
    const double r = 1.0 - theta;
    return r * r / (2.0 * hp.mu);
  }
  return hp.gamma * (1.0 - theta) - 0.5 * hp.mu * hp.gamma * hp.gamma;
}

double psi_prime(double theta, const Hyperparams& hp) {
  const double kink = 1.0 - hp.mu * hp.gamma;
  if (theta > 1.0) return 0.0;
  if (theta >= kink) return (theta - 1.0) / hp.mu;
  return -hp.gamma;
}

double primal_objective(const Dataset& ds, const Hyperparams& hp, const Vector& w, double t) {
  double f = 0.5 * w.squaredNorm();
  const Vector cm = ds.c_points * w;
  const Vector dm = ds.d_points * w;
  for (Index i = 0; i < cm.size(); ++i) f += psi(cm[i] + t, hp);
  for (Index i = 0; i < dm.size(); ++i) f += psi(-dm[i] - t, hp);
  return f;
}

namespace {

double intercept_derivative(const Vector& cm, const Vector& dm, const Hyperparams& hp, double t) {
  double h = 0.0;
  for (Index i = 0; i < cm.size(); ++i) h += psi_prime(cm[i] + t, hp);
  for (Index i = 0; i < dm.size(); ++i) h -= psi_prime(-dm[i] - t, hp);
  return h;
}

}  // namespace

double intercept_bisection(const Dataset& ds, const Hyperparams& hp, const Vector& w, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("intercept_bisection: tol must be positive");
  const Vector cm = ds.c_points * w;
  const Vector dm = ds.d_points * w;
  auto h = [&](double t) { return intercept_derivative(cm, dm, hp, t); };

  double b = 1.0 + ds.radius * w.norm();
  double lo = -b, hi = b;
  double hlo = h(lo), hhi = h(hi);
  int doublings = 0;
  while (!(hlo < 0.0 && hhi > 0.0)) {
    if (!std::isfinite(hlo) || !std::isfinite(hhi) || ++doublings > 60)
      throw BracketFailure("intercept_bisection: no sign change found");
    b *= 2.0;
    lo = -b;
    hi = b;
    hlo = h(lo);
    hhi = h(hi);
  }

  // boundary of {h < 0}
  double alo = lo, ahi = hi;
  while (ahi - alo > tol) {
    const double mid = 0.5 * (alo + ahi);
    if (h(mid) < 0.0)
      alo = mid;
    else
      ahi = mid;
  }
  // boundary of {h > 0}
  double blo = lo, bhi = hi;
  while (bhi - blo > tol) {
    const double mid = 0.5 * (blo + bhi);
    if (h(mid) > 0.0)
      bhi = mid;
    else
      blo = mid;
  }
  return 0.5 * (0.5 * (alo + ahi) + 0.5 * (blo + bhi));
}

ClassificationTracker::ClassificationTracker(Index n, double delta_min)
    : in_set_(static_cast<size_t>(n), 0), delta_min_(delta_min) {
  if (n < 1) throw std::invalid_argument("ClassificationTracker: n must be >= 1");
}

bool ClassificationTracker::update(const Hyperparams& hp, const Vector& u_plus,
                                   const Vector& v_plus, double bound) {
  const Index j = u_plus.size();
  for (Index i = 0; i < j; ++i) {
    if (!in_set_[static_cast<size_t>(i)] && hp.gamma - u_plus[i] > bound) {
      in_set_[static_cast<size_t>(i)] = 1;
      ++count_;
    }
  }
  for (Index i = 0; i < v_plus.size(); ++i) {
    if (!in_set_[static_cast<size_t>(j + i)] && hp.gamma - v_plus[i] > bound) {
      in_set_[static_cast<size_t>(j + i)] = 1;
      ++count_;
    }
  }
  const double p = fraction();
  if (p > p_best_ + delta_min_) {
    p_best_ = p;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= 2;
}

double ClassificationTracker::fraction() const {
  return static_cast<double>(count_) / static_cast<double>(in_set_.size());
}

namespace {

fista::SmoothProblem make_dual_problem(const Dataset& ds, const Hyperparams& hp) {
  fista::SmoothProblem prob;
  prob.lipschitz = hp.lipschitz;
  prob.strong_convexity = hp.mu;
  // the engine minimizes, so run it on -g
  prob.gradient = [&ds, hp](const Vector& z) { return Vector(-dual_gradient(ds, hp, z)); };
  const Index j = ds.j();
  const double gamma = hp.gamma;
  prob.projector = [j, gamma](Vector& z) { proj::project_omega_inplace(z, j, gamma); };
  return prob;
}

}  // namespace

TrainResult train(const Dataset& ds, double delta_min, long max_iter, bool record_trace) {
  if (!(ds.radius <= 2.0))
    throw std::invalid_argument("train: dataset radius must be <= 2 (preprocess first)");
  const Hyperparams hp = Hyperparams::for_dataset(ds);
  const auto prob = make_dual_problem(ds, hp);
  const Index j = ds.j(), l = ds.l();

  ClassificationTracker tracker(ds.n(), delta_min);
  std::vector<TraceRow> trace;

  auto observer = [&](const fista::State& st) {
    const double bound = proximity_bound(hp, st.last_projected_step_norm);
    const bool stop = tracker.update(hp, st.x.head(j), st.x.tail(l), bound);
    if (record_trace)
      trace.push_back({st.k, st.last_projected_step_norm, bound, tracker.fraction(),
                       dual_objective(ds, hp, st.x)});
    return stop ? fista::Signal::StopEarly : fista::Signal::Continue;
  };

  auto res = fista::solve(prob, Vector::Zero(ds.n()), max_iter, observer);

  TrainResult out{Model{}, std::move(res.report), std::move(tracker), std::move(res.state.x),
                  std::move(trace)};
  out.model.w = extract_w(ds, out.dual);
  out.model.t = intercept_bisection(ds, hp, out.model.w, 1e-10);
  out.model.found_at_iteration = out.report.iterations;
  return out;
}

Vector reference_dual(const Dataset& ds, double step_tol, long max_iter) {
  const Hyperparams hp = Hyperparams::for_dataset(ds);
  const auto prob = make_dual_problem(ds, hp);
  auto observer = [step_tol](const fista::State& st) {
    return st.last_projected_step_norm < step_tol ? fista::Signal::StopTolerance
                                                  : fista::Signal::Continue;
  };
  auto res = fista::solve(prob, Vector::Zero(ds.n()), max_iter, observer);
  return std::move(res.state.x);
}

Eigen::VectorXi predict(const Model& model, const Matrix& points) {
  if (points.cols() != model.w.size())
    throw std::invalid_argument("predict: feature dimension mismatch");
  const Vector s = points * model.w;
  Eigen::VectorXi lab(points.rows());
  for (Index i = 0; i < points.rows(); ++i) lab[i] = (s[i] + model.t >= 0.0) ? 1 : -1;
  return lab;
}

double accuracy(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth) {
  if (predicted.size() != truth.size() || predicted.size() == 0)
    throw std::invalid_argument("accuracy: size mismatch");
  long ok = 0;
  for (Index i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++ok;
  return static_cast<double>(ok) / static_cast<double>(predicted.size());
}

TheoryConstants theory_constants(double sigma1, double sigma2, double rho, double nu, long n,
                                 std::optional<double> kbar) {
  if (!(sigma1 >= 0.5 && sigma1 <= 1.0 && sigma2 >= 0.5 && sigma2 <= 1.0))
    throw InvalidDataModel("theory_constants: sigma values must lie in [1/2, 1]");
  if (!(rho > 0.0 && rho < std::min(sigma1, sigma2)))
    throw InvalidDataModel("theory_constants: need 0 < rho < min(sigma1, sigma2)");
  if (!(nu >= 0.0)) throw InvalidDataModel("theory_constants: nu must be >= 0");
  if (n < 1) throw InvalidDataModel("theory_constants: n must be >= 1");

  TheoryConstants tc;
  const double sigma = std::min(sigma1, sigma2);
  tc.delta = 1.0 / (sigma - rho) - 1.0;
  tc.xi = std::sqrt((1.0 + tc.delta) * (1.0 + tc.delta) + 32.0 * nu * (11.0 + 8.0 * tc.delta)) -
          1.0;
  tc.K = 3.0 * (1.0 + tc.xi + 64.0 * nu) / (128.0 * (sigma - rho)) + 3.0 * rho * (1.0 + tc.xi);
  tc.assumption_ok = (1.0 + tc.xi + 64.0 * nu) / (sigma - rho) <= 64.0 / 3.0;
  tc.Delta0 = 1.0 - 2.0 * tc.K;
  tc.kbar_lower = 3.0 * tc.K * tc.K + 3.0 * rho * (1.0 + tc.xi) * (4.0 / 3.0 + 2.0 * nu) +
                  3.0 * nu * (9.0 / 4.0 + 2.0 * tc.xi) + 0.5;
  tc.kbar_feasible = tc.kbar_lower < 1.0;

  if (kbar) {
    if (!(*kbar >= 0.5 && *kbar < 1.0))
      throw InvalidDataModel("theory_constants: kbar must lie in [1/2, 1)");
    tc.kbar_used = kbar;
  } else if (tc.kbar_feasible) {
    tc.kbar_used = 0.5 * (std::max(0.5, tc.kbar_lower) + 1.0);
  }

  if (tc.kbar_used) {
    const double kb = *tc.kbar_used;
    const double numerator = (kb - 3.0 * tc.K * tc.K) / 3.0 -
                             rho * (1.0 + tc.xi) * (4.0 / 3.0 + 2.0 * nu) -
                             nu * (9.0 / 4.0 + 2.0 * tc.xi) - 1.0 / 6.0;
    tc.Delta = numerator / (4.0 * std::sqrt(2.0 * static_cast<double>(n)) * (1.0 + 2.0 * rho / 3.0));
  }
  return tc;
}

}  // namespace fistasep::svm
