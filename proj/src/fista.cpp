#include "fistasep/fista.hpp"

#include <cmath>
#include <random>

namespace fistasep::fista {

State make_state(Vector x0) {
  State s;
  s.x = x0;
  s.y = std::move(x0);
  return s;
}

namespace {

Vector projected_gradient_point(const State& s, const SmoothProblem& prob) {
  Vector xn = s.y - (1.0 / prob.lipschitz) * prob.gradient(s.y);
  prob.projector(xn);
  if (!xn.allFinite()) throw NonFiniteIterate("fista: iterate has non-finite coordinates");
  return xn;
}

}  // namespace

void step_convex(State& s, const SmoothProblem& prob) {
  if (!(s.t >= 1.0)) throw std::invalid_argument("step_convex: t must be >= 1");
  Vector xn = projected_gradient_point(s, prob);
  const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * s.t * s.t));
  s.last_projected_step_norm = (xn - s.y).norm();
  s.last_step_norm = (xn - s.x).norm();
  s.y = xn + ((s.t - 1.0) / tn) * (xn - s.x);
  s.x = std::move(xn);
  s.t = tn;
  ++s.k;
}

double strongly_convex_momentum(double kappa) {
  const double rk = std::sqrt(kappa);
  return (rk - 1.0) / (rk + 1.0);
}

void step_strongly_convex(State& s, const SmoothProblem& prob) {
  if (!(prob.strong_convexity > 0.0))
    throw std::invalid_argument("step_strongly_convex: strong_convexity must be positive");
  const double beta = strongly_convex_momentum(prob.lipschitz / prob.strong_convexity);
  Vector xn = projected_gradient_point(s, prob);
  s.last_projected_step_norm = (xn - s.y).norm();
  s.last_step_norm = (xn - s.x).norm();
  s.y = xn + beta * (xn - s.x);
  s.x = std::move(xn);
  ++s.k;
}

SolveResult solve(const SmoothProblem& prob, Vector x0, long max_iter, const Observer& observer,
                  const TraceFn& trace) {
  if (max_iter < 1) throw std::invalid_argument("solve: max_iter must be >= 1");
  SolveResult res;
  res.state = make_state(std::move(x0));
  const bool strongly = prob.strong_convexity > 0.0;

  for (long it = 0; it < max_iter; ++it) {
    if (strongly)
      step_strongly_convex(res.state, prob);
    else
      step_convex(res.state, prob);

    const Signal sig = observer ? observer(res.state) : Signal::Continue;
    if (trace) res.report.trace.push_back(trace(res.state));
    if (sig != Signal::Continue) {
      res.report.iterations = res.state.k;
      res.report.stop_reason =
          sig == Signal::StopEarly ? StopReason::EarlyStopped : StopReason::ToleranceReached;
      return res;
    }
  }
  res.report.iterations = res.state.k;
  res.report.stop_reason = StopReason::MaxIterations;
  return res;
}

double spectral_norm(const LinearOperator& op, double tol, long max_iter) {
  if (!(tol > 0)) throw std::invalid_argument("spectral_norm: tol must be positive");
  if (op.rows <= 0 || op.cols <= 0)
    throw std::invalid_argument("spectral_norm: operator dimensions must be positive");

  std::mt19937_64 eng(0x5eedf157aULL);
  Vector v(op.cols);
  for (Index i = 0; i < op.cols; ++i) {
    const double u = static_cast<double>(eng() >> 11) * 0x1p-53;
    v[i] = 2.0 * u - 1.0;
  }
  v.normalize();

  double sigma = 0.0;
  for (long it = 0; it < max_iter; ++it) {
    const Vector w = op.apply(v);
    const double s = w.norm();
    if (s == 0.0) return 0.0;
    const double prev = sigma;
    sigma = s;
    if (it > 0 && std::abs(sigma - prev) <= tol * sigma) return sigma;
    v = op.apply_t(w);
    const double nv = v.norm();
    if (nv == 0.0) return sigma;
    v /= nv;
  }
  throw NoConvergence("spectral_norm: Rayleigh quotient did not stabilize");
}

}  // namespace fistasep::fista
