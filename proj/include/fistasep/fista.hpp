#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "fistasep/types.hpp"

namespace fistasep::fista {

/// Thrown when a step produces a non-finite coordinate; usually a symptom
/// of an invalid Lipschitz constant or badly scaled data.
class NonFiniteIterate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smooth part of min f(x) s.t. x in C.  The projector maps onto C in
/// place and must be idempotent.
struct SmoothProblem {
  std::function<Vector(const Vector&)> gradient;
  double lipschitz = 1.0;
  double strong_convexity = 0.0;  // mu; 0 selects the convex variant
  std::function<void(Vector&)> projector;
};

struct State {
  Vector x;  // main iterate x_k
  Vector y;  // auxiliary iterate y_k
  double t = 1.0;
  long k = 0;
  double last_step_norm = 0.0;            // ||x_k - x_{k-1}||
  double last_projected_step_norm = 0.0;  // ||x_k - y_{k-1}||
};

State make_state(Vector x0);

/// x+ = proj(y - grad(y)/L), t+ = (1 + sqrt(1 + 4 t^2))/2,
/// y+ = x+ + ((t - 1)/t+) (x+ - x).
void step_convex(State& s, const SmoothProblem& prob);

/// Constant-momentum variant: y+ = x+ + beta (x+ - x) with
/// beta = (sqrt(kappa) - 1)/(sqrt(kappa) + 1), kappa = L/mu.
void step_strongly_convex(State& s, const SmoothProblem& prob);

double strongly_convex_momentum(double kappa);

enum class StopReason { EarlyStopped, ToleranceReached, MaxIterations };
enum class Signal { Continue, StopEarly, StopTolerance };

using Observer = std::function<Signal(const State&)>;
using TraceFn = std::function<double(const State&)>;

struct SolveReport {
  long iterations = 0;
  StopReason stop_reason = StopReason::MaxIterations;
  std::vector<double> trace;  // one scalar per iteration when a TraceFn is given
};

struct SolveResult {
  State state;
  SolveReport report;
};

/// Runs steps until the observer signals a stop or max_iter is reached.
/// The observer sees the state exactly once per completed iteration.
/// The variant is chosen by prob.strong_convexity.
SolveResult solve(const SmoothProblem& prob, Vector x0, long max_iter, const Observer& observer,
                  const TraceFn& trace = {});

struct LinearOperator {
  Index rows = 0;
  Index cols = 0;
  std::function<Vector(const Vector&)> apply;    // A x
  std::function<Vector(const Vector&)> apply_t;  // A' y
};

/// Largest singular value via power iteration on A'A from a fixed seeded
/// start vector.  The Rayleigh estimate converges from below.
double spectral_norm(const LinearOperator& op, double tol = 1e-6, long max_iter = 100000);

}  // namespace fistasep::fista
