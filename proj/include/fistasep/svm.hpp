#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fistasep/fista.hpp"
#include "fistasep/types.hpp"

namespace fistasep::svm {

class BracketFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDataModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Labeled point sets: rows of c_points carry class +1, rows of d_points
/// class -1.  radius is the exact max row norm over both.
struct Dataset {
  Matrix c_points;
  Matrix d_points;
  double radius = 0.0;

  Index j() const { return c_points.rows(); }
  Index l() const { return d_points.rows(); }
  Index n() const { return j() + l(); }
  Index dim() const { return c_points.cols(); }
};

Dataset make_dataset(Matrix c_points, Matrix d_points);

/// Scales features by 1/radius so the preprocessed radius is 1; returns the
/// scaled dataset and the factor.
std::pair<Dataset, double> scale_to_unit_radius(const Dataset& ds);

/// gamma = 64/n, mu = n/128 (so 1 - mu*gamma = 1/2 exactly),
/// L = mu + n R^2, kappa = L/mu = 1 + 128 R^2.
struct Hyperparams {
  long n = 0;
  double gamma = 0.0;
  double mu = 0.0;
  double lipschitz = 0.0;
  double kappa = 0.0;

  static Hyperparams for_size_radius(long n, double radius);
  static Hyperparams for_dataset(const Dataset& ds);
};

struct DualPoint {
  Vector u;
  Vector v;
};

DualPoint split_dual(const Vector& z, Index j);
Vector join_dual(const DualPoint& p);

/// Ascent gradient of the perturbed dual objective g at z = (u, v):
/// (-C(C'u - D'v) + e - mu u,  D(C'u - D'v) + e - mu v).
Vector dual_gradient(const Dataset& ds, const Hyperparams& hp, const Vector& z);

double dual_objective(const Dataset& ds, const Hyperparams& hp, const Vector& z);

/// Certified bound (2L/mu) ||p - p_plus|| on the distance from p_plus to the
/// unique maximizer, valid when p_plus is the projected-gradient image of p
/// with step 1/L.
double proximity_bound(const Hyperparams& hp, double projected_step_norm);
double proximity_bound(const Dataset& ds, const Hyperparams& hp, const Vector& p,
                       const Vector& p_plus);

/// w = C'u - D'v.
Vector extract_w(const Dataset& ds, const Vector& z);

/// Smoothed hinge loss: gamma(1 - theta) - mu gamma^2/2 below 1 - mu*gamma,
/// (1 - theta)^2/(2 mu) on [1 - mu*gamma, 1], zero above 1.
double psi(double theta, const Hyperparams& hp);
double psi_prime(double theta, const Hyperparams& hp);

/// (1/2)||w||^2 + sum_i psi(c_i'w + t) + sum_i psi(-d_i'w - t).
double primal_objective(const Dataset& ds, const Hyperparams& hp, const Vector& w, double t);

/// Minimizes primal_objective over t by bisection on the monotone derivative
/// h(t) = sum psi'(c_i'w + t) - sum psi'(-d_i'w - t).  When h vanishes on an
/// interval, two auxiliary bisections locate its endpoints and the midpoint
/// is returned.
double intercept_bisection(const Dataset& ds, const Hyperparams& hp, const Vector& w, double tol);

/// Grows the set T of indices certified properly classified and stops the
/// run after two consecutive iterations without p improving by delta_min.
class ClassificationTracker {
 public:
  ClassificationTracker(Index n, double delta_min);

  /// Adds every i with gamma - u_plus[i] > bound (same for v) and returns
  /// the stall signal.
  bool update(const Hyperparams& hp, const Vector& u_plus, const Vector& v_plus, double bound);

  double fraction() const;
  double best_fraction() const { return p_best_; }
  int stale() const { return stale_; }
  bool contains(Index i) const { return in_set_[static_cast<size_t>(i)] != 0; }
  long size() const { return count_; }
  Index universe() const { return static_cast<Index>(in_set_.size()); }

 private:
  std::vector<std::uint8_t> in_set_;  // c indices first, then d indices
  long count_ = 0;
  double p_best_ = 0.0;
  int stale_ = 0;
  double delta_min_;
};

struct Model {
  Vector w;
  double t = 0.0;
  long found_at_iteration = 0;
};

struct TraceRow {
  long iteration;
  double projected_step_norm;
  double delta;
  double p;
  double g_value;
};

struct TrainResult {
  Model model;
  fista::SolveReport report;
  ClassificationTracker tracker;
  Vector dual;  // final (u, v)
  std::vector<TraceRow> trace;
};

/// Strongly convex FISTA on the perturbed dual from (u, v) = 0 with
/// Omega-projection, stall-based stopping, then hyperplane extraction with
/// intercept bisection.  Requires radius <= 2.
TrainResult train(const Dataset& ds, double delta_min, long max_iter, bool record_trace = false);

/// High-accuracy dual solve: runs until the projected step norm drops
/// below step_tol.
Vector reference_dual(const Dataset& ds, double step_tol = 1e-12, long max_iter = 1000000);

/// sign(w'x + t) with sign(0) mapped to +1.
Eigen::VectorXi predict(const Model& model, const Matrix& points);

double accuracy(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth);

/// Constants of the two-ball data model with sigma := min(sigma1, sigma2).
/// Delta0 is reported per unit gamma: the classification threshold is
/// Delta0 * gamma.  Delta follows the early-stopping bound and needs n;
/// it is omitted when no admissible Kbar in [1/2, 1) exists and none is
/// supplied.
struct TheoryConstants {
  double delta = 0.0;
  double xi = 0.0;
  double K = 0.0;
  double Delta0 = 0.0;
  bool assumption_ok = false;
  bool kbar_feasible = false;
  double kbar_lower = 0.0;  // infimum of admissible Kbar values
  std::optional<double> kbar_used;
  std::optional<double> Delta;
};

TheoryConstants theory_constants(double sigma1, double sigma2, double rho, double nu, long n,
                                 std::optional<double> kbar = std::nullopt);

}  // namespace fistasep::svm
