#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fistasep/fista.hpp"
#include "fistasep/types.hpp"

namespace fistasep::esp {

class DegenerateInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label { ClassC, ClassD };

/// {z : ||shape^{-1}(z - center)|| <= 1}.  The shape matrix must be
/// nonsingular; construction rejects smallest/largest singular value
/// ratios below 1e-12.
struct Ellipsoid {
  Vector center;
  Matrix shape;
  Label label = Label::ClassC;
};

Ellipsoid make_ellipsoid(Vector center, Matrix shape, Label label);

/// Largest singular value; diagonal matrices take the cheap path.
double spectral_norm_dense(const Matrix& m);

/// Normalized problem data plus the assembled dual equality operator
/// A in R^{(d+2) x (j+l)(d+1)} with rhs b = (1, 1, 0, ..., 0).  The
/// operator is applied blockwise; the dense matrix is only materialized
/// on request.  Immutable after construction and shareable across threads.
class Instance {
 public:
  const std::vector<Ellipsoid>& class_c() const { return cs_; }
  const std::vector<Ellipsoid>& class_d() const { return ds_; }
  int dim() const { return dim_; }
  Index c_count() const { return static_cast<Index>(cs_.size()); }
  Index d_count() const { return static_cast<Index>(ds_.size()); }
  Index cols() const { return (c_count() + d_count()) * (dim_ + 1); }
  Index rows() const { return dim_ + 2; }

  double normalization_factor() const { return factor_; }
  double operator_norm() const { return op_norm_; }  // power-iteration estimate of ||A||
  double lipschitz() const { return lipschitz_; }    // op_norm^2 inflated by 1%
  const Vector& rhs() const { return rhs_; }

  Vector apply(const Vector& x) const;    // A x
  Vector apply_t(const Vector& r) const;  // A' r

  friend Instance normalize_instance(std::vector<Ellipsoid> ellipsoids);

 private:
  Instance() = default;
  std::vector<Ellipsoid> cs_, ds_;
  std::vector<char> c_diag_, d_diag_;
  int dim_ = 0;
  double factor_ = 1.0;
  double op_norm_ = 0.0;
  double lipschitz_ = 0.0;
  Vector rhs_;
};

/// Divides all centers and shape matrices by the common factor
/// max_i max(||center_i||, ||shape_i||_2), recording the factor.
/// Requires at least one ellipsoid per class.
Instance normalize_instance(std::vector<Ellipsoid> ellipsoids);

/// Dense (A, b) for inspection and small-instance tests.
std::pair<Matrix, Vector> assemble_operator(const Instance& inst);

/// v = b - A x split as (s, t, w).
struct Residual {
  double s = 0.0;
  double t = 0.0;
  Vector w;
  double norm = 0.0;
};

Residual residual(const Instance& inst, const Vector& x);

/// Candidate hyperplane {z : w'z = m} with m = (-s + t)/2.
std::pair<Vector, double> candidate_separator(const Residual& r);

enum class SeparationCheck { SeparatesCBelow, SeparatesCAbove, NotSeparating };

/// Strict containment test for both orientations, evaluated with exact
/// floating comparisons (no tolerance).  w = 0 never separates.
SeparationCheck verify_separator(const Instance& inst, const Vector& w, double m);

struct SeparatorModel {
  Vector w;
  double offset = 0.0;
  long found_at_iteration = 0;
  SeparationCheck orientation = SeparationCheck::NotSeparating;
};

enum class StopMode { EarlyStop, Tolerance };

struct TraceRow {
  long iteration;
  double f_value;
  double residual_norm;
  int separator_found;
  double elapsed_seconds;
};

struct SolveOutcome {
  std::optional<SeparatorModel> separator;
  fista::SolveReport report;
  Residual final_residual;
  Vector final_x;
  std::vector<TraceRow> trace;  // populated when record_trace is set
};

/// EarlyStop: stop at the first iterate whose candidate separator verifies
/// in either orientation.  Tolerance: stop when the auxiliary-sequence
/// projected step norm ||x_{k+1} - y_k|| drops to tol, then test the final
/// residual's candidate.
SolveOutcome solve_esp(const Instance& inst, StopMode mode, double tol, long max_iter,
                       bool record_trace = false);

struct Reference {
  Vector x_bar;
  Residual v_d;
  double f_bar = 0.0;
  long iterations = 0;
};

/// Long high-accuracy run used by diagnostics and tests: 1e5 iterations or
/// projected step below 1e-10, whichever comes first.
Reference reference_solve(const Instance& inst, long max_iter = 100000, double tol = 1e-10);

/// Upper-bound estimate 3||v|| of the smallest center perturbation that
/// destroys separability.  Meaningful when v approximates the limiting
/// residual v_D.
double delta_estimate(const Residual& r);

/// Iteration diagnostic 54*sqrt(2)*||A||*||x0 - x_bar|| / delta^2 - 1.
double iteration_bound(double op_norm, double x0_distance, double delta);

}  // namespace fistasep::esp
