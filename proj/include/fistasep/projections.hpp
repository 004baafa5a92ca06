#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "fistasep/types.hpp"

namespace fistasep::proj {

/// Thrown when a knapsack instance has no feasible point, i.e.
/// sum(lower) > target or sum(upper) < target.
class InfeasibleBox : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point in R^{1+d} split as (head, tail).  Cone membership is
/// ||tail|| <= head.
struct SocPoint {
  double head = 0.0;
  Vector tail;

  bool in_cone() const { return tail.norm() <= head; }
};

/// Euclidean projection onto the second-order cone.  Total function:
/// points in the polar cone (||tail|| <= -head) map to the origin,
/// points in the cone are fixed, everything else lands on the boundary.
SocPoint project_soc(const SocPoint& p);

struct ProductConePoint {
  std::vector<SocPoint> blocks;
};

/// Blockwise projection onto a product of second-order cones.
ProductConePoint project_product_cone(const ProductConePoint& p);

/// In-place flat-vector variant: x is a concatenation of blocks of size
/// block_dim, each laid out head-first.
void project_product_cone_inplace(Eigen::Ref<Vector> x, Index block_dim);

/// min (1/2)||r - q||^2  s.t.  e'r = target, lower <= r <= upper.
struct KnapsackProblem {
  Vector q;
  Vector lower;
  Vector upper;
  double target = 0.0;
};

struct KnapsackSolution {
  Vector r;
  double multiplier;  // r == clamp(q - multiplier*e, lower, upper)
};

enum class KnapsackMethod {
  SortBreakpoints,  // O(n log n), default
  MedianSearch,     // expected O(n) bracket narrowing
};

/// Exact solution via breakpoint search on the piecewise-linear map
/// lambda -> e'clamp(q - lambda e, lower, upper).  When a flat segment of
/// that map meets the target, the returned multiplier is the midpoint of
/// the optimal-lambda interval intersected with the breakpoint range
/// (r itself is unique either way).
KnapsackSolution project_knapsack(const KnapsackProblem& kp,
                                  KnapsackMethod method = KnapsackMethod::SortBreakpoints);

/// Projection onto Omega = {(u, v) : e'u = e'v, 0 <= u <= gamma e,
/// 0 <= v <= gamma e} via the change of variables r := (u, -v).
std::pair<Vector, Vector> project_omega(const Vector& u, const Vector& v, double gamma,
                                        KnapsackMethod method = KnapsackMethod::SortBreakpoints);

/// Flat in-place variant used in solver loops: z = (u, v), u = z[0:j].
void project_omega_inplace(Vector& z, Index j, double gamma,
                           KnapsackMethod method = KnapsackMethod::SortBreakpoints);

}  // namespace fistasep::proj
