#include "fistasep/pdhg.hpp"

#include <stdexcept>

#include "fistasep/projections.hpp"

namespace fistasep::pdhg {

State make_state(const esp::Instance& inst) {
  State st;
  st.x = Vector::Zero(inst.cols());
  st.y = Vector::Zero(inst.rows());
  st.sigma = 0.9 / (inst.operator_norm() * inst.operator_norm());
  st.tau = 1.0;
  return st;
}

void step(State& st, const esp::Instance& inst) {
  Vector xn = st.x - st.sigma * inst.apply_t(st.y);
  proj::project_product_cone_inplace(xn, inst.dim() + 1);
  st.y += st.tau * (inst.apply(2.0 * xn - st.x) - inst.rhs());
  st.x = std::move(xn);
}

Displacement displacement_estimate(const esp::Instance& inst, long iters) {
  if (iters < 1) throw std::invalid_argument("displacement_estimate: iters must be >= 1");
  State st = make_state(inst);
  Vector px, py;
  for (long k = 0; k < iters; ++k) {
    px = st.x;
    py = st.y;
    step(st, inst);
  }
  // oriented as z_k - z_{k+1}, which makes the dual block converge to
  // b - A x_bar (so s* + t* = ||v_D||^2 comes out nonnegative)
  return Displacement{px - st.x, py - st.y};
}

}  // namespace fistasep::pdhg
