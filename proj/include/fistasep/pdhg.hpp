#pragma once

#include "fistasep/esp.hpp"
#include "fistasep/types.hpp"

namespace fistasep::pdhg {

/// Reference primal-dual hybrid gradient iterator for the ESP pair.
/// Test and diagnostic surface only; FISTA remains the solve path.
struct State {
  Vector x;  // primal block, length (j+l)(d+1)
  Vector y;  // dual block, length d+2
  double sigma = 0.0;
  double tau = 1.0;
};

/// Zero start with sigma = 0.9/||A||^2, tau = 1.
State make_state(const esp::Instance& inst);

/// x+ = proj_C(x - sigma A'y), y+ = y + tau A(2x+ - x) - tau b.
void step(State& st, const esp::Instance& inst);

struct Displacement {
  Vector v_r;  // primal block of the final iterate difference
  Vector v_d;  // dual block; encodes (s*, t*, w*)
};

/// Runs iters steps from zero and returns the last iterate difference.
Displacement displacement_estimate(const esp::Instance& inst, long iters);

}  // namespace fistasep::pdhg
