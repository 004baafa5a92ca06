#pragma once

#include <Eigen/Dense>

namespace fistasep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace fistasep
