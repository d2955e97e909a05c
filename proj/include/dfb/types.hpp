#pragma once

#include <Eigen/Dense>

namespace dfb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Index;

}  // namespace dfb
