#pragma once

#include <Eigen/Dense>

namespace surveyps {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Reciprocal 2-norm condition number of a symmetric matrix after unit-diagonal
// equilibration, so that column scale alone never flags a design as singular.
double equilibrated_rcond(const Matrix& sym);

} // namespace surveyps
