#pragma once

#include <Eigen/Dense>

namespace lvm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// (S + S') / 2
inline Mat symmetrize(const Mat& s) { return 0.5 * (s + s.transpose()); }

/// Log-sum-exp of a vector; -inf for an empty or all -inf input.
double log_sum_exp(const Vec& a);

}  // namespace lvm
