#pragma once

#include <Eigen/Core>

namespace spgls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;

inline bool all_finite(ConstVectorRef v) { return v.allFinite(); }

}  // namespace spgls
