#pragma once

#include <Eigen/Core>

#include "catgen/tensor.hpp"

namespace catgen::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using VectorView = Eigen::Map<Eigen::VectorXd>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

inline MatrixView mat(Tensor& t) {
  return MatrixView(t.data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
}
inline ConstMatrixView mat(const Tensor& t) {
  return ConstMatrixView(t.data(), static_cast<Eigen::Index>(t.rows()),
                         static_cast<Eigen::Index>(t.cols()));
}
inline VectorView vec(Tensor& t) {
  return VectorView(t.data(), static_cast<Eigen::Index>(t.size()));
}
inline ConstVectorView vec(const Tensor& t) {
  return ConstVectorView(t.data(), static_cast<Eigen::Index>(t.size()));
}

}  // namespace catgen::detail
