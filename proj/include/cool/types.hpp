#pragma once

#include <complex>
#include <Eigen/Core>

namespace cool {

using Complex = std::complex<double>;

template <class Scalar_, int Rows_ = Eigen::Dynamic, int Cols_ = Eigen::Dynamic>
using matrix_type = Eigen::Matrix<Scalar_, Rows_, Cols_>;

template <class Scalar_, int Rows_ = Eigen::Dynamic>
using vector_type = Eigen::Matrix<Scalar_, Rows_, 1>;

using CMatrix = matrix_type<Complex>;
using CVector = vector_type<Complex>;
using RMatrix = matrix_type<double>;
using RVector = vector_type<double>;

} // namespace cool
