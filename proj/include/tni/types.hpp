#pragma once

#include <complex>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace tni {

using Complex = std::complex<double>;

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec2 = Eigen::Vector2d;
using CVec2 = Eigen::Vector2cd;

using SpMat = Eigen::SparseMatrix<double>;
using CSpMat = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<double>;
using CTriplet = Eigen::Triplet<Complex>;

}  // namespace tni
