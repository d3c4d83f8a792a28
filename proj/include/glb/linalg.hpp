#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace glb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace linalg {

// Rank-one update of an inverse: (M + x x^T)^{-1} from M^{-1}.
inline void sherman_morrison_add(Mat& inv, const Vec& x)
{
    const Vec u = inv * x;
    const double denom = 1.0 + x.dot(u);
    inv.noalias() -= (u * u.transpose()) / denom;
    // keep exact symmetry; the rank-one update drifts otherwise
    inv = 0.5 * (inv + inv.transpose()).eval();
}

inline Mat spd_inverse(const Mat& m)
{
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("matrix is not symmetric positive definite");
    }
    Mat inv = llt.solve(Mat::Identity(m.rows(), m.cols()));
    return 0.5 * (inv + inv.transpose());
}

inline void require_spd(const Mat& m)
{
    if (m.rows() != m.cols()) {
        throw std::domain_error("matrix is not square");
    }
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("matrix is not symmetric positive definite");
    }
}

/// M^{-1/2} via symmetric eigendecomposition.
inline Mat inverse_sqrt(const Mat& m)
{
    require_spd(m);
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    const Vec s = es.eigenvalues().array().rsqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

inline double min_eigenvalue(const Mat& m)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// ||x||_M^2 = x^T M x
inline double sq_norm_in(const Vec& x, const Mat& m) { return x.dot(m * x); }

}  // namespace linalg
}  // namespace glb
