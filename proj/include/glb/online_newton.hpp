#pragma once

// Online Newton step specialised to GLM losses.
//
// Each round the learner outputs theta_t, observes (x_t, y_t), and takes a
// second-order step in the metric A_t = eps I + sum x_s x_s^T followed by a
// projection back onto the Euclidean ball of radius S in the A_t-norm. The
// step size is 1/kappa (strong convexity of m on [-S, S]) rather than the
// exp-concavity constant of the original algorithm.

#include "glm.hpp"
#include "linalg.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace glb {

/// Exact minimiser of (theta - theta_prime)^T A (theta - theta_prime) over
/// the ball ||theta||_2 <= S.
///
/// Outside the ball the solution is theta(nu) = (A + nu I)^{-1} A theta_prime
/// with nu > 0 the root of ||theta(nu)|| = S. In the eigenbasis of A the
/// norm is sum_i (l_i w_i / (l_i + nu))^2, strictly decreasing in nu, so the
/// root is bracketed by doubling and refined by bisection.
inline Vec ball_projection_in_A_norm(const Vec& theta_prime, const Mat& A, double S)
{
    if (!(S > 0.0)) {
        throw std::invalid_argument("ball_projection_in_A_norm: S must be positive");
    }
    linalg::require_spd(A);
    if (theta_prime.norm() <= S) {
        return theta_prime;
    }

    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    const Vec& lam = es.eigenvalues();
    const Vec w = es.eigenvectors().transpose() * theta_prime;

    auto coords = [&](double nu) -> Vec {
        return (lam.array() * w.array() / (lam.array() + nu)).matrix();
    };
    auto norm_at = [&](double nu) { return coords(nu).norm(); };

    double lo = 0.0;
    double hi = lam.maxCoeff();
    while (norm_at(hi) > S) {
        lo = hi;
        hi *= 2.0;
    }
    // invariant: norm(lo) > S >= norm(hi)
    for (int it = 0; it < 200; ++it) {
        if (S - norm_at(hi) <= 4e-16 * S) {
            break;
        }
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (norm_at(mid) > S) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return es.eigenvectors() * coords(hi);
}

class OnsState {
public:
    // Dense re-inversion cadence for the Sherman-Morrison inverse.
    static constexpr std::int64_t kRefactorEvery = 512;

    OnsState(int d, double eps, double S, double kappa)
        : eps_(eps), S_(S), kappa_(kappa)
    {
        if (d < 1) throw std::invalid_argument("ons: d must be >= 1");
        if (!(eps > 0.0)) throw std::invalid_argument("ons: eps must be positive");
        if (!(S > 0.0)) throw std::invalid_argument("ons: S must be positive");
        if (!(kappa > 0.0)) throw std::invalid_argument("ons: kappa must be positive");
        A_ = eps * Mat::Identity(d, d);
        A_inv_ = (1.0 / eps) * Mat::Identity(d, d);
        theta_ = Vec::Zero(d);
    }

    int dim() const { return static_cast<int>(theta_.size()); }
    double eps() const { return eps_; }
    double S() const { return S_; }
    double kappa() const { return kappa_; }
    std::int64_t t() const { return t_; }
    const Mat& A() const { return A_; }
    const Mat& A_inv() const { return A_inv_; }

    /// Sum of g_s^2 ||x_s||^2_{A_s^{-1}} so far.
    double accumulated() const { return B_accum_; }

    const Vec& predict() const { return theta_; }

    /// Feeds the loss l(x^T theta, y); returns g = l'(x^T theta_t, y).
    double update(const Vec& x, double y, const GlmFamily& family)
    {
        if (x.size() != theta_.size()) {
            throw std::invalid_argument("ons: dimension mismatch");
        }
        if (x.norm() > 1.0 + 1e-9) {
            throw std::invalid_argument("ons: arm norm exceeds 1");
        }
        if (!std::isfinite(y)) {
            throw std::invalid_argument("ons: non-finite reward");
        }
        const double g = family.loss_grad(x.dot(theta_), y);

        A_.noalias() += x * x.transpose();
        ++t_;
        if (t_ % kRefactorEvery == 0) {
            A_inv_ = linalg::spd_inverse(A_);
        } else {
            linalg::sherman_morrison_add(A_inv_, x);
        }

        const Vec Ainv_x = A_inv_ * x;
        B_accum_ += g * g * x.dot(Ainv_x);

        const Vec theta_prime = theta_ - (g / kappa_) * Ainv_x;
        theta_ = ball_projection_in_A_norm(theta_prime, A_, S_);
        return g;
    }

    /// (1/(2 kappa)) sum g_s^2 ||x_s||^2_{A_s^{-1}} + 2 kappa S^2 eps.
    double regret_budget() const
    {
        return B_accum_ / (2.0 * kappa_) + 2.0 * kappa_ * S_ * S_ * eps_;
    }

    /// Number of doubles of live state; independent of t.
    std::size_t footprint() const
    {
        return static_cast<std::size_t>(A_.size() + A_inv_.size() + theta_.size()) + 5;
    }

private:
    double eps_;
    double S_;
    double kappa_;
    Mat A_;
    Mat A_inv_;
    Vec theta_;
    double B_accum_ = 0.0;
    std::int64_t t_ = 0;
};

inline OnsState ons_init(int d, double eps, double S, double kappa) { return {d, eps, S, kappa}; }
inline const Vec& ons_predict(const OnsState& s) { return s.predict(); }
inline double ons_update(OnsState& s, const Vec& x, double y, const GlmFamily& f) { return s.update(x, y, f); }
inline double ons_regret_budget(const OnsState& s) { return s.regret_budget(); }

}  // namespace glb
