#pragma once

// Online-to-confidence-set conversion for GLMs.
//
// Given an online learner with regret bound B_t on the losses l(x_s^T theta, y_s),
// the ridge estimate on the learner's own predictions z_s = x_s^T theta_s,
//
//     theta_hat_t = Vbar_t^{-1} X_t^T z_t,    Vbar_t = lambda I + X_t^T X_t,
//
// is the centre of an ellipsoid of squared radius
//
//     beta_t = alpha(B_t) + lambda S^2 - (||z_t||^2 - theta_hat_t^T X_t^T z_t)
//
// that contains theta* for all t with probability 1 - delta. Only Vbar, its
// inverse, b = X^T z and ||z||^2 are stored.

#include "linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>

namespace glb {

struct Ellipsoid {
    Vec center;
    Mat shape;      // Vbar
    Mat shape_inv;  // Vbar^{-1}
    double radius_sq = 0.0;

    int dim() const { return static_cast<int>(center.size()); }

    double distance_sq(const Vec& theta) const
    {
        const Vec diff = theta - center;
        return diff.dot(shape * diff);
    }

    bool contains(const Vec& theta) const { return distance_sq(theta) <= radius_sq; }
};

/// alpha(B) = 1 + 4B/kappa + (8R^2/kappa^2) log((2/delta) sqrt(1 + 2B/kappa + 4R^4/(kappa^4 delta^2)))
inline double alpha_of_B(double B, double R, double kappa, double delta)
{
    const double k2 = kappa * kappa;
    const double inner = 1.0 + 2.0 * B / kappa + 4.0 * std::pow(R, 4) / (k2 * k2 * delta * delta);
    return 1.0 + 4.0 * B / kappa + 8.0 * R * R / k2 * std::log(2.0 / delta * std::sqrt(inner));
}

struct ConfParams {
    double lambda = 1.0;
    double S = 1.0;
    double R = 0.5;
    double kappa = 0.25;
    double delta = 0.1;
};

namespace detail {
inline std::atomic<bool>& beta_clamp_warned()
{
    static std::atomic<bool> flag{false};
    return flag;
}
}  // namespace detail

class ConfState {
public:
    static constexpr std::int64_t kRefactorEvery = 512;
    static constexpr double kMinBeta = 1e-12;

    ConfState(int d, const ConfParams& p) : p_(p)
    {
        if (d < 1) throw std::invalid_argument("confidence: d must be >= 1");
        if (!(p.lambda > 0.0)) throw std::invalid_argument("confidence: lambda must be positive");
        if (!(p.S > 0.0)) throw std::invalid_argument("confidence: S must be positive");
        if (!(p.kappa > 0.0)) throw std::invalid_argument("confidence: kappa must be positive");
        if (!(p.delta > 0.0 && p.delta < 1.0)) {
            throw std::invalid_argument("confidence: delta must be in (0,1)");
        }
        Vbar_ = p.lambda * Mat::Identity(d, d);
        Vbar_inv_ = (1.0 / p.lambda) * Mat::Identity(d, d);
        b_ = Vec::Zero(d);
        theta_hat_ = Vec::Zero(d);
    }

    const ConfParams& params() const { return p_; }
    int dim() const { return static_cast<int>(b_.size()); }
    std::int64_t t() const { return t_; }
    const Mat& Vbar() const { return Vbar_; }
    const Mat& Vbar_inv() const { return Vbar_inv_; }
    const Vec& b() const { return b_; }
    const Vec& theta_hat() const { return theta_hat_; }
    double z_sq_sum() const { return z_sq_sum_; }
    std::int64_t clamp_count() const { return clamps_; }

    void update(const Vec& x, double z)
    {
        if (x.size() != b_.size()) throw std::invalid_argument("confidence: dimension mismatch");
        if (x.norm() > 1.0 + 1e-9) throw std::invalid_argument("confidence: arm norm exceeds 1");
        if (std::abs(z) > p_.S + 1e-9) {
            throw std::invalid_argument("confidence: |z| exceeds S; learner left the ball");
        }
        Vbar_.noalias() += x * x.transpose();
        ++t_;
        if (t_ % kRefactorEvery == 0) {
            Vbar_inv_ = linalg::spd_inverse(Vbar_);
        } else {
            linalg::sherman_morrison_add(Vbar_inv_, x);
        }
        b_ += z * x;
        z_sq_sum_ += z * z;
        theta_hat_.noalias() = Vbar_inv_ * b_;
    }

    /// ||z||^2 - theta_hat^T X^T z, which equals lambda ||theta_hat||^2 + ||z - X theta_hat||^2.
    double residual() const { return z_sq_sum_ - theta_hat_.dot(b_); }

    double beta(double B)
    {
        const double raw = alpha_of_B(B, p_.R, p_.kappa, p_.delta) + p_.lambda * p_.S * p_.S - residual();
        if (raw >= kMinBeta) {
            return raw;
        }
        ++clamps_;
        if (!detail::beta_clamp_warned().exchange(true)) {
            std::cerr << "warning: confidence radius " << raw << " clamped to " << kMinBeta << "\n";
        }
        return kMinBeta;
    }

    Ellipsoid ellipsoid(double B) { return with_radius(beta(B)); }

    Ellipsoid with_radius(double radius_sq) const
    {
        return {theta_hat_, Vbar_, Vbar_inv_, radius_sq};
    }

    std::size_t footprint() const
    {
        return static_cast<std::size_t>(Vbar_.size() + Vbar_inv_.size() + b_.size() + theta_hat_.size()) + 2;
    }

private:
    ConfParams p_;
    Mat Vbar_;
    Mat Vbar_inv_;
    Vec b_;
    Vec theta_hat_;
    double z_sq_sum_ = 0.0;
    std::int64_t t_ = 0;
    std::int64_t clamps_ = 0;
};

inline void conf_update(ConfState& s, const Vec& x, double z) { s.update(x, z); }
inline double beta_t(ConfState& s, double B) { return s.beta(B); }
inline Ellipsoid conf_ellipsoid(ConfState& s, double B) { return s.ellipsoid(B); }

/// Tighter confidence set specific to the online Newton learner.
///
/// Uses the next prediction theta_{t+1} through z'_s = x_s^T theta_{t+1} and
/// the averaged responses zbar = (z + 2 z') / 3. Everything needed is a
/// function of X^T X, X^T z, ||z||^2 and theta_{t+1}, so storage stays O(d^2).
class TighterConfState {
public:
    TighterConfState(int d, double eps, const ConfParams& p) : eps_(eps), p_(p)
    {
        if (!(eps > 0.0)) throw std::invalid_argument("tighter confidence: eps must be positive");
        XtX_ = Mat::Zero(d, d);
        W_inv_ = (3.0 / (2.0 * eps)) * Mat::Identity(d, d);
        Xtz_ = Vec::Zero(d);
    }

    void update(const Vec& x, double z)
    {
        XtX_.noalias() += x * x.transpose();
        linalg::sherman_morrison_add(W_inv_, x);
        if (++t_ % ConfState::kRefactorEvery == 0) {
            W_inv_ = linalg::spd_inverse(W());
        }
        Xtz_ += z * x;
        z_sq_ += z * z;
    }

    Mat W() const
    {
        const auto d = XtX_.rows();
        return XtX_ + (2.0 * eps_ / 3.0) * Mat::Identity(d, d);
    }

    /// Ellipsoid from explicit statistics of z': X^T z', ||z'||^2 and z^T z'.
    Ellipsoid ellipsoid_from_stats(const Vec& Xt_zp, double zp_sq, double z_zp, double B) const
    {
        const Vec Xt_zbar = (Xtz_ + 2.0 * Xt_zp) / 3.0;
        const double zbar_sq = (z_sq_ + 4.0 * z_zp + 4.0 * zp_sq) / 9.0;
        const double diff_sq = z_sq_ - 2.0 * z_zp + zp_sq;
        const Vec center = W_inv_ * Xt_zbar;

        const double k = p_.kappa;
        const double R = p_.R;
        const double d = p_.delta;
        const double log_term =
            std::log(2.0 / d * std::sqrt(1.0 + 2.0 * B / k + 4.0 * std::pow(R, 4) / (std::pow(k, 4) * d * d)));
        double radius = -zbar_sq + Xt_zbar.dot(center) + 4.0 * eps_ / 3.0 * p_.S * p_.S -
                        2.0 / 9.0 * diff_sq + 1.0 / 3.0 + 4.0 / (3.0 * k) * B +
                        8.0 * R * R / (3.0 * k * k) * log_term;
        radius = std::max(radius, ConfState::kMinBeta);
        return {center, W(), W_inv_, radius};
    }

    Ellipsoid ellipsoid(const Vec& theta_next, double B) const
    {
        const Vec Xt_zp = XtX_ * theta_next;
        return ellipsoid_from_stats(Xt_zp, theta_next.dot(Xt_zp), Xtz_.dot(theta_next), B);
    }

    const Vec& Xtz() const { return Xtz_; }
    double z_sq_sum() const { return z_sq_; }

    std::size_t footprint() const
    {
        return static_cast<std::size_t>(XtX_.size() + W_inv_.size() + Xtz_.size()) + 2;
    }

private:
    double eps_;
    ConfParams p_;
    Mat XtX_;
    Mat W_inv_;
    Vec Xtz_;
    double z_sq_ = 0.0;
    std::int64_t t_ = 0;
};

/// Pushes (x, z) into the tighter set and returns C^{ONS+} at theta_next.
inline Ellipsoid tighter_conf_update(TighterConfState& s, const Vec& x, double z,
                                     const Vec& theta_next, double B)
{
    s.update(x, z);
    return s.ellipsoid(theta_next, B);
}

}  // namespace glb
