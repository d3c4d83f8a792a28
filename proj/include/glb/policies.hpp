#pragma once

// Arm-selection rules over a finite arm set.
//
//   GLOC     argmax  x^T c + sqrt(beta) ||x||_{V^{-1}}
//   GLOC-TS  argmax  x^T theta_dot,  theta_dot = c + sqrt(beta) V^{-1/2} xi
//   QGLOC    argmax  x^T c + beta^{1/4} / (4 c0 mbar) ||x||^2_{V^{-1}}
//   UCB-GLM  argmax  x^T theta_mle + alpha ||x||_{V_t^{-1}}
//
// QGLOC's objective is an inner product <q, phi(x)> with phi(x) = [x; vec(x x^T)],
// which is what makes it searchable by MIPS hashing. All argmax rules break
// ties towards the lowest arm index.

#include "confidence.hpp"
#include "glm.hpp"
#include "linalg.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace glb {

class ArmSet {
public:
    ArmSet() = default;

    /// One arm per row.
    explicit ArmSet(Mat arms) : arms_(std::move(arms))
    {
        if (arms_.rows() == 0) {
            throw std::invalid_argument("ArmSet: empty arm set");
        }
        const Vec norms = arms_.rowwise().norm();
        if (norms.maxCoeff() > 1.0 + 1e-9) {
            throw std::invalid_argument("ArmSet: every arm must have norm at most 1");
        }
        r_ = norms.minCoeff();
        if (!(r_ > 0.0)) {
            throw std::invalid_argument("ArmSet: zero arm (r must be positive)");
        }
    }

    int size() const { return static_cast<int>(arms_.rows()); }
    int dim() const { return static_cast<int>(arms_.cols()); }
    double r() const { return r_; }
    const Mat& matrix() const { return arms_; }
    Vec arm(int i) const { return arms_.row(i).transpose(); }

private:
    Mat arms_;
    double r_ = 0.0;
};

/// Index of the largest entry; first one on ties.
inline int argmax_first(const Vec& scores)
{
    if (scores.size() == 0) {
        throw std::invalid_argument("argmax over an empty arm set");
    }
    int best = 0;
    for (int i = 1; i < scores.size(); ++i) {
        if (scores(i) > scores(best)) best = i;
    }
    return best;
}

/// ||x_i||^2_M for every row x_i.
inline Vec row_sq_norms(const Mat& X, const Mat& M)
{
    return (X * M).cwiseProduct(X).rowwise().sum();
}

inline Vec gloc_scores(const Ellipsoid& ell, const ArmSet& arms)
{
    const Vec widths = row_sq_norms(arms.matrix(), ell.shape_inv).cwiseMax(0.0).cwiseSqrt();
    return arms.matrix() * ell.center + std::sqrt(std::max(ell.radius_sq, 0.0)) * widths;
}

inline int gloc_select(const Ellipsoid& ell, const ArmSet& arms)
{
    if (ell.radius_sq < 0.0) throw std::invalid_argument("gloc_select: negative radius");
    return argmax_first(gloc_scores(ell, arms));
}

struct TsDraw {
    int index = 0;
    Vec theta_dot;
};

/// GLOC-TS with the perturbation xi supplied by the caller.
inline TsDraw gloc_ts_select(const Ellipsoid& ell, const ArmSet& arms, const Vec& xi)
{
    const Mat root = linalg::inverse_sqrt(ell.shape);
    Vec theta_dot = ell.center + std::sqrt(std::max(ell.radius_sq, 0.0)) * (root * xi);
    const int idx = argmax_first(arms.matrix() * theta_dot);
    return {idx, std::move(theta_dot)};
}

template <class Rng>
Vec standard_normal_vector(int d, Rng& rng)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = n01(rng);
    return v;
}

template <std::uniform_random_bit_generator Rng>
TsDraw gloc_ts_select(const Ellipsoid& ell, const ArmSet& arms, Rng& rng)
{
    return gloc_ts_select(ell, arms, standard_normal_vector(ell.dim(), rng));
}

// ---------------------------------------------------------------------------
// QGLOC

enum class MbarMode { eig, bound, greedy };

inline MbarMode default_mbar_mode(int d) { return d <= 64 ? MbarMode::eig : MbarMode::bound; }

/// r sqrt(lambda_min(Vbar^{-1})).
inline double m_bar_eig(const Mat& Vbar_inv, double r)
{
    return r * std::sqrt(std::max(linalg::min_eigenvalue(Vbar_inv), 0.0));
}

/// Lower bound r / sqrt(t + lambda) on the eigen form.
inline double m_bar_bound(double r, double t, double lambda) { return r / std::sqrt(t + lambda); }

/// ||x_greedy||_{Vbar^{-1}} for x_greedy = argmax x^T theta_hat; does not need r.
inline double m_bar_greedy(const Mat& Vbar_inv, const Vec& theta_hat, const ArmSet& arms)
{
    const Vec g = arms.arm(argmax_first(arms.matrix() * theta_hat));
    return std::sqrt(linalg::sq_norm_in(g, Vbar_inv));
}

/// t is the round being decided (Vbar holds t-1 observations); used by `bound` only.
inline double m_bar(const Ellipsoid& ell, const ArmSet& arms, MbarMode mode, double t, double lambda)
{
    switch (mode) {
    case MbarMode::eig: return m_bar_eig(ell.shape_inv, arms.r());
    case MbarMode::bound: return m_bar_bound(arms.r(), t, lambda);
    case MbarMode::greedy: return m_bar_greedy(ell.shape_inv, ell.center, arms);
    }
    return 0.0;
}

/// c0 = ((L + R) / kappa)^{-1/2}
inline double default_c0(const FamilyConstants& fc) { return 1.0 / std::sqrt((fc.L + fc.R) / fc.kappa); }

inline double qgloc_coef(double beta, double c0, double mbar)
{
    if (!(c0 > 0.0)) throw std::invalid_argument("qgloc: c0 must be positive");
    if (!(mbar > 0.0)) throw std::invalid_argument("qgloc: mbar must be positive");
    return std::pow(std::max(beta, 0.0), 0.25) / (4.0 * c0 * mbar);
}

/// phi(x) = [x; vec(x x^T)] with column-major vec.
inline Vec phi_map(const Vec& x)
{
    const auto d = x.size();
    Vec out(d + d * d);
    out.head(d) = x;
    for (Eigen::Index j = 0; j < d; ++j) {
        out.segment(d + j * d, d) = x * x(j);
    }
    return out;
}

struct QglocQuery {
    Vec q_lin;
    Mat q_quad;

    /// <q_lin, x> + x^T q_quad x, never forming phi(x).
    double structured_dot(const Vec& x) const { return q_lin.dot(x) + x.dot(q_quad * x); }

    Vec as_flat() const
    {
        const auto d = q_lin.size();
        Vec out(d + d * d);
        out.head(d) = q_lin;
        out.tail(d * d) = Eigen::Map<const Vec>(q_quad.data(), d * d);
        return out;
    }
};

inline QglocQuery qgloc_query(const Ellipsoid& ell, double c0, double mbar)
{
    const double coef = qgloc_coef(ell.radius_sq, c0, mbar);
    return {ell.center, coef * ell.shape_inv};
}

inline Vec qgloc_scores(const Ellipsoid& ell, const ArmSet& arms, double c0, double mbar)
{
    const double coef = qgloc_coef(ell.radius_sq, c0, mbar);
    return arms.matrix() * ell.center + coef * row_sq_norms(arms.matrix(), ell.shape_inv);
}

inline int qgloc_select(const Ellipsoid& ell, const ArmSet& arms, double c0, double mbar)
{
    return argmax_first(qgloc_scores(ell, arms, c0, mbar));
}

/// Counts arms where GLOC's score exceeds QGLOC's score plus
/// slack_sign * c0 beta^{3/4} mbar (by more than 1e-9).
inline int sandwich_violations(const Ellipsoid& ell, const ArmSet& arms, double c0, double mbar,
                               double slack_sign = 1.0)
{
    const Vec g = gloc_scores(ell, arms);
    const Vec q = qgloc_scores(ell, arms, c0, mbar);
    const double slack = slack_sign * c0 * std::pow(std::max(ell.radius_sq, 0.0), 0.75) * mbar;
    int bad = 0;
    for (int i = 0; i < g.size(); ++i) {
        if (g(i) > q(i) + slack + 1e-9) ++bad;
    }
    return bad;
}

inline bool gloc_qgloc_sandwich_check(const Ellipsoid& ell, const ArmSet& arms, double c0, double mbar)
{
    return sandwich_violations(ell, arms, c0, mbar) == 0;
}

// ---------------------------------------------------------------------------
// UCB-GLM baseline. Keeps the whole history and refits the MLE every round.

class UcbGlm {
public:
    static constexpr double kRidge = 1e-6;
    static constexpr int kMaxNewton = 100;
    static constexpr double kNormGuard = 1e4;

    UcbGlm(int d, GlmFamily family) : d_(d), family_(family)
    {
        theta_ = Vec::Zero(d);
        V_ = kRidge * Mat::Identity(d, d);
    }

    void add(const Vec& x, double y)
    {
        xs_.insert(xs_.end(), x.data(), x.data() + d_);
        ys_.push_back(y);
        V_.noalias() += x * x.transpose();
        dirty_ = true;
    }

    std::size_t history_size() const { return ys_.size(); }
    const Vec& theta_mle() const { return theta_; }

    /// Damped Newton on sum l(x_s^T theta, y_s) + (kRidge/2)||theta||^2, warm-started.
    const Vec& fit()
    {
        if (!dirty_ || ys_.empty()) return theta_;
        const auto n = static_cast<Eigen::Index>(ys_.size());
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
            xs_.data(), n, d_);
        const Eigen::Map<const Vec> y(ys_.data(), n);

        auto objective = [&](const Vec& th) {
            const Vec z = X * th;
            double f = 0.5 * kRidge * th.squaredNorm();
            for (Eigen::Index s = 0; s < n; ++s) f += family_.loss(z(s), y(s));
            return f;
        };

        double f = objective(theta_);
        double dec = 0.0;
        for (int it = 0; it < kMaxNewton; ++it) {
            const Vec z = X * theta_;
            Vec resid(n);
            Vec w(n);
            for (Eigen::Index s = 0; s < n; ++s) {
                resid(s) = family_.mean(z(s)) - y(s);
                w(s) = family_.mean_deriv(z(s));
            }
            const Vec grad = X.transpose() * resid + kRidge * theta_;
            Mat H = X.transpose() * w.asDiagonal() * X;
            H.diagonal().array() += kRidge;
            const Vec step = H.ldlt().solve(-grad);
            dec = -grad.dot(step);
            if (dec <= 1e-12 * (1.0 + std::abs(f))) {
                dirty_ = false;
                return theta_;
            }
            double eta = 1.0;
            Vec cand = theta_ + step;
            double fc = objective(cand);
            while (fc > f - 0.25 * eta * dec && eta > 1e-12) {
                eta *= 0.5;
                cand = theta_ + eta * step;
                fc = objective(cand);
            }
            theta_ = cand;
            f = fc;
            if (theta_.norm() > kNormGuard) {
                throw std::runtime_error("ucb-glm: MLE norm exceeded guard");
            }
        }
        std::ostringstream msg;
        msg << "ucb-glm: Newton did not converge in " << kMaxNewton << " iterations (n=" << n
            << ", decrement=" << dec << ", objective=" << f << ")";
        throw std::runtime_error(msg.str());
    }

    /// Round-robin while the history is empty, otherwise the optimistic MLE rule.
    int select(const ArmSet& arms, double alpha)
    {
        if (ys_.empty()) {
            return static_cast<int>(rr_++ % static_cast<std::size_t>(arms.size()));
        }
        fit();
        const Mat Vinv = linalg::spd_inverse(V_);
        const Vec widths = row_sq_norms(arms.matrix(), Vinv).cwiseMax(0.0).cwiseSqrt();
        return argmax_first(arms.matrix() * theta_ + alpha * widths);
    }

    std::size_t footprint() const
    {
        return xs_.size() + ys_.size() + static_cast<std::size_t>(V_.size() + theta_.size());
    }

private:
    int d_;
    GlmFamily family_;
    std::vector<double> xs_;
    std::vector<double> ys_;
    Mat V_;
    Vec theta_;
    bool dirty_ = false;
    std::size_t rr_ = 0;
};

inline int ucb_glm_select(const std::vector<std::pair<Vec, double>>& history, const ArmSet& arms,
                          const GlmFamily& family, double alpha_radius)
{
    UcbGlm learner(arms.dim(), family);
    for (const auto& [x, y] : history) learner.add(x, y);
    return learner.select(arms, alpha_radius);
}

}  // namespace glb
