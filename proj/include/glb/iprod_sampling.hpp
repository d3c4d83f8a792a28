#pragma once

// Sampled inner products. With i_1..i_m drawn i.i.d. from p,
//
//     G = (1/m) sum_k q_{i_k} a_{i_k} / p_{i_k}
//
// is unbiased for q^T a. L1 sampling uses p_i = |q_i| / ||q||_1, L2 sampling
// p_i = q_i^2 / ||q||_2^2.

#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace glb {

enum class SamplingKind { l1, l2 };

inline std::string_view sampling_name(SamplingKind k) { return k == SamplingKind::l1 ? "l1" : "l2"; }

/// Vose alias table; O(n) setup, O(1) per draw. Zero-probability entries are never drawn.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(const std::vector<double>& p)
    {
        const std::size_t n = p.size();
        if (n == 0) throw std::invalid_argument("AliasTable: empty distribution");
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small;
        std::vector<std::uint32_t> large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = p[i] * static_cast<double>(n);
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            const auto s = small.back();
            small.pop_back();
            const auto l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        // leftovers are 1 up to rounding; a zero-probability entry can only
        // land here if every entry is zero, which the callers exclude
        for (auto l : large) prob_[l] = 1.0;
        for (auto s : small) prob_[s] = p[s] > 0.0 ? 1.0 : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i] == 0.0) prob_[i] = 0.0;
        }
    }

    std::size_t size() const { return prob_.size(); }

    template <class Rng>
    std::size_t operator()(Rng& rng) const
    {
        std::uniform_int_distribution<std::size_t> col(0, prob_.size() - 1);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        const std::size_t i = col(rng);
        return coin(rng) < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

class SamplingScheme {
public:
    SamplingScheme(SamplingKind kind, Vec q) : kind_(kind), q_(std::move(q))
    {
        const auto n = q_.size();
        if (n == 0) throw std::invalid_argument("SamplingScheme: empty query");
        if (!q_.allFinite()) throw std::invalid_argument("SamplingScheme: non-finite query");
        norm_ = kind_ == SamplingKind::l1 ? q_.lpNorm<1>() : q_.squaredNorm();
        if (!(norm_ > 0.0)) throw std::invalid_argument("SamplingScheme: zero query vector");
        p_.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = kind_ == SamplingKind::l1 ? std::abs(q_(i)) : q_(i) * q_(i);
            p_[static_cast<std::size_t>(i)] = w / norm_;
        }
        alias_ = AliasTable(p_);
    }

    SamplingKind kind() const { return kind_; }
    const Vec& q() const { return q_; }
    const std::vector<double>& probs() const { return p_; }

    /// q_i a_i / p_i for coordinate i (p_i > 0).
    double term(std::size_t i, const Vec& a) const
    {
        const auto e = static_cast<Eigen::Index>(i);
        return q_(e) * a(e) / p_[i];
    }

    template <class Rng>
    std::size_t draw(Rng& rng) const
    {
        return alias_(rng);
    }

    template <class Rng>
    double sampled_dot(const Vec& a, int m, Rng& rng) const
    {
        if (m < 1) throw std::invalid_argument("sampled_dot: m must be >= 1");
        if (a.size() != q_.size()) throw std::invalid_argument("sampled_dot: dimension mismatch");
        double acc = 0.0;
        for (int k = 0; k < m; ++k) acc += term(alias_(rng), a);
        return acc / m;
    }

    /// Variance of a single draw G_k.
    double exact_variance(const Vec& a) const
    {
        const double qa = q_.dot(a);
        if (kind_ == SamplingKind::l1) {
            return norm_ * (q_.cwiseAbs().array() * a.array().square()).sum() - qa * qa;
        }
        return norm_ * a.squaredNorm() - qa * qa;
    }

private:
    SamplingKind kind_;
    Vec q_;
    double norm_ = 0.0;  // ||q||_1 or ||q||_2^2
    std::vector<double> p_;
    AliasTable alias_;
};

inline std::vector<double> probs(const SamplingScheme& s) { return s.probs(); }

template <class Rng>
double sampled_dot(const SamplingScheme& s, const Vec& a, int m, Rng& rng)
{
    return s.sampled_dot(a, m, rng);
}

inline double exact_variance(const SamplingScheme& s, const Vec& a) { return s.exact_variance(a); }

namespace detail {
inline void check_bound_args(int m, double eps)
{
    if (m < 1) throw std::invalid_argument("bound: m must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("bound: eps must be positive");
}
}  // namespace detail

/// P(|G - q^T a| >= eps) <= 2 exp(-m eps^2 / (2 ||q||_1^2 ||a||_max^2)) for L1 sampling.
inline double l1_hoeffding_bound(const Vec& q, const Vec& a, int m, double eps)
{
    detail::check_bound_args(m, eps);
    const double M = q.lpNorm<1>() * a.lpNorm<Eigen::Infinity>();
    if (M == 0.0) return 0.0;
    return std::min(1.0, 2.0 * std::exp(-m * eps * eps / (2.0 * M * M)));
}

/// Chebyshev bound ||q||^2 ||a||^2 / (m eps^2) for L2 sampling.
inline double l2_chebyshev_bound(const Vec& q, const Vec& a, int m, double eps)
{
    detail::check_bound_args(m, eps);
    return std::min(1.0, q.squaredNorm() * a.squaredNorm() / (m * eps * eps));
}

/// 2 exp(-m eps^2 / (2 ||q||^4 max_i |a_i/q_i|^2)); 1 when some q_i is zero.
inline double l2_exponential_bound(const Vec& q, const Vec& a, int m, double eps)
{
    detail::check_bound_args(m, eps);
    double ratio = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (q(i) == 0.0) return 1.0;
        ratio = std::max(ratio, std::abs(a(i) / q(i)));
    }
    const double q2 = q.squaredNorm();
    const double M = q2 * ratio;
    if (M == 0.0) return 0.0;
    return std::min(1.0, 2.0 * std::exp(-m * eps * eps / (2.0 * M * M)));
}

// ---------------------------------------------------------------------------
// Variance study on Gaussian (q, a).

struct VarianceStudy {
    int d = 0;
    int trials = 0;
    std::vector<double> var_l1;  // normalised by d^2
    std::vector<double> var_l2;
    std::vector<double> q1_sq;   // ||q||_1^2 per trial
    double mean_l1 = 0.0;
    double mean_l2 = 0.0;
    double frac_l1_smaller = 0.0;
};

/// Variances are reported divided by d^2: with q, a ~ N(0, I) the raw L2
/// variance has mean d^2 - d and the L1 variance (2/pi) d^2 + O(d).
template <class Rng>
VarianceStudy gaussian_variance_study(int d, int trials, Rng& rng)
{
    if (d < 2) throw std::invalid_argument("variance study: d must be >= 2");
    if (trials < 1) throw std::invalid_argument("variance study: trials must be >= 1");
    std::normal_distribution<double> n01(0.0, 1.0);
    VarianceStudy out;
    out.d = d;
    out.trials = trials;
    const double norm = static_cast<double>(d) * d;
    int l1_wins = 0;
    for (int t = 0; t < trials; ++t) {
        Vec q(d), a(d);
        for (int i = 0; i < d; ++i) q(i) = n01(rng);
        for (int i = 0; i < d; ++i) a(i) = n01(rng);
        const double v1 = SamplingScheme(SamplingKind::l1, q).exact_variance(a);
        const double v2 = SamplingScheme(SamplingKind::l2, q).exact_variance(a);
        out.var_l1.push_back(v1 / norm);
        out.var_l2.push_back(v2 / norm);
        const double n1 = q.lpNorm<1>();
        out.q1_sq.push_back(n1 * n1);
        if (v1 < v2) ++l1_wins;
    }
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    out.mean_l1 = mean(out.var_l1);
    out.mean_l2 = mean(out.var_l2);
    out.frac_l1_smaller = static_cast<double>(l1_wins) / trials;
    return out;
}

/// Estimation errors G - q^T a of L1 and L2 sampling on one Gaussian (q, a),
/// with the L2 errors rescaled so both samples have the same empirical
/// standard deviation (tail-shape comparison).
struct TailSample {
    std::vector<double> err_l1;
    std::vector<double> err_l2_scaled;
    double l2_scale = 1.0;
};

template <class Rng>
TailSample tail_comparison(int d, int draws, int m, Rng& rng)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    Vec q(d), a(d);
    for (int i = 0; i < d; ++i) q(i) = n01(rng);
    for (int i = 0; i < d; ++i) a(i) = n01(rng);
    const double truth = q.dot(a);
    const SamplingScheme s1(SamplingKind::l1, q);
    const SamplingScheme s2(SamplingKind::l2, q);
    TailSample out;
    out.err_l1.reserve(static_cast<std::size_t>(draws));
    out.err_l2_scaled.reserve(static_cast<std::size_t>(draws));
    for (int k = 0; k < draws; ++k) out.err_l1.push_back(s1.sampled_dot(a, m, rng) - truth);
    for (int k = 0; k < draws; ++k) out.err_l2_scaled.push_back(s2.sampled_dot(a, m, rng) - truth);
    auto sd = [](const std::vector<double>& v) {
        const double mu = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double acc = 0.0;
        for (double x : v) acc += (x - mu) * (x - mu);
        return std::sqrt(acc / static_cast<double>(v.size()));
    };
    const double s_l2 = sd(out.err_l2_scaled);
    out.l2_scale = s_l2 > 0.0 ? sd(out.err_l1) / s_l2 : 1.0;
    for (double& e : out.err_l2_scaled) e *= out.l2_scale;
    return out;
}

}  // namespace glb
