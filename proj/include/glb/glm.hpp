#pragma once

// Reward families for generalized linear bandits.
//
// A family is described by its inverse link mu, the log-partition m (with
// m' = mu) and the negative log-likelihood l(z, y) = -y z + m(z). Constants
// (kappa, L, R) are taken over the parameter ball of radius S, i.e. over
// natural parameters z in [-S, S] since arms have norm at most one.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace glb {

enum class FamilyKind { logit, probit, gaussian };

struct FamilyConstants {
    double kappa = 0.0;  // inf of mu' on (-S, S)
    double L = 0.0;      // Lipschitz constant of mu
    double R = 0.0;      // sub-Gaussian scale of the reward noise
};

namespace detail {

inline double normal_pdf(double z)
{
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
inline double softplus(double z)
{
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace detail

class GlmFamily {
public:
    GlmFamily(FamilyKind kind, double S) : kind_(kind), S_(S)
    {
        if (!(S > 0.0) || !std::isfinite(S)) {
            throw std::invalid_argument("GlmFamily: S must be a positive finite number");
        }
    }

    static GlmFamily from_name(std::string_view name, double S)
    {
        if (name == "logit") return {FamilyKind::logit, S};
        if (name == "probit") return {FamilyKind::probit, S};
        if (name == "gaussian") return {FamilyKind::gaussian, S};
        throw std::invalid_argument("unknown family '" + std::string(name) +
                                    "' (expected logit, probit or gaussian)");
    }

    FamilyKind kind() const { return kind_; }
    double S() const { return S_; }

    std::string_view name() const
    {
        switch (kind_) {
        case FamilyKind::logit: return "logit";
        case FamilyKind::probit: return "probit";
        case FamilyKind::gaussian: return "gaussian";
        }
        return "?";
    }

    /// Inverse link mu(z).
    double mean(double z) const
    {
        switch (kind_) {
        case FamilyKind::logit: return detail::sigmoid(z);
        case FamilyKind::probit: return detail::normal_cdf(z);
        case FamilyKind::gaussian: return z;
        }
        return 0.0;
    }

    double mean_deriv(double z) const
    {
        switch (kind_) {
        case FamilyKind::logit: {
            const double s = detail::sigmoid(z);
            return s * (1.0 - s);
        }
        case FamilyKind::probit: return detail::normal_pdf(z);
        case FamilyKind::gaussian: return 1.0;
        }
        return 0.0;
    }

    /// Antiderivative m of mu. The probit antiderivative is anchored at m(0) = 0.
    double log_partition(double z) const
    {
        switch (kind_) {
        case FamilyKind::logit: return detail::softplus(z);
        case FamilyKind::probit:
            return z * detail::normal_cdf(z) + detail::normal_pdf(z) - detail::normal_pdf(0.0);
        case FamilyKind::gaussian: return 0.5 * z * z;
        }
        return 0.0;
    }

    double loss(double z, double y) const { return -y * z + log_partition(z); }

    double loss_grad(double z, double y) const { return -y + mean(z); }

    FamilyConstants constants() const
    {
        switch (kind_) {
        case FamilyKind::logit:
            // mu' is even and decreasing in |z|, so the infimum sits at the endpoint.
            return {mean_deriv(S_), 0.25, 0.5};
        case FamilyKind::probit:
            return {detail::normal_pdf(S_), detail::normal_pdf(0.0), 0.5};
        case FamilyKind::gaussian:
            // rewards are treated as already divided by the noise scale
            return {1.0, 1.0, 1.0};
        }
        return {};
    }

    /// Draws y = mu(z) + eta. Bernoulli for logit/probit; z + noise_scale * N(0,1)
    /// for gaussian.
    template <class Rng>
    double sample_reward(double z, Rng& rng, double noise_scale = 1.0) const
    {
        if (kind_ == FamilyKind::gaussian) {
            std::normal_distribution<double> noise(0.0, 1.0);
            return z + noise_scale * noise(rng);
        }
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        return unif(rng) < mean(z) ? 1.0 : 0.0;
    }

private:
    FamilyKind kind_;
    double S_;
};

// Free-function forms.

inline double link_mean(const GlmFamily& f, double z) { return f.mean(z); }
inline double loss(const GlmFamily& f, double z, double y) { return f.loss(z, y); }
inline double loss_grad(const GlmFamily& f, double z, double y) { return f.loss_grad(z, y); }
inline FamilyConstants family_constants(const GlmFamily& f) { return f.constants(); }

template <class Rng>
double sample_reward(const GlmFamily& f, double z, Rng& rng)
{
    return f.sample_reward(z, rng);
}

}  // namespace glb
