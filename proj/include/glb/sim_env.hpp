#pragma once

// Synthetic bandit environments and the per-trial driver loop.

#include "confidence.hpp"
#include "glm.hpp"
#include "mips_hash.hpp"
#include "online_newton.hpp"
#include "policies.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace glb {

using Rng = std::mt19937_64;

// Independent per-trial streams, so that e.g. enabling hashing leaves the
// reward sequence untouched.
enum class Stream : std::uint64_t { instance = 0, rewards = 1, ts_noise = 2, hashing = 3 };

inline Rng make_stream(std::uint64_t base_seed, int trial, Stream s)
{
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(trial);
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffULL), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(s), 0x676c62U};
    return Rng(seq);
}

struct Instance {
    Vec theta_star;
    ArmSet arms;
    GlmFamily family;
    double best_mean = 0.0;
    int best_index = 0;

    Instance(Vec theta, ArmSet a, GlmFamily f) : theta_star(std::move(theta)), arms(std::move(a)), family(f)
    {
        if (theta_star.size() != arms.dim()) throw std::invalid_argument("Instance: dimension mismatch");
        best_index = argmax_first(arms.matrix() * theta_star);
        best_mean = family.mean(arms.arm(best_index).dot(theta_star));
    }
};

template <class R>
Vec random_unit_vector(int d, R& rng)
{
    for (;;) {
        Vec v = standard_normal_vector(d, rng);
        const double n = v.norm();
        if (n > 1e-300) return v / n;
    }
}

template <class R>
Instance gen_instance(int d, int N, const GlmFamily& family, R& rng)
{
    if (d < 1) throw std::invalid_argument("gen_instance: d must be >= 1");
    if (N < 1) throw std::invalid_argument("gen_instance: N must be >= 1");
    Vec theta = random_unit_vector(d, rng);
    Mat X(N, d);
    for (int i = 0; i < N; ++i) X.row(i) = random_unit_vector(d, rng).transpose();
    return Instance(std::move(theta), ArmSet(std::move(X)), family);
}

/// mu(max_x x^T theta*) - mu(x_chosen^T theta*)
inline double step_regret(const Instance& inst, int chosen)
{
    if (chosen < 0 || chosen >= inst.arms.size()) throw std::out_of_range("step_regret: arm index");
    return inst.best_mean - inst.family.mean(inst.arms.matrix().row(chosen).dot(inst.theta_star));
}

// ---------------------------------------------------------------------------
// Radius rules

enum class RadiusKind { paper_theory, tuned };

/// Exploration radius: either the confidence-set beta (paper_theory) or
/// c * sum g_s^2 ||x_s||^2_{A_s^{-1}} (tuned). For UCB-GLM the width is
/// alpha = sqrt(c d log t), with c = 1 under paper_theory.
struct RadiusRule {
    RadiusKind kind = RadiusKind::tuned;
    double c = 1.0;

    double glm_beta(ConfState& conf, const OnsState& ons) const
    {
        if (kind == RadiusKind::paper_theory) return conf.beta(ons.regret_budget());
        return c * ons.accumulated();
    }

    double ucb_alpha(int d, std::int64_t t) const
    {
        const double cc = kind == RadiusKind::paper_theory ? 1.0 : c;
        return std::sqrt(cc * d * std::log(static_cast<double>(std::max<std::int64_t>(t, 1))));
    }
};

inline RadiusRule radius_scaling_hook(RadiusKind kind, double c)
{
    if (kind == RadiusKind::tuned && !(c > 0.0)) throw std::invalid_argument("tuned radius: c must be positive");
    return {kind, c};
}

/// {10^1, 10^0.5, ..., 10^-3}
inline std::vector<double> tuning_grid()
{
    std::vector<double> g;
    for (int i = 0; i < 9; ++i) g.push_back(std::pow(10.0, 1.0 - 0.5 * i));
    return g;
}

// ---------------------------------------------------------------------------
// Trial configuration and trace

enum class Policy { gloc, gloc_ts, qgloc, ucb_glm };

inline std::string policy_name(Policy p)
{
    switch (p) {
    case Policy::gloc: return "gloc";
    case Policy::gloc_ts: return "gloc-ts";
    case Policy::qgloc: return "qgloc";
    case Policy::ucb_glm: return "ucb-glm";
    }
    return "?";
}

inline Policy policy_from_name(const std::string& s)
{
    if (s == "gloc") return Policy::gloc;
    if (s == "gloc-ts") return Policy::gloc_ts;
    if (s == "qgloc") return Policy::qgloc;
    if (s == "ucb-glm") return Policy::ucb_glm;
    throw std::invalid_argument("unknown policy '" + s + "' (expected gloc, gloc-ts, qgloc or ucb-glm)");
}

struct HashSettings {
    bool enabled = false;
    int k = 12;
    int U = 24;
    int probes = 12;
    DotSpec dot;
    int rebuild_every = 500;
    ProbeScope scope = ProbeScope::per_table;
};

struct SimConfig {
    std::string family = "logit";
    Policy policy = Policy::gloc;
    int d = 10;
    int N = 100;
    int T = 3000;
    double delta = 0.1;
    double lambda = 1.0;
    double eps = 1.0;
    double S = 1.0;
    double c0 = 0.0;                    // 0: ((L + R) / kappa)^{-1/2}
    RadiusRule radius;
    std::optional<MbarMode> mbar;       // default depends on d
    bool tighter = false;               // GLOC only
    double noise_scale = 1.0;           // gaussian family only
    double R = 0.0;                     // 0: family default
    bool greedy = false;                // radius forced to 0
    bool record_timing = false;
    std::uint64_t seed = 1;
    HashSettings hash;
};

struct RegretTrace {
    std::string algo;
    int trial = 0;
    std::vector<double> cum_regret;
    std::vector<double> wall_ms;
    std::vector<double> candidates_frac;   // empty unless hashed
    std::vector<std::size_t> state_size;   // live doubles held by the learner
};

inline std::string algo_name(const SimConfig& cfg)
{
    return policy_name(cfg.policy) + (cfg.hash.enabled ? "-hash" : "");
}

namespace detail {

// Hash index over the arms (GLOC-TS) or over phi(arms) (QGLOC).
class ArmIndex {
public:
    ArmIndex(const ArmSet& arms, bool quadratic, const HashSettings& hs)
        : hs_(hs)
    {
        if (quadratic) {
            const int d = arms.dim();
            Mat P(arms.size(), d + d * d);
            for (int i = 0; i < arms.size(); ++i) P.row(i) = phi_map(arms.arm(i)).transpose();
            points_ = std::make_shared<const Mat>(std::move(P));
        } else {
            points_ = std::make_shared<const Mat>(arms.matrix());
        }
    }

    void maybe_rebuild(std::int64_t t, Rng& rng)
    {
        if (!index_ || (t - 1) % hs_.rebuild_every == 0) {
            index_ = std::make_unique<HashIndex>(points_, hs_.k, hs_.U, rng);
        }
    }

    QueryResult query(const Vec& q, const HashIndex::Scorer& score, Rng& rng) const
    {
        return index_->query(q, hs_.probes, hs_.dot, score, rng, hs_.scope);
    }

private:
    HashSettings hs_;
    std::shared_ptr<const Mat> points_;
    std::unique_ptr<HashIndex> index_;
};

}  // namespace detail

inline void validate(const SimConfig& cfg)
{
    if (cfg.d < 1) throw std::invalid_argument("d must be >= 1");
    if (cfg.N < 1) throw std::invalid_argument("N must be >= 1");
    if (cfg.T < 1) throw std::invalid_argument("T must be >= 1");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(cfg.eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(cfg.S >= 1.0)) throw std::invalid_argument("S must be >= 1 (theta* lies on the unit sphere)");
    if (cfg.c0 < 0.0) throw std::invalid_argument("c0 must be positive (or 0 for the default)");
    if (cfg.R < 0.0) throw std::invalid_argument("R must be positive (or 0 for the family default)");
    if (cfg.noise_scale < 0.0) throw std::invalid_argument("noise_scale must be >= 0");
    if (cfg.radius.kind == RadiusKind::tuned && !(cfg.radius.c > 0.0)) throw std::invalid_argument("c must be positive");
    if (cfg.tighter && cfg.policy != Policy::gloc) throw std::invalid_argument("tighter set is only used by gloc");
    if (cfg.hash.enabled) {
        if (cfg.policy != Policy::qgloc && cfg.policy != Policy::gloc_ts) {
            throw std::invalid_argument("hashing applies to qgloc and gloc-ts only");
        }
        if (cfg.hash.k < 0 || cfg.hash.k > 31) throw std::invalid_argument("hash.k must be in [0,31]");
        if (cfg.hash.U < 1) throw std::invalid_argument("hash.U must be >= 1");
        if (cfg.hash.probes < 0) throw std::invalid_argument("hash.probes must be >= 0");
        if (cfg.hash.dot.m < 1) throw std::invalid_argument("hash.m must be >= 1");
        if (cfg.hash.rebuild_every < 1) throw std::invalid_argument("hash.rebuild_every must be >= 1");
    }
}

/// One trial on a given instance. Streams other than `instance` are derived
/// from (cfg.seed, trial).
inline RegretTrace run_trial_on(const SimConfig& cfg, const Instance& inst, int trial)
{
    using clock = std::chrono::steady_clock;
    const int d = inst.arms.dim();
    const GlmFamily& fam = inst.family;
    FamilyConstants fc = fam.constants();
    if (cfg.R > 0.0) fc.R = cfg.R;

    Rng reward_rng = make_stream(cfg.seed, trial, Stream::rewards);
    Rng ts_rng = make_stream(cfg.seed, trial, Stream::ts_noise);
    Rng hash_rng = make_stream(cfg.seed, trial, Stream::hashing);

    RegretTrace tr;
    tr.algo = algo_name(cfg);
    tr.trial = trial;
    tr.cum_regret.reserve(static_cast<std::size_t>(cfg.T));
    tr.wall_ms.reserve(static_cast<std::size_t>(cfg.T));
    tr.state_size.reserve(static_cast<std::size_t>(cfg.T));

    double cum = 0.0;
    auto record = [&](int chosen, clock::time_point start, std::size_t state) {
        cum += std::max(0.0, step_regret(inst, chosen));
        tr.cum_regret.push_back(cum);
        tr.wall_ms.push_back(cfg.record_timing
                                 ? std::chrono::duration<double, std::milli>(clock::now() - start).count()
                                 : 0.0);
        tr.state_size.push_back(state);
    };

    if (cfg.policy == Policy::ucb_glm) {
        UcbGlm learner(d, fam);
        for (std::int64_t t = 1; t <= cfg.T; ++t) {
            const auto start = clock::now();
            const double alpha = cfg.greedy ? 0.0 : cfg.radius.ucb_alpha(d, t);
            const int idx = learner.select(inst.arms, alpha);
            const Vec x = inst.arms.arm(idx);
            const double y = fam.sample_reward(x.dot(inst.theta_star), reward_rng, cfg.noise_scale);
            learner.add(x, y);
            record(idx, start, learner.footprint());
        }
        return tr;
    }

    ConfParams cp{cfg.lambda, cfg.S, fc.R, fc.kappa, cfg.delta};
    if (cfg.policy == Policy::gloc_ts && cfg.radius.kind == RadiusKind::paper_theory) {
        cp.delta = cfg.delta / (8.0 * cfg.T);
    }
    OnsState ons(d, cfg.eps, cfg.S, fc.kappa);
    ConfState conf(d, cp);
    std::unique_ptr<TighterConfState> tight;
    if (cfg.tighter) tight = std::make_unique<TighterConfState>(d, cfg.eps, cp);

    const double c0 = cfg.c0 > 0.0 ? cfg.c0 : default_c0(fc);
    const MbarMode mode = cfg.mbar.value_or(default_mbar_mode(d));

    std::unique_ptr<detail::ArmIndex> index;
    if (cfg.hash.enabled) {
        index = std::make_unique<detail::ArmIndex>(inst.arms, cfg.policy == Policy::qgloc, cfg.hash);
        tr.candidates_frac.reserve(static_cast<std::size_t>(cfg.T));
    }

    auto current_beta = [&]() -> double {
        if (cfg.greedy) return 0.0;
        if (tight && cfg.radius.kind == RadiusKind::paper_theory) return -1.0;  // taken from the tighter set
        return cfg.radius.glm_beta(conf, ons);
    };

    double beta = current_beta();
    const Mat& X = inst.arms.matrix();
    for (std::int64_t t = 1; t <= cfg.T; ++t) {
        const auto start = clock::now();
        Ellipsoid ell;
        if (tight) {
            ell = tight->ellipsoid(ons.predict(), ons.regret_budget());
            if (beta >= 0.0) ell.radius_sq = beta;
        } else {
            ell = conf.with_radius(beta);
        }

        int idx = 0;
        switch (cfg.policy) {
        case Policy::gloc: idx = gloc_select(ell, inst.arms); break;
        case Policy::gloc_ts: {
            const Vec xi = standard_normal_vector(d, ts_rng);
            const TsDraw draw = gloc_ts_select(ell, inst.arms, xi);
            idx = draw.index;
            if (index) {
                index->maybe_rebuild(t, hash_rng);
                const Vec& th = draw.theta_dot;
                QueryResult r;
                if (th.norm() > 0.0) r = index->query(th, [&](int i) { return X.row(i).dot(th); }, hash_rng);
                idx = r.found() ? r.best : draw.index;
                tr.candidates_frac.push_back(r.found() ? static_cast<double>(r.candidates) / inst.arms.size() : 1.0);
            }
            break;
        }
        case Policy::qgloc: {
            const double mb = m_bar(ell, inst.arms, mode, static_cast<double>(t), cfg.lambda);
            if (index) {
                index->maybe_rebuild(t, hash_rng);
                const QglocQuery q = qgloc_query(ell, c0, mb);
                const Vec flat = q.as_flat();
                QueryResult r;
                if (flat.norm() > 0.0) {
                    r = index->query(flat, [&](int i) { return q.structured_dot(X.row(i).transpose()); }, hash_rng);
                }
                idx = r.found() ? r.best : qgloc_select(ell, inst.arms, c0, mb);
                tr.candidates_frac.push_back(r.found() ? static_cast<double>(r.candidates) / inst.arms.size() : 1.0);
            } else {
                idx = qgloc_select(ell, inst.arms, c0, mb);
            }
            break;
        }
        case Policy::ucb_glm: break;
        }

        const Vec x = inst.arms.arm(idx);
        const double y = fam.sample_reward(x.dot(inst.theta_star), reward_rng, cfg.noise_scale);
        const double z = std::clamp(x.dot(ons.predict()), -cfg.S, cfg.S);
        ons.update(x, y, fam);
        conf.update(x, z);
        if (tight) tight->update(x, z);
        beta = current_beta();

        record(idx, start, ons.footprint() + conf.footprint() + (tight ? tight->footprint() : 0));
    }
    return tr;
}

inline RegretTrace run_trial(const SimConfig& cfg, int trial)
{
    validate(cfg);
    try {
        Rng inst_rng = make_stream(cfg.seed, trial, Stream::instance);
        const Instance inst = gen_instance(cfg.d, cfg.N, GlmFamily::from_name(cfg.family, cfg.S), inst_rng);
        return run_trial_on(cfg, inst, trial);
    } catch (const std::exception& e) {
        throw std::runtime_error("trial " + std::to_string(trial) + " (" + algo_name(cfg) + "): " + e.what());
    }
}

/// Runs trials 0..trials-1 on up to `jobs` threads; output ordered by trial.
inline std::vector<RegretTrace> run_trials(const SimConfig& cfg, int trials, int jobs = 1)
{
    validate(cfg);
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    std::vector<RegretTrace> out(static_cast<std::size_t>(trials));
    const int workers = std::max(1, std::min(jobs, trials));
    if (workers == 1) {
        for (int i = 0; i < trials; ++i) out[static_cast<std::size_t>(i)] = run_trial(cfg, i);
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < trials; i = next++) {
                try {
                    out[static_cast<std::size_t>(i)] = run_trial(cfg, i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
    return out;
}

inline double mean_final_regret(const std::vector<RegretTrace>& traces)
{
    double acc = 0.0;
    for (const auto& t : traces) acc += t.cum_regret.back();
    return acc / static_cast<double>(traces.size());
}

struct TuningResult {
    double best_c = 0.0;
    std::vector<double> grid;
    std::vector<double> mean_final;  // per grid point
    std::vector<RegretTrace> best_traces;
};

/// Best c over `grid` by mean final cumulative regret; first grid point on ties.
inline TuningResult tune_radius(SimConfig cfg, const std::vector<double>& grid, int trials, int jobs = 1)
{
    if (grid.empty()) throw std::invalid_argument("tuning grid is empty");
    TuningResult res;
    res.grid = grid;
    double best = std::numeric_limits<double>::infinity();
    for (double c : grid) {
        cfg.radius = radius_scaling_hook(RadiusKind::tuned, c);
        auto traces = run_trials(cfg, trials, jobs);
        const double m = mean_final_regret(traces);
        res.mean_final.push_back(m);
        if (m < best) {
            best = m;
            res.best_c = c;
            res.best_traces = std::move(traces);
        }
    }
    return res;
}

}  // namespace glb
