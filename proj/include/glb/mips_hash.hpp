#pragma once

// Maximum inner product search by sign random projections.
//
// Data points go through P(x) = [s x; sqrt(1 - ||s x||^2)] and queries through
// Q(q) = [q/||q||; 0], so <Q(q), P(x)> = s <q, x> / ||q|| and cosine-similarity
// hashing on the transformed vectors ranks points by inner product. Each of
// the U tables keys a point by k sign bits. Queries probe the home bucket plus
// neighbouring buckets (multi-probe) and rescore every candidate exactly.

#include "iprod_sampling.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace glb {

enum class DotMode { exact, l1_sampled };

struct DotSpec {
    DotMode mode = DotMode::exact;
    int m = 64;  // samples per inner product in l1_sampled mode
};

/// per_table: every table probes its own `probes` nearest buckets.
/// global: `probes` extra buckets in total, ranked across all tables.
enum class ProbeScope { per_table, global };

inline Vec asym_transform_data(const Vec& x, double scale)
{
    const auto d = x.size();
    Vec out(d + 1);
    out.head(d) = scale * x;
    const double n2 = out.head(d).squaredNorm();
    if (n2 > 1.0 + 1e-9) throw std::invalid_argument("asym_transform_data: ||scale*x|| exceeds 1");
    out(d) = std::sqrt(std::max(0.0, 1.0 - n2));
    return out;
}

inline Vec asym_transform_query(const Vec& q)
{
    const double n = q.norm();
    if (!(n > 0.0)) throw std::invalid_argument("asym_transform_query: zero query vector");
    Vec out = Vec::Zero(q.size() + 1);
    out.head(q.size()) = q / n;
    return out;
}

/// Multi-probe perturbation masks for one table, in probing order: single
/// bit flips from the smallest |projection| up, then larger flip sets by
/// increasing total |projection|. At most n masks (capped at 2^k - 1).
inline std::vector<std::pair<double, std::uint32_t>> probe_sequence(const std::vector<double>& margin, int n)
{
    const int k = static_cast<int>(margin.size());
    std::vector<std::pair<double, std::uint32_t>> out;
    if (n <= 0 || k == 0) return out;
    const std::uint64_t all = (k >= 63) ? std::numeric_limits<std::uint64_t>::max() : ((1ULL << k) - 1ULL);
    const std::uint64_t cap = std::min<std::uint64_t>(static_cast<std::uint64_t>(n), all);

    std::vector<int> order(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return margin[static_cast<std::size_t>(a)] < margin[static_cast<std::size_t>(b)];
    });
    auto bit = [&](int j) { return 1U << order[static_cast<std::size_t>(j)]; };
    auto sc = [&](int j) { return margin[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]; };

    for (int j = 0; j < k && out.size() < cap; ++j) out.emplace_back(sc(j), bit(j));
    if (out.size() >= cap) return out;

    // flip sets of size >= 2 over sorted positions, via shift / expand
    struct Node {
        double score;
        std::uint64_t seq;
        std::vector<int> pos;
    };
    auto cmp = [](const Node& a, const Node& b) {
        return a.score != b.score ? a.score > b.score : a.seq > b.seq;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);
    std::uint64_t seq = 0;
    heap.push({sc(0), seq++, {0}});
    while (!heap.empty() && out.size() < cap) {
        Node top = heap.top();
        heap.pop();
        const int last = top.pos.back();
        if (last + 1 < k) {
            Node shift = top;
            shift.pos.back() = last + 1;
            shift.score += sc(last + 1) - sc(last);
            shift.seq = seq++;
            heap.push(std::move(shift));
            Node expand = top;
            expand.pos.push_back(last + 1);
            expand.score += sc(last + 1);
            expand.seq = seq++;
            heap.push(std::move(expand));
        }
        if (top.pos.size() >= 2) {
            std::uint32_t mask = 0;
            for (int j : top.pos) mask |= bit(j);
            out.emplace_back(top.score, mask);
        }
    }
    return out;
}

struct QueryResult {
    static constexpr int kNoCandidate = -1;
    int best = kNoCandidate;
    double best_score = -std::numeric_limits<double>::infinity();
    int candidates = 0;
    bool found() const { return best != kNoCandidate; }
};

class HashIndex {
public:
    using Scorer = std::function<double(int)>;

    template <class Rng>
    HashIndex(std::shared_ptr<const Mat> points, int k, int U, Rng& rng) : points_(std::move(points)), k_(k), U_(U)
    {
        if (!points_ || points_->rows() == 0) throw std::invalid_argument("HashIndex: no points");
        if (k < 0 || k > 31) throw std::invalid_argument("HashIndex: k must be in [0, 31]");
        if (U < 1) throw std::invalid_argument("HashIndex: U must be >= 1");
        const Mat& X = *points_;
        const double max_norm = X.rowwise().norm().maxCoeff();
        scale_ = max_norm > 0.0 ? 1.0 / max_norm : 1.0;

        const auto n = X.rows();
        const auto dt = X.cols() + 1;
        std::normal_distribution<double> n01(0.0, 1.0);
        proj_.resize(static_cast<Eigen::Index>(U) * k, dt);
        for (Eigen::Index r = 0; r < proj_.rows(); ++r) {
            for (Eigen::Index c = 0; c < dt; ++c) proj_(r, c) = n01(rng);
        }

        Mat P(n, dt);
        P.leftCols(X.cols()) = scale_ * X;
        P.col(X.cols()) = (1.0 - P.leftCols(X.cols()).rowwise().squaredNorm().array()).max(0.0).sqrt().matrix();
        const Mat dots = P * proj_.transpose();  // n x (U k)

        tables_.resize(static_cast<std::size_t>(U));
        for (int u = 0; u < U; ++u) {
            auto& tab = tables_[static_cast<std::size_t>(u)];
            tab.reserve(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) {
                std::uint32_t key = 0;
                for (int b = 0; b < k; ++b) {
                    if (dots(i, static_cast<Eigen::Index>(u) * k + b) >= 0.0) key |= 1U << b;
                }
                tab.emplace_back(key, static_cast<int>(i));
            }
            std::sort(tab.begin(), tab.end());
        }
    }

    int k() const { return k_; }
    int U() const { return U_; }
    int size() const { return static_cast<int>(points_->rows()); }
    double scale() const { return scale_; }
    const Mat& points() const { return *points_; }
    const std::shared_ptr<const Mat>& shared_points() const { return points_; }
    const Mat& projections() const { return proj_; }

    /// (key, point index) pairs of table u, sorted by key.
    const std::vector<std::pair<std::uint32_t, int>>& table(int u) const
    {
        return tables_.at(static_cast<std::size_t>(u));
    }

    std::vector<int> bucket(int u, std::uint32_t key) const
    {
        const auto& tab = table(u);
        auto lo = std::lower_bound(tab.begin(), tab.end(), std::make_pair(key, std::numeric_limits<int>::min()));
        std::vector<int> out;
        for (; lo != tab.end() && lo->first == key; ++lo) out.push_back(lo->second);
        return out;
    }

    /// Inner products of v (transformed space) with the k projections of table u.
    /// Sampled mode estimates each with `scheme` (built once per v).
    template <class Rng>
    std::vector<double> table_dots(const Vec& v, int u, const SamplingScheme* scheme, int m, Rng& rng) const
    {
        if (v.size() != proj_.cols()) throw std::invalid_argument("hash_key: dimension mismatch");
        std::vector<double> out(static_cast<std::size_t>(k_));
        for (int b = 0; b < k_; ++b) {
            const Vec row = proj_.row(static_cast<Eigen::Index>(u) * k_ + b).transpose();
            out[static_cast<std::size_t>(b)] = scheme ? scheme->sampled_dot(row, m, rng) : row.dot(v);
        }
        return out;
    }

    template <class Rng>
    std::uint32_t hash_key(const Vec& v, int u, DotSpec dot, Rng& rng) const
    {
        std::unique_ptr<SamplingScheme> scheme;
        if (dot.mode == DotMode::l1_sampled) scheme = std::make_unique<SamplingScheme>(SamplingKind::l1, v);
        return key_of(table_dots(v, u, scheme.get(), dot.m, rng));
    }

    std::uint32_t hash_key(const Vec& v, int u) const
    {
        std::mt19937_64 unused(0);
        return hash_key(v, u, DotSpec{}, unused);
    }

    /// Multi-probe query; `score(i)` rescores candidate i exactly.
    template <class Rng>
    QueryResult query(const Vec& q, int probes, DotSpec dot, const Scorer& score, Rng& rng,
                      ProbeScope scope = ProbeScope::per_table) const
    {
        if (probes < 0) throw std::invalid_argument("query: probes must be >= 0");
        if (q.size() != points_->cols()) throw std::invalid_argument("query: dimension mismatch");
        const Vec v = asym_transform_query(q);
        std::unique_ptr<SamplingScheme> scheme;
        if (dot.mode == DotMode::l1_sampled) scheme = std::make_unique<SamplingScheme>(SamplingKind::l1, v);

        std::vector<std::pair<int, std::uint32_t>> buckets;  // (table, key)
        std::vector<std::tuple<double, int, std::uint32_t>> pool;
        for (int u = 0; u < U_; ++u) {
            const std::vector<double> dots = table_dots(v, u, scheme.get(), dot.m, rng);
            const std::uint32_t key = key_of(dots);
            buckets.emplace_back(u, key);
            std::vector<double> margin(dots.size());
            for (std::size_t b = 0; b < dots.size(); ++b) margin[b] = std::abs(dots[b]);
            for (const auto& [s, mask] : probe_sequence(margin, probes)) {
                if (scope == ProbeScope::per_table) {
                    buckets.emplace_back(u, key ^ mask);
                } else {
                    pool.emplace_back(s, u, key ^ mask);
                }
            }
        }
        if (scope == ProbeScope::global) {
            const auto take = std::min(pool.size(), static_cast<std::size_t>(probes));
            std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end());
            for (std::size_t i = 0; i < take; ++i) buckets.emplace_back(std::get<1>(pool[i]), std::get<2>(pool[i]));
        }

        QueryResult res;
        std::vector<char> seen(static_cast<std::size_t>(size()), 0);
        for (const auto& [u, key] : buckets) {
            const auto& tab = tables_[static_cast<std::size_t>(u)];
            auto it = std::lower_bound(tab.begin(), tab.end(), std::make_pair(key, std::numeric_limits<int>::min()));
            for (; it != tab.end() && it->first == key; ++it) {
                const int i = it->second;
                if (seen[static_cast<std::size_t>(i)]) continue;
                seen[static_cast<std::size_t>(i)] = 1;
                ++res.candidates;
                const double s = score(i);
                if (s > res.best_score || (s == res.best_score && i < res.best)) {
                    res.best_score = s;
                    res.best = i;
                }
            }
        }
        return res;
    }

    template <class Rng>
    QueryResult query(const Vec& q, int probes, DotSpec dot, Rng& rng,
                      ProbeScope scope = ProbeScope::per_table) const
    {
        const Mat& X = *points_;
        return query(q, probes, dot, [&](int i) { return X.row(i).dot(q); }, rng, scope);
    }

private:
    std::uint32_t key_of(const std::vector<double>& dots) const
    {
        std::uint32_t key = 0;
        for (std::size_t b = 0; b < dots.size(); ++b) {
            if (dots[b] >= 0.0) key |= 1U << b;
        }
        return key;
    }

    std::shared_ptr<const Mat> points_;
    int k_;
    int U_;
    double scale_ = 1.0;
    Mat proj_;
    std::vector<std::vector<std::pair<std::uint32_t, int>>> tables_;
};

template <class Rng>
HashIndex build_index(const Mat& points, int k, int U, Rng& rng)
{
    return HashIndex(std::make_shared<const Mat>(points), k, U, rng);
}

/// Exact linear scan; lowest index on ties.
inline QueryResult exact_scan(int n, const HashIndex::Scorer& score)
{
    QueryResult res;
    for (int i = 0; i < n; ++i) {
        const double s = score(i);
        if (s > res.best_score) {
            res.best_score = s;
            res.best = i;
        }
    }
    res.candidates = n;
    return res;
}

// ---------------------------------------------------------------------------
// Series of indices with geometrically decreasing acceptance thresholds.

/// ceil(log(M_max / M_min) / log(1 / sqrt(c_H))); may be 0.
inline int compute_J(double c_H, double M_min, double M_max)
{
    if (!(c_H > 0.0 && c_H < 1.0)) throw std::invalid_argument("compute_J: c_H must be in (0,1)");
    if (!(M_min > 0.0) || !(M_max >= M_min)) throw std::invalid_argument("compute_J: need 0 < M_min <= M_max");
    return static_cast<int>(std::ceil(std::log(M_max / M_min) / std::log(1.0 / std::sqrt(c_H))));
}

/// (1 + log(T)/sqrt(T))^{-1}
inline double default_c_H(double T)
{
    if (!(T >= 2.0)) throw std::invalid_argument("default_c_H: T must be >= 2");
    return 1.0 / (1.0 + std::log(T) / std::sqrt(T));
}

/// Range of QGLOC objective values over the horizon:
/// M_min = 1/2, M_max = sqrt(d) S + beta_bar^{1/4} sqrt(T + lambda) / (4 c0 r lambda).
inline std::pair<double, double> qgloc_M_bounds(int d, double S, double beta_bar, double T, double lambda, double c0,
                                                double r)
{
    const double M_max = std::sqrt(static_cast<double>(d)) * S +
                         std::pow(beta_bar, 0.25) * std::sqrt(T + lambda) / (4.0 * c0 * r * lambda);
    return {0.5, M_max};
}

struct SeriesResult {
    int best = QueryResult::kNoCandidate;
    double best_score = 0.0;
    int level = 0;       // 1-based level that answered; 0 for the exact fallback
    int candidates = 0;  // summed over all levels queried (plus N on fallback)
};

class MipsSeries {
public:
    template <class Rng>
    MipsSeries(std::shared_ptr<const Mat> points, double c_H, double M_min, double M_max, int k, int U, Rng& rng)
        : c_H_(c_H), M_min_(M_min), M_max_(M_max)
    {
        J_ = std::max(1, compute_J(c_H, M_min, M_max));
        levels_.reserve(static_cast<std::size_t>(J_));
        for (int j = 0; j < J_; ++j) levels_.emplace_back(points, k, U, rng);
    }

    int J() const { return J_; }
    double c_H() const { return c_H_; }
    double M_min() const { return M_min_; }
    double M_max() const { return M_max_; }
    const HashIndex& level(int j) const { return levels_.at(static_cast<std::size_t>(j - 1)); }

    /// c_H^{1/2} c_H^{j/2} M_max for j = 1..J.
    double threshold(int j) const { return std::sqrt(c_H_) * std::pow(c_H_, 0.5 * j) * M_max_; }

    /// Binary search for the smallest level whose retrieved point clears its threshold.
    template <class Rng>
    SeriesResult query(const Vec& q, int probes, DotSpec dot, const HashIndex::Scorer& score, Rng& rng) const
    {
        SeriesResult out;
        std::vector<QueryResult> cache(static_cast<std::size_t>(J_ + 1));
        std::vector<char> done(static_cast<std::size_t>(J_ + 1), 0);
        auto attempt = [&](int j) -> bool {
            if (!done[static_cast<std::size_t>(j)]) {
                cache[static_cast<std::size_t>(j)] = level(j).query(q, probes, dot, score, rng);
                out.candidates += cache[static_cast<std::size_t>(j)].candidates;
                done[static_cast<std::size_t>(j)] = 1;
            }
            const auto& r = cache[static_cast<std::size_t>(j)];
            return r.found() && r.best_score >= threshold(j);
        };
        int lo = 1;
        int hi = J_;
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            if (attempt(mid)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if (attempt(lo)) {
            out.best = cache[static_cast<std::size_t>(lo)].best;
            out.best_score = cache[static_cast<std::size_t>(lo)].best_score;
            out.level = lo;
            return out;
        }
        const QueryResult full = exact_scan(levels_.front().size(), score);
        out.best = full.best;
        out.best_score = full.best_score;
        out.candidates += full.candidates;
        return out;
    }

private:
    double c_H_;
    double M_min_;
    double M_max_;
    int J_ = 1;
    std::vector<HashIndex> levels_;
};

template <class Rng>
SeriesResult series_query(const MipsSeries& s, const Vec& q, int probes, DotSpec dot, Rng& rng)
{
    const Mat& X = s.level(1).points();
    return s.query(q, probes, dot, [&](int i) { return X.row(i).dot(q); }, rng);
}

}  // namespace glb
