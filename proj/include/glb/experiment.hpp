#pragma once

// Experiment configuration, the three bench drivers and their file outputs.
//
// Config files are line-oriented `key = value` with `#` comments. The same
// keys are accepted as command-line flags (`--key`, underscores as dashes).

#include "iprod_sampling.hpp"
#include "mips_hash.hpp"
#include "sim_env.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#ifndef GLB_VERSION
#define GLB_VERSION "0.1.0"
#endif

namespace glb {

struct ExperimentConfig {
    std::string subcommand;
    std::string family = "logit";
    std::vector<std::string> policy = {"gloc"};
    int d = 10;
    int N = 100;  // arm count is not fixed by the original experiment; 100 is our choice
    int T = 3000;
    int trials = 40;
    double delta = 0.1;
    double lambda = 1.0;
    double eps = 1.0;
    double S = 1.0;
    double c0 = 0.0;
    double R = 0.0;
    std::string radius = "tuned";
    std::vector<double> c_grid = tuning_grid();
    std::string mbar = "auto";
    bool tighter = false;
    double noise_scale = 1.0;
    std::uint64_t seed = 1;
    bool hash = false;
    int k = 12;
    int U = 24;
    std::vector<int> probes = {12};
    std::string probe_scope = "per_table";
    std::string dot_mode = "exact";
    int m = 64;
    int rebuild_every = 500;
    int queries = 200;
    std::vector<int> m_grid = {1, 8, 64};
    std::vector<double> eps_grid = {0.5, 1.0, 2.0};
    int bound_draws = 100000;
    int tail_draws = 20000;
    int tail_m = 5;
    bool timing = false;
    int jobs = 1;
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Scalar formatting and parsing

inline std::string fmt_num(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& raw)
{
    const std::string s = trim(raw);
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument(key + ": cannot parse '" + raw + "' as a number");
    }
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& raw)
{
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument(key + ": expected true or false, got '" + raw + "'");
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_same_v<T, std::string>) {
            out += v[i];
        } else if constexpr (std::is_floating_point_v<T>) {
            out += fmt_num(v[i]);
        } else {
            out += std::to_string(v[i]);
        }
    }
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw)
{
    std::vector<T> out;
    for (const auto& item : split_list(raw)) {
        if constexpr (std::is_same_v<T, std::string>) {
            out.push_back(item);
        } else {
            out.push_back(parse_number<T>(key, item));
        }
    }
    return out;
}

}  // namespace detail

struct ConfigKey {
    std::string name;
    bool is_flag;  // boolean switch on the command line
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys()
{
    using C = ExperimentConfig;
    using namespace detail;
#define GLB_KEY_STR(field) \
    {#field, false, [](C& c, const std::string& v) { c.field = trim(v); }, [](const C& c) { return c.field; }}
#define GLB_KEY_NUM(field)                                                                               \
    {#field, false, [](C& c, const std::string& v) { c.field = parse_number<decltype(c.field)>(#field, v); }, \
     [](const C& c) {                                                                                     \
         if constexpr (std::is_floating_point_v<decltype(c.field)>) return fmt_num(c.field);           \
         else return std::to_string(c.field);                                                         \
     }}
#define GLB_KEY_BOOL(field) \
    {#field, true, [](C& c, const std::string& v) { c.field = parse_bool(#field, v); }, \
     [](const C& c) { return std::string(c.field ? "true" : "false"); }}
#define GLB_KEY_LIST(field)                                                                                        \
    {#field, false,                                                                                                 \
     [](C& c, const std::string& v) { c.field = parse_list<typename decltype(c.field)::value_type>(#field, v); }, \
     [](const C& c) { return join(c.field); }}
    static const std::vector<ConfigKey> keys = {
        GLB_KEY_STR(family),      GLB_KEY_LIST(policy),     GLB_KEY_NUM(d),          GLB_KEY_NUM(N),
        GLB_KEY_NUM(T),           GLB_KEY_NUM(trials),      GLB_KEY_NUM(delta),      GLB_KEY_NUM(lambda),
        GLB_KEY_NUM(eps),         GLB_KEY_NUM(S),           GLB_KEY_NUM(c0),         GLB_KEY_NUM(R),
        GLB_KEY_STR(radius),      GLB_KEY_LIST(c_grid),     GLB_KEY_STR(mbar),       GLB_KEY_BOOL(tighter),
        GLB_KEY_NUM(noise_scale), GLB_KEY_NUM(seed),        GLB_KEY_BOOL(hash),      GLB_KEY_NUM(k),
        GLB_KEY_NUM(U),           GLB_KEY_LIST(probes),     GLB_KEY_STR(probe_scope), GLB_KEY_STR(dot_mode),
        GLB_KEY_NUM(m),           GLB_KEY_NUM(rebuild_every), GLB_KEY_NUM(queries),  GLB_KEY_LIST(m_grid),
        GLB_KEY_LIST(eps_grid),   GLB_KEY_NUM(bound_draws), GLB_KEY_NUM(tail_draws), GLB_KEY_NUM(tail_m),
        GLB_KEY_BOOL(timing),     GLB_KEY_NUM(jobs),        GLB_KEY_STR(output_dir),
    };
#undef GLB_KEY_STR
#undef GLB_KEY_NUM
#undef GLB_KEY_BOOL
#undef GLB_KEY_LIST
    return keys;
}

inline const ConfigKey& find_key(const std::string& name)
{
    for (const auto& k : config_keys()) {
        if (k.name == name) return k;
    }
    throw std::invalid_argument("unknown config key '" + name + "'");
}

inline void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    find_key(key).set(cfg, value);
}

/// Applies `key = value` lines; `#` starts a comment. Unknown keys are errors.
inline void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin = "config")
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        try {
            set_key(cfg, key, line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void apply_config_file(ExperimentConfig& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), path);
}

inline std::string config_to_text(const ExperimentConfig& cfg)
{
    std::string out;
    for (const auto& k : config_keys()) out += k.name + " = " + k.get(cfg) + "\n";
    return out;
}

inline void validate(const ExperimentConfig& c)
{
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw std::invalid_argument(msg);
    };
    need(c.subcommand == "simulate" || c.subcommand == "hash-bench" || c.subcommand == "iprod-bench",
         "subcommand must be simulate, hash-bench or iprod-bench");
    need(c.family == "logit" || c.family == "probit" || c.family == "gaussian",
         "family must be logit, probit or gaussian");
    need(!c.policy.empty(), "policy list is empty");
    for (const auto& p : c.policy) policy_from_name(p);
    need(c.d >= 1, "d must be >= 1");
    need(c.N >= 1, "N must be >= 1");
    need(c.T >= 1, "T must be >= 1");
    need(c.trials >= 1, "trials must be >= 1");
    need(c.delta > 0.0 && c.delta < 1.0, "delta must be in (0,1)");
    need(c.lambda > 0.0, "lambda must be positive");
    need(c.eps > 0.0, "eps must be positive");
    need(c.S >= 1.0, "S must be >= 1");
    need(c.c0 >= 0.0, "c0 must be positive (0 selects the default)");
    need(c.R >= 0.0, "R must be positive (0 selects the family default)");
    need(c.radius == "tuned" || c.radius == "paper_theory", "radius must be tuned or paper_theory");
    need(!c.c_grid.empty(), "c_grid is empty");
    for (double v : c.c_grid) need(v > 0.0, "c_grid values must be positive");
    need(c.mbar == "auto" || c.mbar == "eig" || c.mbar == "bound" || c.mbar == "greedy",
         "mbar must be auto, eig, bound or greedy");
    need(c.noise_scale >= 0.0, "noise_scale must be >= 0");
    need(c.k >= 0 && c.k <= 31, "k must be in [0,31]");
    need(c.U >= 1, "U must be >= 1");
    need(!c.probes.empty(), "probes is empty");
    for (int p : c.probes) need(p >= 0, "probes must be >= 0");
    need(c.probe_scope == "per_table" || c.probe_scope == "global", "probe_scope must be per_table or global");
    need(c.dot_mode == "exact" || c.dot_mode == "l1_sampled", "dot_mode must be exact or l1_sampled");
    need(c.m >= 1, "m must be >= 1");
    need(c.rebuild_every >= 1, "rebuild_every must be >= 1");
    need(c.queries >= 1, "queries must be >= 1");
    need(!c.m_grid.empty(), "m_grid is empty");
    for (int v : c.m_grid) need(v >= 1, "m_grid values must be >= 1");
    need(!c.eps_grid.empty(), "eps_grid is empty");
    for (double v : c.eps_grid) need(v > 0.0, "eps_grid values must be positive");
    need(c.bound_draws >= 1, "bound_draws must be >= 1");
    need(c.tail_draws >= 2, "tail_draws must be >= 2");
    need(c.tail_m >= 1, "tail_m must be >= 1");
    need(c.jobs >= 1, "jobs must be >= 1");
    need(!c.output_dir.empty(), "output_dir is empty");
    if (c.subcommand == "simulate") {
        need(c.probes.size() == 1, "simulate takes a single probes value");
        if (c.tighter) {
            for (const auto& p : c.policy) need(p == "gloc", "tighter applies to policy gloc only");
        }
    }
    if (c.subcommand == "iprod-bench") need(c.d >= 2, "iprod-bench needs d >= 2");
}

inline HashSettings hash_settings(const ExperimentConfig& c)
{
    HashSettings h;
    h.enabled = c.hash;
    h.k = c.k;
    h.U = c.U;
    h.probes = c.probes.front();
    h.dot = {c.dot_mode == "exact" ? DotMode::exact : DotMode::l1_sampled, c.m};
    h.rebuild_every = c.rebuild_every;
    h.scope = c.probe_scope == "global" ? ProbeScope::global : ProbeScope::per_table;
    return h;
}

inline SimConfig sim_config(const ExperimentConfig& c, const std::string& policy)
{
    SimConfig s;
    s.family = c.family;
    s.policy = policy_from_name(policy);
    s.d = c.d;
    s.N = c.N;
    s.T = c.T;
    s.delta = c.delta;
    s.lambda = c.lambda;
    s.eps = c.eps;
    s.S = c.S;
    s.c0 = c.c0;
    s.R = c.R;
    s.radius = c.radius == "paper_theory" ? RadiusRule{RadiusKind::paper_theory, 1.0}
                                          : RadiusRule{RadiusKind::tuned, c.c_grid.front()};
    if (c.mbar == "eig") s.mbar = MbarMode::eig;
    if (c.mbar == "bound") s.mbar = MbarMode::bound;
    if (c.mbar == "greedy") s.mbar = MbarMode::greedy;
    s.tighter = c.tighter;
    s.noise_scale = c.noise_scale;
    s.record_timing = c.timing;
    s.seed = c.seed;
    s.hash = hash_settings(c);
    s.hash.enabled = false;
    return s;
}

// ---------------------------------------------------------------------------
// Output

/// Writes via a temporary file and rename so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot rename '" + tmp.string() + "': " + ec.message());
}

struct AggregateRow {
    std::string algo;
    int t = 0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n = 0;
};

/// Mean and 95% normal-approximation interval of cum_regret per (algo, t).
inline std::vector<AggregateRow> aggregate(const std::vector<RegretTrace>& traces)
{
    std::vector<std::string> algos;
    for (const auto& tr : traces) {
        if (std::find(algos.begin(), algos.end(), tr.algo) == algos.end()) algos.push_back(tr.algo);
    }
    std::vector<AggregateRow> rows;
    for (const auto& a : algos) {
        std::vector<const RegretTrace*> group;
        for (const auto& tr : traces) {
            if (tr.algo == a) group.push_back(&tr);
        }
        const std::size_t len = group.front()->cum_regret.size();
        for (std::size_t t = 0; t < len; ++t) {
            double sum = 0.0;
            for (const auto* g : group) sum += g->cum_regret[t];
            const double n = static_cast<double>(group.size());
            const double mean = sum / n;
            double ss = 0.0;
            for (const auto* g : group) ss += (g->cum_regret[t] - mean) * (g->cum_regret[t] - mean);
            const double sd = group.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            const double half = 1.96 * sd / std::sqrt(n);
            rows.push_back({a, static_cast<int>(t + 1), mean, mean - half, mean + half, static_cast<int>(group.size())});
        }
    }
    return rows;
}

inline std::string regret_csv(const std::vector<RegretTrace>& traces)
{
    std::string out = "algo,trial,t,cum_regret,wall_ms,candidates_frac\n";
    for (const auto& tr : traces) {
        for (std::size_t t = 0; t < tr.cum_regret.size(); ++t) {
            out += tr.algo;
            out += ',';
            out += std::to_string(tr.trial);
            out += ',';
            out += std::to_string(t + 1);
            out += ',';
            out += fmt_num(tr.cum_regret[t]);
            out += ',';
            out += fmt_num(tr.wall_ms[t]);
            out += ',';
            if (t < tr.candidates_frac.size()) out += fmt_num(tr.candidates_frac[t]);
            out += '\n';
        }
    }
    return out;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows)
{
    std::string out = "algo,t,mean,ci95_low,ci95_high,n\n";
    for (const auto& r : rows) {
        out += r.algo + "," + std::to_string(r.t) + "," + fmt_num(r.mean) + "," + fmt_num(r.ci_low) + "," +
               fmt_num(r.ci_high) + "," + std::to_string(r.n) + "\n";
    }
    return out;
}

inline std::string plot_dat(const std::vector<AggregateRow>& rows, const std::string& algo)
{
    std::string out = "# t mean_cum_regret (" + algo + ")\n";
    for (const auto& r : rows) {
        if (r.algo == algo) out += std::to_string(r.t) + " " + fmt_num(r.mean) + "\n";
    }
    return out;
}

inline nlohmann::ordered_json manifest_json(const ExperimentConfig& c, const std::vector<std::string>& files)
{
    nlohmann::ordered_json j;
    j["tool"] = "glb";
    j["version"] = GLB_VERSION;
    j["subcommand"] = c.subcommand;
    j["seed"] = c.seed;
    nlohmann::ordered_json cfg;
    for (const auto& k : config_keys()) cfg[k.name] = k.get(c);
    j["config"] = cfg;
    j["files"] = files;
    return j;
}

struct RunOutput {
    std::vector<std::string> files;
    std::string summary;
};

inline void emit(const std::filesystem::path& dir, RunOutput& out, const std::string& name, const std::string& body)
{
    write_file_atomic(dir / name, body);
    out.files.push_back(name);
}

inline void finish_run(const ExperimentConfig& c, const std::filesystem::path& dir, RunOutput& out)
{
    emit(dir, out, "config.conf", config_to_text(c));
    auto files = out.files;
    files.push_back("manifest.json");
    write_file_atomic(dir / "manifest.json", manifest_json(c, files).dump(2) + "\n");
    out.files = files;
}

// ---------------------------------------------------------------------------
// Drivers

inline RunOutput run_simulate(const ExperimentConfig& c)
{
    namespace fs = std::filesystem;
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    RunOutput out;
    std::ostringstream summary;

    std::vector<RegretTrace> all;
    std::string tuning = "algo,c,mean_final_regret\n";
    bool tuned_any = false;
    for (const auto& p : c.policy) {
        SimConfig s = sim_config(c, p);
        if (s.radius.kind == RadiusKind::tuned && c.c_grid.size() > 1) {
            const TuningResult tr = tune_radius(s, c.c_grid, c.trials, c.jobs);
            tuned_any = true;
            for (std::size_t i = 0; i < tr.grid.size(); ++i) {
                tuning += algo_name(s) + "," + fmt_num(tr.grid[i]) + "," + fmt_num(tr.mean_final[i]) + "\n";
            }
            s.radius.c = tr.best_c;
            summary << algo_name(s) << ": best c = " << fmt_num(tr.best_c) << ", mean final regret "
                    << fmt_num(mean_final_regret(tr.best_traces)) << "\n";
            all.insert(all.end(), tr.best_traces.begin(), tr.best_traces.end());
        } else {
            auto traces = run_trials(s, c.trials, c.jobs);
            summary << algo_name(s) << ": mean final regret " << fmt_num(mean_final_regret(traces)) << "\n";
            all.insert(all.end(), traces.begin(), traces.end());
        }
        // hashed variant reuses the radius picked for the exact one
        if (c.hash && (s.policy == Policy::qgloc || s.policy == Policy::gloc_ts)) {
            s.hash.enabled = true;
            auto traces = run_trials(s, c.trials, c.jobs);
            double frac = 0.0;
            std::size_t n = 0;
            for (const auto& tr : traces) {
                for (double f : tr.candidates_frac) {
                    frac += f;
                    ++n;
                }
            }
            summary << algo_name(s) << ": mean final regret " << fmt_num(mean_final_regret(traces))
                    << ", mean candidates_frac " << fmt_num(n ? frac / n : 0.0) << "\n";
            all.insert(all.end(), traces.begin(), traces.end());
        }
    }

    const auto rows = aggregate(all);
    emit(dir, out, "regret.csv", regret_csv(all));
    emit(dir, out, "aggregate.csv", aggregate_csv(rows));
    std::vector<std::string> algos;
    for (const auto& r : rows) {
        if (algos.empty() || algos.back() != r.algo) algos.push_back(r.algo);
    }
    for (const auto& a : algos) emit(dir, out, "plot_" + a + ".dat", plot_dat(rows, a));
    if (tuned_any) emit(dir, out, "tuning.csv", tuning);
    finish_run(c, dir, out);
    out.summary = summary.str();
    return out;
}

inline RunOutput run_hash_bench(const ExperimentConfig& c)
{
    namespace fs = std::filesystem;
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    RunOutput out;

    Rng data_rng = make_stream(c.seed, 0, Stream::instance);
    Rng hash_rng = make_stream(c.seed, 0, Stream::hashing);
    Mat X(c.N, c.d);
    for (int i = 0; i < c.N; ++i) X.row(i) = random_unit_vector(c.d, data_rng).transpose();
    std::vector<Vec> queries;
    for (int qi = 0; qi < c.queries; ++qi) queries.push_back(random_unit_vector(c.d, data_rng));

    const HashIndex index(std::make_shared<const Mat>(X), c.k, c.U, hash_rng);
    const HashSettings hs = hash_settings(c);

    std::string csv = "k,U,probes,query,ip_ratio,candidates_frac\n";
    std::ostringstream summary;
    for (int probes : c.probes) {
        int good = 0;
        double frac_sum = 0.0;
        for (int qi = 0; qi < c.queries; ++qi) {
            const Vec& q = queries[static_cast<std::size_t>(qi)];
            const Vec all = X * q;
            const double best = all.maxCoeff();
            QueryResult r = index.query(q, probes, hs.dot, hash_rng, hs.scope);
            double frac = static_cast<double>(r.candidates) / c.N;
            if (!r.found()) {
                r = exact_scan(c.N, [&](int i) { return all(i); });
                frac = 1.0;
            }
            const double ratio = r.best_score / best;
            if (ratio >= 0.9) ++good;
            frac_sum += frac;
            csv += std::to_string(c.k) + "," + std::to_string(c.U) + "," + std::to_string(probes) + "," +
                   std::to_string(qi) + "," + fmt_num(ratio) + "," + fmt_num(frac) + "\n";
        }
        summary << "probes=" << probes << ": ip_ratio>=0.9 on " << fmt_num(static_cast<double>(good) / c.queries)
                << " of queries, mean candidates_frac " << fmt_num(frac_sum / c.queries) << "\n";
    }
    emit(dir, out, "recall.csv", csv);
    finish_run(c, dir, out);
    out.summary = summary.str();
    return out;
}

inline RunOutput run_iprod_bench(const ExperimentConfig& c)
{
    namespace fs = std::filesystem;
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    RunOutput out;
    std::ostringstream summary;

    Rng rng = make_stream(c.seed, 0, Stream::instance);
    const VarianceStudy st = gaussian_variance_study(c.d, c.trials, rng);
    std::string var_csv = "scheme,d,trial,variance\n";
    for (int t = 0; t < st.trials; ++t) {
        var_csv += "l1," + std::to_string(c.d) + "," + std::to_string(t) + "," +
                   fmt_num(st.var_l1[static_cast<std::size_t>(t)]) + "\n";
    }
    for (int t = 0; t < st.trials; ++t) {
        var_csv += "l2," + std::to_string(c.d) + "," + std::to_string(t) + "," +
                   fmt_num(st.var_l2[static_cast<std::size_t>(t)]) + "\n";
    }
    summary << "d=" << c.d << ": mean variance / d^2  l1 " << fmt_num(st.mean_l1) << "  l2 " << fmt_num(st.mean_l2)
            << ", fraction l1 < l2 " << fmt_num(st.frac_l1_smaller) << "\n";
    emit(dir, out, "variance.csv", var_csv);

    // one Gaussian (q, a) for the bound comparison
    Vec q = standard_normal_vector(c.d, rng);
    Vec a = standard_normal_vector(c.d, rng);
    const double truth = q.dot(a);
    const SamplingScheme s1(SamplingKind::l1, q);
    const SamplingScheme s2(SamplingKind::l2, q);
    std::string bounds = "scheme,m,eps,bound,empirical_fail\n";
    for (int m : c.m_grid) {
        for (double e : c.eps_grid) {
            int f1 = 0;
            int f2 = 0;
            for (int i = 0; i < c.bound_draws; ++i) {
                if (std::abs(s1.sampled_dot(a, m, rng) - truth) >= e) ++f1;
                if (std::abs(s2.sampled_dot(a, m, rng) - truth) >= e) ++f2;
            }
            const double e1 = static_cast<double>(f1) / c.bound_draws;
            const double e2 = static_cast<double>(f2) / c.bound_draws;
            const std::string tail = std::to_string(m) + "," + fmt_num(e) + ",";
            bounds += "l1_hoeffding," + tail + fmt_num(l1_hoeffding_bound(q, a, m, e)) + "," + fmt_num(e1) + "\n";
            bounds += "l2_chebyshev," + tail + fmt_num(l2_chebyshev_bound(q, a, m, e)) + "," + fmt_num(e2) + "\n";
            bounds += "l2_exponential," + tail + fmt_num(l2_exponential_bound(q, a, m, e)) + "," + fmt_num(e2) + "\n";
        }
    }
    emit(dir, out, "bounds.csv", bounds);

    const TailSample ts = tail_comparison(c.d, c.tail_draws, c.tail_m, rng);
    std::string tails = "scheme,draw,error\n";
    for (std::size_t i = 0; i < ts.err_l1.size(); ++i) tails += "l1," + std::to_string(i) + "," + fmt_num(ts.err_l1[i]) + "\n";
    for (std::size_t i = 0; i < ts.err_l2_scaled.size(); ++i) {
        tails += "l2_scaled," + std::to_string(i) + "," + fmt_num(ts.err_l2_scaled[i]) + "\n";
    }
    summary << "tail sample: l2 errors scaled by " << fmt_num(ts.l2_scale) << "\n";
    emit(dir, out, "tails.csv", tails);

    finish_run(c, dir, out);
    out.summary = summary.str();
    return out;
}

inline RunOutput run(const ExperimentConfig& c)
{
    validate(c);
    if (c.subcommand == "simulate") return run_simulate(c);
    if (c.subcommand == "hash-bench") return run_hash_bench(c);
    return run_iprod_bench(c);
}

}  // namespace glb
