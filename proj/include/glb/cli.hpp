#pragma once

// Command-line parsing for the glb tool. Precedence, lowest first:
// built-in defaults, GLB_SEED, --config file, command-line flags.

#include "experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace glb {

inline std::string flag_name(const std::string& key)
{
    std::string out = key;
    for (char& ch : out) {
        if (ch == '_') ch = '-';
    }
    return "--" + out;
}

struct CliParser {
    CLI::App app{"Generalized linear bandits: simulation, hashing and sampling benches", "glb"};
    std::string config_path;
    std::map<std::string, std::string> given;  // key -> raw flag value
    std::vector<CLI::App*> subs;

    CliParser()
    {
        app.require_subcommand(1);
        const std::vector<std::pair<std::string, std::string>> commands = {
            {"simulate", "run bandit policies on synthetic instances"},
            {"hash-bench", "retrieval quality of the MIPS hash index"},
            {"iprod-bench", "variance and tail bounds of sampled inner products"},
        };
        for (const auto& [name, help] : commands) {
            CLI::App* sub = app.add_subcommand(name, help);
            sub->add_option("--config", config_path, "key = value config file");
            for (const auto& key : config_keys()) {
                const std::string k = key.name;
                if (key.is_flag) {
                    sub->add_flag_callback(flag_name(k), [this, k] { given[k] = "true"; });
                } else {
                    sub->add_option_function<std::string>(flag_name(k), [this, k](const std::string& v) { given[k] = v; });
                }
            }
            subs.push_back(sub);
        }
    }

    /// Throws CLI::ParseError for command-line syntax errors and
    /// std::invalid_argument for bad values.
    ExperimentConfig parse(int argc, const char* const* argv)
    {
        app.parse(argc, argv);
        ExperimentConfig cfg;
        for (auto* s : subs) {
            if (s->parsed()) cfg.subcommand = s->get_name();
        }
        if (const char* env = std::getenv("GLB_SEED"); env && *env) {
            set_key(cfg, "seed", env);
        }
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        for (const auto& [k, v] : given) set_key(cfg, k, v);
        validate(cfg);
        return cfg;
    }
};

inline ExperimentConfig parse_config(int argc, const char* const* argv)
{
    CliParser p;
    return p.parse(argc, argv);
}

}  // namespace glb
