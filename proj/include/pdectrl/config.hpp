#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdectrl/dataset.hpp"
#include "pdectrl/deeponet.hpp"
#include "pdectrl/pde_env.hpp"
#include "pdectrl/sac.hpp"

namespace pdectrl {

// Line-based sectioned config: optional top-level keys, then [section]
// headers with key = value pairs. '#' or ';' start a comment line. Unknown
// sections or keys are configuration errors.
class Ini {
  public:
    static Ini parse_file(const std::string& path);
    static Ini parse_string(const std::string& text, const std::string& origin);

    bool has(const std::string& section, const std::string& key) const;
    // Every get marks the key consumed; check_consumed reports leftovers.
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::string require_string(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<std::size_t> get_size_list(const std::string& section, const std::string& key,
                                           const std::vector<std::size_t>& fallback) const;
    void check_consumed() const;  // throws ConfigError listing unknown keys

  private:
    struct Entry {
        std::string section;
        std::string key;
        std::string value;
        mutable bool consumed = false;
    };
    const Entry* find(const std::string& section, const std::string& key) const;
    std::vector<Entry> entries_;
    std::string origin_;
};

struct EvalSection {
    std::vector<double> gammas;  // evaluation coefficients; defaults to the env gamma
    std::vector<double> u0{9.0};
    double horizon = 0.0;  // 0 = use the env horizon
};

struct Paths {
    std::string dataset_train;
    std::string dataset_test;
    std::string deeponet;
    std::string agent_sac;
    std::string agent_nosac;
    std::string agent_nosac_training;
    std::string out_dir = ".";
};

struct ExperimentConfig {
    Benchmark benchmark = Benchmark::hyperbolic;
    // env.action_bound == 0 means "derive ceil(1.5 * max|U|) from the
    // training dataset header" at the point of use.
    EnvConfig env;
    GenOptions dataset;
    double train_fraction = 0.9;
    DeepONetConfig operator_arch;
    PretrainOptions pretrain;
    std::uint64_t deeponet_seed = 0;
    SacConfig sac;
    EvalSection eval;
    Paths paths;
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_ini(const Ini& ini);

// ceil(1.5 * max_abs_control) from a dataset header, the default action bound.
double derive_action_bound(const Dataset& header_source);

// env.action_bound if set, else derived from the dataset at
// paths.dataset_train (reads only the header fields it needs).
double resolve_action_bound(const ExperimentConfig& config);

// All scalar settings as "key=value" pairs for metrics/trace CSV headers.
std::vector<std::pair<std::string, std::string>> config_header_pairs(
    const ExperimentConfig& config);

}  // namespace pdectrl
