#include "pdectrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pdectrl/errors.hpp"

namespace pdectrl {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string item;
    std::stringstream ss(value);
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    return parts;
}

}  // namespace

Ini Ini::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

Ini Ini::parse_string(const std::string& text, const std::string& origin) {
    Ini ini;
    ini.origin_ = origin;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3) {
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header: " + t);
            }
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            }
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key = value, got: " + t);
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        bool replaced = false;
        for (Entry& entry : ini.entries_) {
            if (entry.section == section && entry.key == key) {
                entry.value = value;  // later assignment wins
                replaced = true;
                break;
            }
        }
        if (!replaced) ini.entries_.push_back(Entry{section, key, value, false});
    }
    return ini;
}

const Ini::Entry* Ini::find(const std::string& section, const std::string& key) const {
    for (const Entry& entry : entries_) {
        if (entry.section == section && entry.key == key) {
            entry.consumed = true;
            return &entry;
        }
    }
    return nullptr;
}

bool Ini::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Ini::get_string(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

std::string Ini::require_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) {
        const std::string where = section.empty() ? key : "[" + section + "] " + key;
        throw ConfigError(origin_ + ": missing required key " + where);
    }
    return e->value;
}

namespace {
double parse_double(const std::string& value, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
        throw ConfigError(where + ": not a number: " + value);
    }
    return v;
}

std::uint64_t parse_u64(const std::string& value, const std::string& where) {
    if (!value.empty() && value[0] == '-') {
        throw ConfigError(where + ": expected a non-negative integer, got: " + value);
    }
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') {
        throw ConfigError(where + ": not an integer: " + value);
    }
    return v;
}

std::string key_label(const std::string& origin, const std::string& section,
                      const std::string& key) {
    return origin + ": " + (section.empty() ? key : "[" + section + "] " + key);
}
}  // namespace

double Ini::get_double(const std::string& section, const std::string& key,
                       double fallback) const {
    const Entry* e = find(section, key);
    return e ? parse_double(e->value, key_label(origin_, section, key)) : fallback;
}

std::uint64_t Ini::get_u64(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const {
    const Entry* e = find(section, key);
    return e ? parse_u64(e->value, key_label(origin_, section, key)) : fallback;
}

bool Ini::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::string v = e->value;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key_label(origin_, section, key) + ": not a boolean: " + e->value);
}

std::vector<double> Ini::get_double_list(const std::string& section, const std::string& key,
                                         const std::vector<double>& fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    const std::string where = key_label(origin_, section, key);
    std::vector<double> out;
    for (const std::string& part : split_list(e->value)) {
        if (part.empty()) throw ConfigError(where + ": empty list item");
        out.push_back(parse_double(part, where));
    }
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

std::vector<std::size_t> Ini::get_size_list(const std::string& section, const std::string& key,
                                            const std::vector<std::size_t>& fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    const std::string where = key_label(origin_, section, key);
    std::vector<std::size_t> out;
    for (const std::string& part : split_list(e->value)) {
        if (part.empty()) throw ConfigError(where + ": empty list item");
        out.push_back(static_cast<std::size_t>(parse_u64(part, where)));
    }
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

void Ini::check_consumed() const {
    std::string unknown;
    for (const Entry& entry : entries_) {
        if (entry.consumed) continue;
        if (!unknown.empty()) unknown += ", ";
        unknown += entry.section.empty() ? entry.key : "[" + entry.section + "] " + entry.key;
    }
    if (!unknown.empty()) {
        throw ConfigError(origin_ + ": unknown config keys: " + unknown);
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_config_from_ini(Ini::parse_file(path));
}

ExperimentConfig experiment_config_from_ini(const Ini& ini) {
    ExperimentConfig config;
    config.benchmark = parse_benchmark(ini.require_string("", "benchmark"));

    EnvConfig& env = config.env;
    env.kind = config.benchmark;
    env.n_points = static_cast<std::size_t>(ini.get_u64("env", "n_points", 101));
    env.dt = ini.get_double("env", "dt", 1e-3);
    env.horizon = ini.get_double("env", "horizon", 5.0);
    env.steps_per_action = static_cast<int>(ini.get_u64("env", "steps_per_action", 50));
    env.gamma = ini.get_double("env", "gamma", 5.5);
    env.action_bound = ini.get_double("env", "action_bound", 0.0);
    env.blowup_limit = ini.get_double("env", "blowup_limit", 100.0);
    const std::string mode = ini.get_string("env", "reward_mode", "difference");
    if (mode == "difference") {
        env.reward.mode = RewardMode::difference;
    } else if (mode == "state_norm") {
        env.reward.mode = RewardMode::state_norm;
    } else {
        throw ConfigError("unknown reward_mode: " + mode);
    }
    env.reward.sigma = ini.get_double("env", "sigma", 10.0);
    env.reward.eta = ini.get_double("env", "eta", 100.0);
    env.reward.zeta = ini.get_double("env", "zeta", 0.2);
    env.u0_lo = ini.get_double("env", "u0_lo", 1.0);
    env.u0_hi = ini.get_double("env", "u0_hi", 10.0);

    GenOptions& ds = config.dataset;
    ds.kind = config.benchmark;
    ds.n_points = env.n_points;
    ds.dt = env.dt;
    ds.horizon = ini.get_double("dataset", "horizon", env.horizon);
    ds.record_every = static_cast<std::size_t>(ini.get_u64("dataset", "record_every", 50));
    ds.n_coeffs = static_cast<std::size_t>(ini.get_u64("dataset", "n_coeffs", 100));
    ds.n_inits = static_cast<std::size_t>(ini.get_u64("dataset", "n_inits", 60));
    ds.gamma_lo = ini.get_double("dataset", "gamma_lo", env.gamma);
    ds.gamma_hi = ini.get_double("dataset", "gamma_hi", env.gamma);
    if (ds.gamma_lo > ds.gamma_hi) {
        throw ConfigError("dataset gamma range is inverted: gamma_lo " +
                          format_g17(ds.gamma_lo) + " > gamma_hi " + format_g17(ds.gamma_hi));
    }
    ds.init_lo = env.u0_lo;
    ds.init_hi = env.u0_hi;
    ds.seed = ini.get_u64("dataset", "seed", 0);
    ds.threads = static_cast<std::size_t>(ini.get_u64("dataset", "threads", 0));
    config.train_fraction = ini.get_double("dataset", "train_fraction", 0.9);

    DeepONetConfig& arch = config.operator_arch;
    arch.latent = static_cast<std::size_t>(ini.get_u64("deeponet", "latent", 64));
    arch.branch_hidden = ini.get_size_list("deeponet", "branch_hidden", {128, 128});
    arch.trunk_hidden = ini.get_size_list("deeponet", "trunk_hidden", {64, 64});
    config.pretrain.epochs = static_cast<std::size_t>(ini.get_u64("deeponet", "epochs", 50));
    config.pretrain.batch_size =
        static_cast<std::size_t>(ini.get_u64("deeponet", "batch_size", 256));
    config.pretrain.lr = ini.get_double("deeponet", "lr", 1e-3);
    config.deeponet_seed = ini.get_u64("deeponet", "seed", 0);

    SacConfig& sac = config.sac;
    sac.benchmark = config.benchmark;
    sac.discount = ini.get_double("sac", "discount", 0.99);
    sac.alpha = ini.get_double("sac", "alpha", 0.2);
    sac.tau = ini.get_double("sac", "tau", 0.005);
    sac.actor_lr = ini.get_double("sac", "actor_lr", 3e-4);
    sac.critic_lr = ini.get_double("sac", "critic_lr", 3e-4);
    sac.batch_size = static_cast<std::size_t>(ini.get_u64("sac", "batch_size", 256));
    sac.capacity = static_cast<std::size_t>(ini.get_u64("sac", "capacity", 1000000));
    sac.total_steps = static_cast<std::size_t>(ini.get_u64("sac", "total_steps", 100000));
    sac.warmup_steps = static_cast<std::size_t>(ini.get_u64("sac", "warmup_steps", 1000));
    sac.grad_steps = static_cast<std::size_t>(ini.get_u64("sac", "grad_steps", 1));
    sac.actor_hidden = ini.get_size_list("sac", "actor_hidden", {256, 256});
    sac.critic_hidden = ini.get_size_list("sac", "critic_hidden", {256, 256});
    sac.truncation_bootstraps = ini.get_bool("sac", "truncation_bootstraps", false);
    sac.seed = ini.get_u64("sac", "seed", 0);
    sac.operator_config = arch;

    config.eval.gammas = ini.get_double_list("eval", "gammas", {env.gamma});
    config.eval.u0 = ini.get_double_list("eval", "u0", {9.0});
    config.eval.horizon = ini.get_double("eval", "horizon", 0.0);

    Paths& paths = config.paths;
    paths.dataset_train = ini.get_string("paths", "dataset_train", "");
    paths.dataset_test = ini.get_string("paths", "dataset_test", "");
    paths.deeponet = ini.get_string("paths", "deeponet", "");
    paths.agent_sac = ini.get_string("paths", "agent_sac", "");
    paths.agent_nosac = ini.get_string("paths", "agent_nosac", "");
    paths.agent_nosac_training = ini.get_string("paths", "agent_nosac_training", "");
    paths.out_dir = ini.get_string("paths", "out_dir", ".");

    ini.check_consumed();
    return config;
}

double derive_action_bound(const Dataset& header_source) {
    if (!(header_source.max_abs_control > 0.0)) {
        throw ConfigError("dataset header reports no positive max |U|; cannot derive the "
                          "action bound (set [env] action_bound explicitly)");
    }
    return std::ceil(1.5 * header_source.max_abs_control);
}

double resolve_action_bound(const ExperimentConfig& config) {
    if (config.env.action_bound > 0.0) return config.env.action_bound;
    if (config.paths.dataset_train.empty()) {
        throw ConfigError("[env] action_bound is unset and [paths] dataset_train is empty; "
                          "one of them is required");
    }
    return derive_action_bound(dataset_read_header(config.paths.dataset_train));
}

std::vector<std::pair<std::string, std::string>> config_header_pairs(
    const ExperimentConfig& config) {
    std::vector<std::pair<std::string, std::string>> kv;
    auto add = [&](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
    auto add_d = [&](const std::string& k, double v) { add(k, format_g17(v)); };
    auto add_u = [&](const std::string& k, std::uint64_t v) { add(k, std::to_string(v)); };
    auto add_list = [&](const std::string& k, const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(v[i]);
        }
        add(k, s);
    };
    add("benchmark", benchmark_name(config.benchmark));
    add_u("env.n_points", config.env.n_points);
    add_d("env.dt", config.env.dt);
    add_d("env.horizon", config.env.horizon);
    add_u("env.steps_per_action", static_cast<std::uint64_t>(config.env.steps_per_action));
    add_d("env.gamma", config.env.gamma);
    add_d("env.action_bound", config.env.action_bound);
    add_d("env.blowup_limit", config.env.blowup_limit);
    add("env.reward_mode",
        config.env.reward.mode == RewardMode::difference ? "difference" : "state_norm");
    add_d("env.sigma", config.env.reward.sigma);
    add_d("env.eta", config.env.reward.eta);
    add_d("env.zeta", config.env.reward.zeta);
    add_d("env.u0_lo", config.env.u0_lo);
    add_d("env.u0_hi", config.env.u0_hi);
    add_d("sac.discount", config.sac.discount);
    add_d("sac.alpha", config.sac.alpha);
    add_d("sac.tau", config.sac.tau);
    add_d("sac.actor_lr", config.sac.actor_lr);
    add_d("sac.critic_lr", config.sac.critic_lr);
    add_u("sac.batch_size", config.sac.batch_size);
    add_u("sac.capacity", config.sac.capacity);
    add_u("sac.total_steps", config.sac.total_steps);
    add_u("sac.warmup_steps", config.sac.warmup_steps);
    add_u("sac.grad_steps", config.sac.grad_steps);
    add_list("sac.actor_hidden", config.sac.actor_hidden);
    add_list("sac.critic_hidden", config.sac.critic_hidden);
    add("sac.truncation_bootstraps", config.sac.truncation_bootstraps ? "true" : "false");
    add_u("sac.seed", config.sac.seed);
    add_u("deeponet.latent", config.operator_arch.latent);
    add_list("deeponet.branch_hidden", config.operator_arch.branch_hidden);
    add_list("deeponet.trunk_hidden", config.operator_arch.trunk_hidden);
    return kv;
}

}  // namespace pdectrl
