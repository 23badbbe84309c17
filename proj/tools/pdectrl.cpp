#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdectrl/config.hpp"
#include "pdectrl/dataset.hpp"
#include "pdectrl/deeponet.hpp"
#include "pdectrl/errors.hpp"
#include "pdectrl/evaluate.hpp"
#include "pdectrl/kernels.hpp"
#include "pdectrl/sac.hpp"

namespace fs = std::filesystem;
using namespace pdectrl;

namespace {

std::string now_utc() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

void ensure_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::string csv_cell(double v) { return std::isnan(v) ? std::string() : format_g17(v); }

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
}

void require_path(const std::string& value, const std::string& what) {
    if (value.empty()) {
        throw ConfigError("[paths] " + what + " is required for this command");
    }
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;  // overrides [paths] out_dir when set
    std::int64_t seed = -1;
};

ExperimentConfig load_config(CommonArgs& args) {
    ExperimentConfig config = load_experiment_config(args.config_path);
    if (!args.out_dir.empty()) config.paths.out_dir = args.out_dir;
    fs::create_directories(config.paths.out_dir);
    return config;
}

std::string out_file(const ExperimentConfig& config, const std::string& name) {
    return (fs::path(config.paths.out_dir) / name).string();
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(CommonArgs& args, bool dry_run) {
    ExperimentConfig config = load_config(args);
    GenOptions gen = config.dataset;
    if (args.seed >= 0) gen.seed = static_cast<std::uint64_t>(args.seed);

    const auto steps = static_cast<std::size_t>(std::llround(gen.horizon / gen.dt));
    const std::size_t spr =
        gen.record_every > 0 ? (steps + gen.record_every - 1) / gen.record_every : 0;
    const std::size_t rollouts = gen.n_coeffs * gen.n_inits;
    if (dry_run) {
        std::cout << "planned rollouts: " << rollouts << " (" << gen.n_coeffs
                  << " coefficients x " << gen.n_inits << " initial conditions)\n";
        std::cout << "planned samples: " << rollouts * spr << " (" << spr << " per rollout)\n";
        return 0;
    }
    require_path(config.paths.dataset_train, "dataset_train");
    require_path(config.paths.dataset_test, "dataset_test");

    GenReport report;
    Dataset data = generate_dataset(gen, &report);
    Rng split_rng(derive_seed(gen.seed, 1));
    auto [train, test] = shuffle_split(data, config.train_fraction, split_rng);
    ensure_parent(config.paths.dataset_train);
    ensure_parent(config.paths.dataset_test);
    dataset_write(train, config.paths.dataset_train);
    dataset_write(test, config.paths.dataset_test);

    std::string skipped = "none";
    if (!report.skipped_gammas.empty()) {
        skipped.clear();
        for (std::size_t i = 0; i < report.skipped_gammas.size(); ++i) {
            if (i) skipped += ",";
            skipped += format_g17(report.skipped_gammas[i]);
        }
    }
    std::vector<std::string> lines;
    lines.push_back("total_samples=" + std::to_string(data.count()));
    lines.push_back("train_samples=" + std::to_string(train.count()));
    lines.push_back("test_samples=" + std::to_string(test.count()));
    lines.push_back("rollouts=" + std::to_string(report.rollouts));
    lines.push_back("max_abs_control=" + format_g17(data.max_abs_control));
    lines.push_back("skipped_gammas=" + skipped);

    std::ofstream rep(out_file(config, "gen_report.txt"));
    if (!rep) throw ConfigError("cannot write generation report");
    for (const std::string& line : lines) {
        rep << line << "\n";
        std::cout << line << "\n";
    }
    std::cout << "wrote " << config.paths.dataset_train << " and " << config.paths.dataset_test
              << "\n";
    return 0;
}

// ---------------------------------------------------------- train-deeponet

int cmd_train_deeponet(CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    require_path(config.paths.dataset_train, "dataset_train");
    require_path(config.paths.dataset_test, "dataset_test");
    require_path(config.paths.deeponet, "deeponet");
    const Dataset train = dataset_read(config.paths.dataset_train);
    const Dataset test = dataset_read(config.paths.dataset_test);
    if (train.kind != config.benchmark) {
        throw ConfigError("dataset benchmark does not match the config benchmark");
    }

    std::uint64_t seed = config.deeponet_seed;
    if (args.seed >= 0) seed = static_cast<std::uint64_t>(args.seed);
    Rng rng(seed);
    DeepONet model = make_deeponet(config.benchmark, train.n_points, config.operator_arch, rng);

    PretrainOptions options = config.pretrain;
    options.on_epoch = [](std::size_t epoch, double train_mse, double test_mse) {
        std::cout << "epoch " << epoch << ": train_mse=" << format_g17(train_mse)
                  << " test_mse=" << format_g17(test_mse) << "\n";
    };
    const PretrainReport report = pretrain(model, train, test, options, rng);

    ensure_parent(config.paths.deeponet);
    deeponet_save(model, config.paths.deeponet);

    std::ofstream csv(out_file(config, "pretrain_report.csv"));
    if (!csv) throw ConfigError("cannot write pretrain report");
    csv << "# generated_at=" << now_utc() << "\n";
    for (const auto& [k, v] : config_header_pairs(config)) csv << "# " << k << "=" << v << "\n";
    csv << "# seed=" << seed << "\n";
    csv << "epoch,train_mse,test_mse\n";
    for (std::size_t e = 0; e < report.train_mse.size(); ++e) {
        csv << e << "," << format_g17(report.train_mse[e]) << ","
            << format_g17(report.test_mse[e]) << "\n";
    }
    csv << "# final_rel_l2=" << format_g17(report.final_rel_l2) << "\n";
    std::cout << "final_rel_l2=" << format_g17(report.final_rel_l2) << "\n";
    std::cout << "wrote " << config.paths.deeponet << "\n";
    return 0;
}

// ---------------------------------------------------------------- train-rl

struct VariantInfo {
    ExtractorKind kind;
    const char* name;
};

VariantInfo variant_info(const std::string& variant) {
    if (variant == "sac") return {ExtractorKind::flatten, "sac"};
    if (variant == "nosac") return {ExtractorKind::deeponet_random, "nosac"};
    if (variant == "nosac_training") return {ExtractorKind::deeponet_pretrained, "nosac_training"};
    throw ConfigError("unknown variant: " + variant +
                      " (expected sac, nosac, or nosac_training)");
}

const std::string& agent_path_for(const ExperimentConfig& config, const std::string& name) {
    if (name == "sac") return config.paths.agent_sac;
    if (name == "nosac") return config.paths.agent_nosac;
    return config.paths.agent_nosac_training;
}

int cmd_train_rl(CommonArgs& args, const std::string& variant) {
    ExperimentConfig config = load_config(args);
    const VariantInfo info = variant_info(variant);
    const std::string& agent_path = agent_path_for(config, info.name);
    require_path(agent_path, std::string("agent_") + info.name);

    SacConfig sac = config.sac;
    sac.extractor = info.kind;
    if (args.seed >= 0) sac.seed = static_cast<std::uint64_t>(args.seed);
    if (info.kind == ExtractorKind::deeponet_pretrained) {
        require_path(config.paths.deeponet, "deeponet");
        if (!fs::exists(config.paths.deeponet)) {
            throw ConfigError("pretrained checkpoint not found: " + config.paths.deeponet);
        }
        sac.pretrained_path = config.paths.deeponet;
    }

    EnvConfig env_config = config.env;
    env_config.action_bound = resolve_action_bound(config);
    Env env(env_config);

    SacResult result = sac_train(env, sac);

    const std::string metrics_path = out_file(
        config, "metrics_" + std::string(info.name) + "_seed" + std::to_string(sac.seed) + ".csv");
    std::ofstream csv(metrics_path);
    if (!csv) throw ConfigError("cannot write metrics file: " + metrics_path);
    csv << "# generated_at=" << now_utc() << "\n";
    for (const auto& [k, v] : config_header_pairs(config)) csv << "# " << k << "=" << v << "\n";
    csv << "# variant=" << info.name << "\n";
    csv << "# resolved_action_bound=" << format_g17(env_config.action_bound) << "\n";
    csv << "step,episode,episodic_return,critic1_loss,critic2_loss,actor_loss,buffer_size\n";
    for (const MetricsRow& row : result.metrics) {
        csv << row.step << "," << row.episode << "," << csv_cell(row.episodic_return) << ","
            << csv_cell(row.critic1_loss) << "," << csv_cell(row.critic2_loss) << ","
            << csv_cell(row.actor_loss) << "," << row.buffer_size << "\n";
    }
    ensure_parent(agent_path);
    agent_save(result.agent, agent_path);
    std::cout << "episodes=" << result.episodes << "\n";
    std::cout << "wrote " << metrics_path << " and " << agent_path << "\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    require_path(config.paths.agent_sac, "agent_sac");
    require_path(config.paths.agent_nosac, "agent_nosac");
    require_path(config.paths.agent_nosac_training, "agent_nosac_training");
    for (const std::string* p : {&config.paths.agent_sac, &config.paths.agent_nosac,
                                 &config.paths.agent_nosac_training}) {
        if (!fs::exists(*p)) throw ConfigError("agent checkpoint not found: " + *p);
    }
    const Agent agent_sac = agent_load(config.paths.agent_sac);
    const Agent agent_nosac = agent_load(config.paths.agent_nosac);
    const Agent agent_nosac_training = agent_load(config.paths.agent_nosac_training);

    EnvConfig env_config = config.env;
    env_config.action_bound = resolve_action_bound(config);
    if (config.eval.horizon > 0.0) env_config.horizon = config.eval.horizon;

    const Grid grid = make_grid(env_config.n_points);
    // The backstepping kernel stays designed at the training coefficient
    // (model-mismatch protocol); the data-driven controllers see the actual
    // eval coefficient through their inputs.
    const CoefficientFn design =
        sample_coefficient(config.benchmark, config.env.gamma, grid);
    const ControlFn backstepping = make_backstepping_controller(design, grid);

    for (const Agent* agent : {&agent_sac, &agent_nosac, &agent_nosac_training}) {
        if (agent->n_points != env_config.n_points) {
            throw ConfigError("agent checkpoint grid does not match the config");
        }
        if (agent->config.benchmark != config.benchmark) {
            throw ConfigError("agent checkpoint benchmark does not match the config");
        }
    }

    const std::string stamp = now_utc();
    for (const double gamma_eval : config.eval.gammas) {
        EnvConfig ec = env_config;
        ec.gamma = gamma_eval;
        Env env(ec);
        const std::vector<double>& eval_coeff = env.coeff().samples;
        std::vector<std::pair<std::string, ControlFn>> controllers;
        controllers.emplace_back("backstepping", backstepping);
        controllers.emplace_back("sac", make_agent_controller(agent_sac, eval_coeff));
        controllers.emplace_back("nosac", make_agent_controller(agent_nosac, eval_coeff));
        controllers.emplace_back("nosac_training",
                                 make_agent_controller(agent_nosac_training, eval_coeff));

        for (const double u0 : config.eval.u0) {
            const std::string tag = "eval_" + std::string(benchmark_name(config.benchmark)) +
                                    "_gamma" + short_num(gamma_eval) + "_u0" + short_num(u0);
            std::vector<std::pair<std::string, EvalSummary>> summaries;
            for (const auto& [name, controller] : controllers) {
                const EvalTrace trace = run_controller(env, u0, controller);
                std::vector<std::pair<std::string, std::string>> header;
                header.emplace_back("generated_at", stamp);
                header.emplace_back("controller", name);
                header.emplace_back("gamma_eval", format_g17(gamma_eval));
                header.emplace_back("gamma_train", format_g17(config.env.gamma));
                header.emplace_back("u0", format_g17(u0));
                header.emplace_back("horizon", format_g17(ec.horizon));
                write_trace_csv(out_file(config, tag + "_" + name + ".csv"), trace, header);
                summaries.emplace_back(name, trace.summary);
                std::cout << tag << " " << name
                          << ": overshoot=" << format_g17(trace.summary.overshoot)
                          << " convergence_time=" << format_g17(trace.summary.convergence_time)
                          << " steady_state_error="
                          << format_g17(trace.summary.steady_state_error)
                          << " total_effort=" << format_g17(trace.summary.total_effort)
                          << (trace.summary.truncated ? " (truncated)" : "") << "\n";
            }
            write_summary_json(out_file(config, tag + "_summary.json"), summaries);
        }
    }
    return 0;
}

// ------------------------------------------------- simulate-backstepping

int cmd_simulate_backstepping(CommonArgs& args, const std::string& controller_sel,
                              const std::string& dump_kernel) {
    ExperimentConfig config = load_config(args);
    if (controller_sel != "backstepping" && controller_sel != "deeponet" &&
        controller_sel != "both") {
        throw ConfigError("unknown --controller value: " + controller_sel);
    }

    EnvConfig env_config = config.env;
    if (env_config.action_bound <= 0.0) {
        try {
            env_config.action_bound = resolve_action_bound(config);
        } catch (const ConfigError&) {
            // No dataset yet at this pipeline stage: simulate unclamped.
            env_config.action_bound = 1e9;
        }
    }
    if (config.eval.horizon > 0.0) env_config.horizon = config.eval.horizon;
    Env env(env_config);
    const Grid& grid = env.grid();
    const CoefficientFn& coeff = env.coeff();

    if (!dump_kernel.empty()) {
        ensure_parent(dump_kernel);
        std::ofstream out(dump_kernel);
        if (!out) throw ConfigError("cannot write kernel dump: " + dump_kernel);
        if (config.benchmark == Benchmark::hyperbolic) {
            const HyperbolicKernel kernel = solve_hyperbolic_kernel(coeff, grid);
            out << "# residual=" << format_g17(kernel.residual) << "\n";
            out << "x,F\n";
            for (std::size_t i = 0; i < kernel.F.size(); ++i) {
                out << format_g17(grid_x(grid, i)) << "," << format_g17(kernel.F[i]) << "\n";
            }
        } else {
            const ParabolicKernel kernel = solve_parabolic_kernel(coeff, grid);
            out << "# residual=" << format_g17(kernel.residual) << "\n";
            out << "y,gain\n";
            for (std::size_t i = 0; i < kernel.gain_row.size(); ++i) {
                out << format_g17(grid_x(grid, i)) << "," << format_g17(kernel.gain_row[i])
                    << "\n";
            }
        }
        std::cout << "wrote " << dump_kernel << "\n";
    }

    std::vector<std::pair<std::string, ControlFn>> controllers;
    if (controller_sel == "backstepping" || controller_sel == "both") {
        controllers.emplace_back("backstepping", make_backstepping_controller(coeff, grid));
    }
    DeepONet model;
    if (controller_sel == "deeponet" || controller_sel == "both") {
        require_path(config.paths.deeponet, "deeponet");
        if (!fs::exists(config.paths.deeponet)) {
            throw ConfigError("operator checkpoint not found: " + config.paths.deeponet);
        }
        model = deeponet_load(config.paths.deeponet);
        if (model.n_points != grid.n_points) {
            throw ConfigError("operator checkpoint grid does not match the config");
        }
        controllers.emplace_back("deeponet", make_deeponet_controller(model, coeff.samples));
    }

    const std::string stamp = now_utc();
    for (const double u0 : config.eval.u0) {
        for (const auto& [name, controller] : controllers) {
            const EvalTrace trace = run_controller(env, u0, controller);
            std::vector<std::pair<std::string, std::string>> header;
            header.emplace_back("generated_at", stamp);
            header.emplace_back("controller", name);
            header.emplace_back("gamma", format_g17(env_config.gamma));
            header.emplace_back("u0", format_g17(u0));
            const std::string path = out_file(
                config, "sim_" + std::string(benchmark_name(config.benchmark)) + "_u0" +
                            short_num(u0) + "_" + name + ".csv");
            write_trace_csv(path, trace, header);
            std::cout << "u0=" << short_num(u0) << " " << name
                      << ": final_norm=" << format_g17(trace.l2_norm.back())
                      << " max_abs_control=" << format_g17([&] {
                             double m = 0.0;
                             for (double a : trace.control) {
                                 if (std::isfinite(a)) m = std::max(m, std::abs(a));
                             }
                             return m;
                         }())
                      << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backstepping, operator-learning and RL control of unstable 1D PDEs"};
    app.require_subcommand(1);

    CommonArgs args;
    bool dry_run = false;
    std::string variant;
    std::string controller_sel = "backstepping";
    std::string dump_kernel;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "experiment config file")->required();
        cmd->add_option("--seed", args.seed, "override the stage seed");
        cmd->add_option("--out", args.out_dir, "override [paths] out_dir");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate backstepping rollout datasets");
    add_common(gen);
    gen->add_flag("--dry-run", dry_run, "print planned work without writing");

    CLI::App* don = app.add_subcommand("train-deeponet", "pretrain the operator surrogate");
    add_common(don);

    CLI::App* rl = app.add_subcommand("train-rl", "train a SAC variant");
    add_common(rl);
    rl->add_option("--variant", variant, "sac | nosac | nosac_training")->required();

    CLI::App* ev = app.add_subcommand("evaluate", "compare the four controllers");
    add_common(ev);

    CLI::App* sim =
        app.add_subcommand("simulate-backstepping", "closed-loop model-based simulation");
    add_common(sim);
    sim->add_option("--controller", controller_sel, "backstepping | deeponet | both");
    sim->add_option("--dump-kernel", dump_kernel, "also write the solved kernel as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(args, dry_run);
        if (don->parsed()) return cmd_train_deeponet(args);
        if (rl->parsed()) return cmd_train_rl(args, variant);
        if (ev->parsed()) return cmd_evaluate(args);
        if (sim->parsed()) return cmd_simulate_backstepping(args, controller_sel, dump_kernel);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
