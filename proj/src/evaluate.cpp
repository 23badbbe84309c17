#include "pdectrl/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "pdectrl/errors.hpp"

namespace pdectrl {

EvalTrace run_controller(Env& env, double u0, const ControlFn& controller) {
    env.reset_to(u0);
    const double horizon = env.config().horizon;
    const double dx = env.grid().dx;
    EvalTrace trace;
    trace.t.reserve(static_cast<std::size_t>(env.episode_steps()) + 1);

    const double initial = l2_norm(env.state().values, dx);
    bool done = false;
    while (!done) {
        const double norm_now = l2_norm(env.state().values, dx);
        const double action = controller(env.state());
        trace.t.push_back(env.state().time);
        trace.l2_norm.push_back(norm_now);
        trace.control.push_back(action);
        const StepResult res = env.step(action);
        trace.summary.truncated = trace.summary.truncated || res.truncated_by_blowup;
        done = res.done;
    }
    trace.t.push_back(env.state().time);
    trace.l2_norm.push_back(l2_norm(env.state().values, dx));
    trace.control.push_back(std::numeric_limits<double>::quiet_NaN());

    EvalSummary& s = trace.summary;
    s.total_effort = env.record().action_abs_sum;
    double peak = 0.0;
    for (double v : trace.l2_norm) peak = std::max(peak, v);
    s.overshoot = initial > 0.0 ? peak / initial : std::numeric_limits<double>::infinity();
    s.convergence_time = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trace.t.size(); ++k) {
        if (trace.l2_norm[k] <= 0.1 * initial) {
            s.convergence_time = trace.t[k];
            break;
        }
    }
    double tail_sum = 0.0;
    std::size_t tail_n = 0;
    for (std::size_t k = 0; k < trace.t.size(); ++k) {
        if (trace.t[k] >= 0.9 * horizon - 1e-12) {
            tail_sum += trace.l2_norm[k];
            tail_n += 1;
        }
    }
    if (tail_n == 0) {
        // Truncated before the steady-state window: average the last tenth of
        // what was recorded so the summary stays finite.
        const std::size_t rows = trace.t.size();
        const std::size_t take = std::max<std::size_t>(1, rows / 10);
        for (std::size_t k = rows - take; k < rows; ++k) tail_sum += trace.l2_norm[k];
        tail_n = take;
    }
    s.steady_state_error = tail_sum / static_cast<double>(tail_n);
    return trace;
}

ControlFn make_backstepping_controller(const CoefficientFn& design_coeff, const Grid& grid) {
    const double dx = grid.dx;
    if (design_coeff.kind == Benchmark::hyperbolic) {
        HyperbolicKernel kernel = solve_hyperbolic_kernel(design_coeff, grid);
        return [kernel = std::move(kernel), dx](const StateField& s) {
            return backstepping_control(kernel, s.values, dx);
        };
    }
    ParabolicKernel kernel = solve_parabolic_kernel(design_coeff, grid);
    return [kernel = std::move(kernel), dx](const StateField& s) {
        return backstepping_control(kernel, s.values, dx);
    };
}

ControlFn make_deeponet_controller(const DeepONet& model, std::vector<double> coeff) {
    if (coeff.size() != model.n_points) {
        throw std::invalid_argument("deeponet controller: coefficient size mismatch");
    }
    return [&model, coeff = std::move(coeff)](const StateField& s) {
        return forward_scalar(model, coeff, s.values, 1.0);
    };
}

ControlFn make_agent_controller(const Agent& agent, std::vector<double> coeff) {
    if (agent.actor.ext.kind != ExtractorKind::flatten && coeff.size() != agent.n_points) {
        throw std::invalid_argument("agent controller: coefficient size mismatch");
    }
    return [&agent, coeff = std::move(coeff)](const StateField& s) {
        return deterministic_action(agent, coeff, s.values.data());
    };
}

EvalTrace evaluate_policy(const Agent& agent, Env& env, double u0) {
    return run_controller(env, u0, make_agent_controller(agent, env.coeff().samples));
}

void write_trace_csv(const std::string& path, const EvalTrace& trace,
                     const std::vector<std::pair<std::string, std::string>>& header) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open trace file for writing: " + path);
    for (const auto& [key, value] : header) out << "# " << key << "=" << value << "\n";
    out << "t,l2_norm,control\n";
    for (std::size_t k = 0; k < trace.t.size(); ++k) {
        out << format_g17(trace.t[k]) << "," << format_g17(trace.l2_norm[k]) << ",";
        if (std::isfinite(trace.control[k]) || std::isinf(trace.control[k])) {
            out << format_g17(trace.control[k]);
        }
        out << "\n";
    }
    out.flush();
    if (!out) throw ConfigError("failed writing trace file: " + path);
}

void write_summary_json(const std::string& path,
                        const std::vector<std::pair<std::string, EvalSummary>>& summaries) {
    nlohmann::ordered_json root;
    for (const auto& [name, s] : summaries) {
        nlohmann::ordered_json item;
        item["overshoot"] = s.overshoot;
        item["convergence_time"] = s.convergence_time;  // inf serializes as null
        item["steady_state_error"] = s.steady_state_error;
        item["total_effort"] = s.total_effort;
        item["truncated"] = s.truncated;
        root[name] = item;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open summary file for writing: " + path);
    out << root.dump(2) << "\n";
    out.flush();
    if (!out) throw ConfigError("failed writing summary file: " + path);
}

}  // namespace pdectrl
