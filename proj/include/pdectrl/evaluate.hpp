#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pdectrl/backstepping.hpp"
#include "pdectrl/deeponet.hpp"
#include "pdectrl/pde_env.hpp"
#include "pdectrl/sac.hpp"

namespace pdectrl {

struct EvalSummary {
    double overshoot = 0.0;           // max recorded norm / initial norm
    double convergence_time = 0.0;    // first t with norm <= 0.1 * initial; +inf if never
    double steady_state_error = 0.0;  // mean norm over the final 10% of the horizon
    double total_effort = 0.0;        // sum of |applied action|
    bool truncated = false;           // episode ended on the blow-up guard
};

// Row k holds the pre-step norm at t_k and the action applied there; the
// final row holds the terminal norm with no control (NaN).
struct EvalTrace {
    std::vector<double> t;
    std::vector<double> l2_norm;
    std::vector<double> control;
    EvalSummary summary;
};

using ControlFn = std::function<double(const StateField&)>;

// Resets env to the constant profile u0 and rolls the controller through one
// episode under the env's zero-order hold, stopping early on blow-up.
EvalTrace run_controller(Env& env, double u0, const ControlFn& controller);

// The kernel is solved for design_coeff, which under the model-mismatch
// protocol may differ from the coefficient the env actually runs.
ControlFn make_backstepping_controller(const CoefficientFn& design_coeff, const Grid& grid);
ControlFn make_deeponet_controller(const DeepONet& model, std::vector<double> coeff);
ControlFn make_agent_controller(const Agent& agent, std::vector<double> coeff);

// Deterministic rollout of the agent (action = bound * tanh(mean)) on env's
// own coefficient.
EvalTrace evaluate_policy(const Agent& agent, Env& env, double u0);

// CSV with "# key=value" header lines then t,l2_norm,control rows (%.17g,
// NaN cells empty).
void write_trace_csv(const std::string& path, const EvalTrace& trace,
                     const std::vector<std::pair<std::string, std::string>>& header);

// JSON object {controller: {overshoot, convergence_time, ...}}; non-finite
// values serialize as null.
void write_summary_json(const std::string& path,
                        const std::vector<std::pair<std::string, EvalSummary>>& summaries);

}  // namespace pdectrl
