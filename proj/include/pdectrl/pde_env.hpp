#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdectrl/numerics.hpp"

namespace pdectrl {

enum class Benchmark { hyperbolic, parabolic };

const char* benchmark_name(Benchmark kind);
Benchmark parse_benchmark(const std::string& name);

// Chebyshev-form coefficient: samples[i] = A * cos(gamma * arccos(x_i)),
// A = 5 for the hyperbolic beta, 50 for the parabolic lambda.
struct CoefficientFn {
    Benchmark kind;
    double gamma;
    std::vector<double> samples;
};

CoefficientFn sample_coefficient(Benchmark kind, double gamma, const Grid& grid);
double coefficient_amplitude(Benchmark kind);

// The hyperbolic plant recirculates -beta(x) * u(0,t): with the Chebyshev
// beta above this makes the gamma in [5.5, 7) family genuinely unstable
// (growth ~400x at gamma=5.5 over T=5) while +beta would be stable there.
// Every consumer of the plant (env stepping, dataset rollouts, kernel gain)
// goes through this one helper so the sign lives in exactly one place.
std::vector<double> hyperbolic_recirculation(const CoefficientFn& coeff);

struct StateField {
    std::vector<double> values;
    double time = 0.0;
};

// sqrt of the trapezoid integral of u^2.
double l2_norm(const double* values, std::size_t n, double dx);
double l2_norm(const std::vector<double>& values, double dx);

// One explicit upwind step of u_t = u_x + recirc(x) * u(0,t) on [0,1] with
// u(1,t) = control. In-place; reads the pre-step u(0) for the recirculation.
void hyperbolic_step(std::vector<double>& u, const std::vector<double>& recirc,
                     double control, double dt, double dx);

// One backward-Euler step of u_t = u_xx + lambda(x) * u with u_x(0,t) = 0
// (mirror ghost node) and u(1,t) = control. In-place.
void parabolic_step(std::vector<double>& u, const std::vector<double>& lambda,
                    double control, double dt, double dx);

enum class RewardMode { difference, state_norm };

struct RewardParams {
    double sigma = 10.0;
    double eta = 100.0;
    double zeta = 0.2;
    RewardMode mode = RewardMode::difference;
};

struct EnvConfig {
    Benchmark kind = Benchmark::hyperbolic;
    std::size_t n_points = 101;
    double dt = 1e-3;
    double horizon = 5.0;          // seconds of simulated time per episode
    int steps_per_action = 50;     // zero-order hold length
    double gamma = 5.5;
    double action_bound = 20.0;
    double blowup_limit = 100.0;
    RewardParams reward;
    double u0_lo = 1.0;
    double u0_hi = 10.0;
};

struct EpisodeRecord {
    double action_abs_sum = 0.0;
    double final_state_norm = 0.0;
    int step_count = 0;
};

struct StepResult {
    double reward = 0.0;
    bool done = false;
    bool truncated_by_blowup = false;
};

// 0 above the zeta threshold, else sigma - action_abs_sum/eta - final_norm.
double terminal_bonus(const EpisodeRecord& record, const RewardParams& params);

// Discrete-time MDP wrapper: 'episode_steps' interactions per episode, each
// holding one scalar action over steps_per_action solver sub-steps.
class Env {
  public:
    explicit Env(const EnvConfig& config);

    const EnvConfig& config() const { return config_; }
    const Grid& grid() const { return grid_; }
    const CoefficientFn& coeff() const { return coeff_; }
    int episode_steps() const { return episode_steps_; }
    const StateField& state() const { return state_; }
    const EpisodeRecord& record() const { return record_; }

    // Constant initial profile with amplitude drawn from U[u0_lo, u0_hi).
    const StateField& reset(Rng& rng);
    // Fixed amplitude (evaluation mode).
    const StateField& reset_to(double c);

    // Applies the (clamped) action, returns the transition outcome; the new
    // state is readable via state(). Throws EnvironmentFault on non-finite
    // state values.
    StepResult step(double action);

    // Terminal bonus for the episode recorded so far.
    double bonus() const { return terminal_bonus(record_, config_.reward); }

  private:
    EnvConfig config_;
    Grid grid_;
    CoefficientFn coeff_;
    std::vector<double> drift_;  // recirculation (hyperbolic) or lambda (parabolic)
    int episode_steps_;
    StateField state_;
    EpisodeRecord record_;
    std::vector<double> prev_;
};

}  // namespace pdectrl
