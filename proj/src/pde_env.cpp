#include "pdectrl/pde_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pdectrl/errors.hpp"
#include "pdectrl/kernels.hpp"

namespace pdectrl {

const char* benchmark_name(Benchmark kind) {
    return kind == Benchmark::hyperbolic ? "hyperbolic" : "parabolic";
}

Benchmark parse_benchmark(const std::string& name) {
    if (name == "hyperbolic") return Benchmark::hyperbolic;
    if (name == "parabolic") return Benchmark::parabolic;
    throw ConfigError("unknown benchmark '" + name + "' (expected hyperbolic or parabolic)");
}

double coefficient_amplitude(Benchmark kind) {
    return kind == Benchmark::hyperbolic ? 5.0 : 50.0;
}

CoefficientFn sample_coefficient(Benchmark kind, double gamma, const Grid& grid) {
    if (!(gamma > 0.0)) throw std::invalid_argument("sample_coefficient: gamma must be > 0");
    const double amp = coefficient_amplitude(kind);
    CoefficientFn coeff{kind, gamma, std::vector<double>(grid.n_points)};
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double x = std::min(grid_x(grid, i), 1.0);
        coeff.samples[i] = amp * std::cos(gamma * std::acos(x));
    }
    return coeff;
}

std::vector<double> hyperbolic_recirculation(const CoefficientFn& coeff) {
    if (coeff.kind != Benchmark::hyperbolic) {
        throw std::invalid_argument("hyperbolic_recirculation: coefficient is not a beta");
    }
    std::vector<double> recirc(coeff.samples.size());
    for (std::size_t i = 0; i < recirc.size(); ++i) recirc[i] = -coeff.samples[i];
    return recirc;
}

double l2_norm(const double* values, std::size_t n, double dx) {
    const double total = kernels::sumsq(values, n);
    const double integral = dx * (total - 0.5 * (values[0] * values[0] +
                                                 values[n - 1] * values[n - 1]));
    return std::sqrt(std::max(integral, 0.0));
}

double l2_norm(const std::vector<double>& values, double dx) {
    return l2_norm(values.data(), values.size(), dx);
}

void hyperbolic_step(std::vector<double>& u, const std::vector<double>& recirc,
                     double control, double dt, double dx) {
    const std::size_t n = u.size();
    const double u0 = u[0];
    const double r = dt / dx;
    // Ascending in-place update: position i writes u[i] before i+1 reads u[i+2],
    // so every stencil read sees pre-step values.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        u[i] += r * (u[i + 1] - u[i]) + dt * recirc[i] * u0;
    }
    u[n - 1] = control;
}

void parabolic_step(std::vector<double>& u, const std::vector<double>& lambda,
                    double control, double dt, double dx) {
    const std::size_t n = u.size();
    const std::size_t m = n - 1;  // unknowns u_0 .. u_{n-2}
    const double r = dt / (dx * dx);
    std::vector<double> lower(m - 1), diag(m), upper(m - 1), rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
        diag[i] = 1.0 + 2.0 * r - dt * lambda[i];
        rhs[i] = u[i];
    }
    // Neumann ghost at x=0: u_{-1} = u_1 folds into a doubled upper entry.
    upper[0] = -2.0 * r;
    for (std::size_t i = 1; i < m - 1; ++i) upper[i] = -r;
    for (std::size_t i = 0; i < m - 1; ++i) lower[i] = -r;
    rhs[m - 1] += r * control;
    std::vector<double> sol = solve_tridiagonal(lower, diag, upper, rhs);
    for (std::size_t i = 0; i < m; ++i) u[i] = sol[i];
    u[n - 1] = control;
}

double terminal_bonus(const EpisodeRecord& record, const RewardParams& params) {
    if (record.final_state_norm > params.zeta) return 0.0;
    return params.sigma - record.action_abs_sum / params.eta - record.final_state_norm;
}

Env::Env(const EnvConfig& config)
    : config_(config), grid_(make_grid(config.n_points)) {
    if (!(config_.dt > 0.0)) throw ConfigError("env: dt must be positive");
    if (config_.steps_per_action < 1) throw ConfigError("env: steps_per_action must be >= 1");
    if (!(config_.action_bound > 0.0)) throw ConfigError("env: action_bound must be positive");
    if (!(config_.reward.zeta > 0.0)) throw ConfigError("env: zeta must be positive");
    if (config_.kind == Benchmark::hyperbolic && config_.dt > grid_.dx + 1e-15) {
        throw ConfigError("env: CFL violated, dt/dx = " +
                          std::to_string(config_.dt / grid_.dx) + " exceeds 1");
    }
    const double per_action = config_.dt * config_.steps_per_action;
    const double steps = config_.horizon / per_action;
    episode_steps_ = static_cast<int>(std::lround(steps));
    if (episode_steps_ < 1 || std::abs(steps - episode_steps_) > 1e-9 * steps) {
        throw ConfigError("env: horizon is not an integer number of interaction steps");
    }
    coeff_ = sample_coefficient(config_.kind, config_.gamma, grid_);
    drift_ = (config_.kind == Benchmark::hyperbolic) ? hyperbolic_recirculation(coeff_)
                                                     : coeff_.samples;
    state_.values.assign(grid_.n_points, 0.0);
}

const StateField& Env::reset(Rng& rng) {
    return reset_to(rng.uniform(config_.u0_lo, config_.u0_hi));
}

const StateField& Env::reset_to(double c) {
    state_.values.assign(grid_.n_points, c);
    state_.time = 0.0;
    record_ = EpisodeRecord{};
    return state_;
}

StepResult Env::step(double action) {
    const double a = std::clamp(action, -config_.action_bound, config_.action_bound);
    prev_ = state_.values;
    for (int k = 0; k < config_.steps_per_action; ++k) {
        if (config_.kind == Benchmark::hyperbolic) {
            hyperbolic_step(state_.values, drift_, a, config_.dt, grid_.dx);
        } else {
            parabolic_step(state_.values, drift_, a, config_.dt, grid_.dx);
        }
    }
    state_.time += config_.dt * config_.steps_per_action;
    for (double v : state_.values) {
        if (!std::isfinite(v)) {
            throw EnvironmentFault("environment faulted: non-finite state at t = " +
                                   std::to_string(state_.time));
        }
    }
    record_.step_count += 1;
    record_.action_abs_sum += std::abs(a);

    const double norm_next = l2_norm(state_.values, grid_.dx);
    record_.final_state_norm = norm_next;

    StepResult out;
    if (config_.reward.mode == RewardMode::difference) {
        std::vector<double> diff(state_.values.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = state_.values[i] - prev_[i];
        out.reward = -l2_norm(diff, grid_.dx);
    } else {
        out.reward = -norm_next;
    }
    out.truncated_by_blowup = norm_next > config_.blowup_limit;
    out.done = out.truncated_by_blowup || record_.step_count >= episode_steps_;
    return out;
}

}  // namespace pdectrl
