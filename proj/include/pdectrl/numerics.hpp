#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdectrl {

// Uniform grid on [0,1]. dx is derived from the point count so the
// (n_points - 1) * dx = 1 identity holds exactly.
struct Grid {
    std::size_t n_points;
    double dx;
};

// Throws ConfigError when n_points < 3.
Grid make_grid(std::size_t n_points);

double grid_x(const Grid& grid, std::size_t i);

// Counter-based splitmix64 stream with Box-Muller normals. One logical owner
// per instance; copy it to fork a stream at the current position.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    // Uniform in [0,1).
    double next_double();
    // Uniform in [lo,hi); throws std::invalid_argument when lo >= hi.
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller on uniform pairs; caches the second draw.
    double normal();

    std::uint64_t seed_state() const { return state_; }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stable derivation of per-task seeds from a master seed, used to keep
// parallel work reproducible regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Composite trapezoid rule: dx * (sum - (first + last)/2).
// Throws std::invalid_argument on fewer than 2 samples.
double trapezoid_integrate(const double* values, std::size_t n, double dx);
double trapezoid_integrate(const std::vector<double>& values, double dx);

// Thomas algorithm. lower/upper have length n-1, diag and rhs length n.
// Throws NumericalError on a vanishing pivot.
std::vector<double> solve_tridiagonal(const std::vector<double>& lower,
                                      const std::vector<double>& diag,
                                      const std::vector<double>& upper,
                                      const std::vector<double>& rhs);

// I1(z)/z by power series, z >= 0. Equals 1/2 at z = 0.
double bessel_kernel_ratio(double z);

// Round-trip-exact decimal formatting ("%.17g") used by every text output.
std::string format_g17(double value);

}  // namespace pdectrl
