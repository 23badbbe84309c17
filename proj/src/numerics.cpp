#include "pdectrl/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "pdectrl/errors.hpp"
#include "pdectrl/kernels.hpp"

namespace pdectrl {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace

Grid make_grid(std::size_t n_points) {
    if (n_points < 3) {
        throw ConfigError("grid needs at least 3 points, got " + std::to_string(n_points));
    }
    return Grid{n_points, 1.0 / static_cast<double>(n_points - 1)};
}

double grid_x(const Grid& grid, std::size_t i) {
    return static_cast<double>(i) * grid.dx;
}

std::uint64_t Rng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform: lo must be < hi");
    return lo + (hi - lo) * next_double();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0,1] keeps the log finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master + kGolden * (index + 1)));
}

double trapezoid_integrate(const double* values, std::size_t n, double dx) {
    if (n < 2) throw std::invalid_argument("trapezoid_integrate: need at least 2 samples");
    const double total = kernels::sum(values, n);
    return dx * (total - 0.5 * (values[0] + values[n - 1]));
}

double trapezoid_integrate(const std::vector<double>& values, double dx) {
    return trapezoid_integrate(values.data(), values.size(), dx);
}

std::vector<double> solve_tridiagonal(const std::vector<double>& lower,
                                      const std::vector<double>& diag,
                                      const std::vector<double>& upper,
                                      const std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    if (n == 0 || rhs.size() != n || lower.size() + 1 != n || upper.size() + 1 != n) {
        throw std::invalid_argument("solve_tridiagonal: inconsistent band sizes");
    }
    std::vector<double> cp(n, 0.0), dp(n, 0.0);
    double piv = diag[0];
    if (std::abs(piv) < 1e-300) throw NumericalError("tridiagonal solve: zero pivot at row 0");
    cp[0] = (n > 1) ? upper[0] / piv : 0.0;
    dp[0] = rhs[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - lower[i - 1] * cp[i - 1];
        if (std::abs(piv) < 1e-300) {
            throw NumericalError("tridiagonal solve: zero pivot at row " + std::to_string(i));
        }
        if (i + 1 < n) cp[i] = upper[i] / piv;
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / piv;
    }
    std::vector<double> x(n);
    x[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    return x;
}

double bessel_kernel_ratio(double z) {
    if (z < 0.0) throw std::invalid_argument("bessel_kernel_ratio: z must be >= 0");
    const double q = 0.25 * z * z;  // (z/2)^2
    double term = 0.5;
    double acc = term;
    for (int m = 0; m < 500; ++m) {
        term *= q / (static_cast<double>(m + 1) * static_cast<double>(m + 2));
        acc += term;
        if (term < 1e-16 * acc) break;
    }
    return acc;
}

std::string format_g17(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return std::string(buf);
}

}  // namespace pdectrl
