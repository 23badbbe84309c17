#include "pdectrl/backstepping.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pdectrl/errors.hpp"

namespace pdectrl {

namespace {
constexpr int kMaxSweeps = 200;
constexpr double kTol = 1e-12;

// Convolution term int_0^{x_i} F(x_i - y) g(y) dy with trapezoid weights.
double volterra_rhs(const std::vector<double>& F, const std::vector<double>& g,
                    double dx, std::size_t i) {
    if (i == 0) return 0.0;
    double acc = 0.5 * (F[i] * g[0] + F[0] * g[i]);
    for (std::size_t j = 1; j < i; ++j) acc += F[i - j] * g[j];
    return dx * acc;
}
}  // namespace

HyperbolicKernel solve_volterra(const std::vector<double>& g, double dx) {
    const std::size_t n = g.size();
    if (n < 2) throw std::invalid_argument("solve_volterra: need at least 2 samples");
    HyperbolicKernel kernel;
    kernel.F.resize(n);
    for (std::size_t i = 0; i < n; ++i) kernel.F[i] = -g[i];
    std::vector<double> next(n);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = -g[i] + volterra_rhs(kernel.F, g, dx, i);
            max_diff = std::max(max_diff, std::abs(next[i] - kernel.F[i]));
        }
        kernel.F.swap(next);
        if (max_diff <= kTol) {
            double residual = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                residual = std::max(residual,
                                    std::abs(kernel.F[i] + g[i] - volterra_rhs(kernel.F, g, dx, i)));
            }
            kernel.residual = residual;
            return kernel;
        }
    }
    throw NumericalError("Volterra kernel iteration did not converge in " +
                         std::to_string(kMaxSweeps) + " sweeps");
}

HyperbolicKernel solve_hyperbolic_kernel(const CoefficientFn& coeff, const Grid& grid) {
    if (coeff.kind != Benchmark::hyperbolic) {
        throw std::invalid_argument("solve_hyperbolic_kernel: coefficient is not a beta");
    }
    if (coeff.samples.size() != grid.n_points) {
        throw std::invalid_argument("solve_hyperbolic_kernel: coefficient/grid size mismatch");
    }
    return solve_volterra(hyperbolic_recirculation(coeff), grid.dx);
}

namespace {

// Goursat lattice for G(xi, eta) = k(x, y), xi = x+y, eta = x-y, spacing
// h = 2*dx, N = n_points nodes per axis, valid on the triangle eta <= xi.
// The integral form of the Neumann-boundary kernel problem is
//   G(xi, eta) = -1/4 int_0^xi lam(t/2) dt - 1/4 int_0^eta lam(s/2) ds
//              + 1/4 int_0^eta [ H(s, s) + C(xi, s) ] ds
// with H(t, e) = int_0^e lam((t-s)/2) G(t, s) ds and
//      C(xi, s) = int_s^xi lam((t-s)/2) G(t, s) dt.
// All lattice evaluations of lam land on grid nodes because lam((a-b)h/2) =
// lam(x_{a-b}).
struct GoursatWorkspace {
    std::size_t N;
    double h;
    const std::vector<double>& lam;
    std::vector<std::vector<double>> B;  // inhomogeneous part
    std::vector<std::vector<double>> G;

    GoursatWorkspace(const std::vector<double>& lambda, double dx)
        : N(lambda.size()), h(2.0 * dx), lam(lambda) {
        std::vector<double> cum(N, 0.0);
        for (std::size_t s = 1; s < N; ++s) {
            cum[s] = cum[s - 1] + 0.5 * h * (lam[s - 1] + lam[s]);
        }
        B.resize(N);
        G.resize(N);
        for (std::size_t i = 0; i < N; ++i) {
            B[i].resize(i + 1);
            G[i].resize(i + 1);
            for (std::size_t j = 0; j <= i; ++j) {
                B[i][j] = -0.25 * (cum[i] + cum[j]);
                G[i][j] = B[i][j];
            }
        }
    }

    // One Picard sweep; returns the max change.
    double sweep() {
        // H[i][j] = int_0^{jh} lam((ih - s)/2) G(ih, s) ds, cumulative in j.
        std::vector<std::vector<double>> H(N);
        for (std::size_t i = 0; i < N; ++i) {
            H[i].assign(i + 1, 0.0);
            for (std::size_t j = 1; j <= i; ++j) {
                const double f0 = lam[i - (j - 1)] * G[i][j - 1];
                const double f1 = lam[i - j] * G[i][j];
                H[i][j] = H[i][j - 1] + 0.5 * h * (f0 + f1);
            }
        }
        // C[i][j] = int_{jh}^{ih} lam((t - jh)/2) G(t, jh) dt, cumulative in i.
        std::vector<std::vector<double>> C(N);
        for (std::size_t i = 0; i < N; ++i) C[i].assign(i + 1, 0.0);
        for (std::size_t j = 0; j < N; ++j) {
            for (std::size_t i = j + 1; i < N; ++i) {
                const double f0 = lam[i - 1 - j] * G[i - 1][j];
                const double f1 = lam[i - j] * G[i][j];
                C[i][j] = C[i - 1][j] + 0.5 * h * (f0 + f1);
            }
        }
        double max_diff = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            // integrand(s) = H(s,s) + C(xi_i, s), integrated cumulatively in s.
            double acc = 0.0;
            double prev = H[0][0] + C[i][0];
            for (std::size_t j = 0; j <= i; ++j) {
                if (j > 0) {
                    const double cur = H[j][j] + C[i][j];
                    acc += 0.5 * h * (prev + cur);
                    prev = cur;
                }
                const double next = B[i][j] + 0.25 * acc;
                max_diff = std::max(max_diff, std::abs(next - G[i][j]));
                G[i][j] = next;
            }
        }
        return max_diff;
    }
};

// Map the lattice back to k(x_i, y_j). Lattice indices are (i+j)/2, (i-j)/2;
// odd i+j falls mid-cell and is averaged from surrounding valid nodes.
double lattice_value(const std::vector<std::vector<double>>& G, std::size_t i, std::size_t j) {
    if ((i + j) % 2 == 0) {
        return G[(i + j) / 2][(i - j) / 2];
    }
    if (j == 0) {
        // Point sits on the lattice diagonal; average along it.
        const std::size_t a = (i - 1) / 2;
        return 0.5 * (G[a][a] + G[a + 1][a + 1]);
    }
    const std::size_t a = (i + j - 1) / 2;
    const std::size_t b = (i - j - 1) / 2;
    return 0.25 * (G[a][b] + G[a + 1][b] + G[a][b + 1] + G[a + 1][b + 1]);
}

}  // namespace

ParabolicKernel solve_parabolic_kernel(const CoefficientFn& coeff, const Grid& grid) {
    if (coeff.kind != Benchmark::parabolic) {
        throw std::invalid_argument("solve_parabolic_kernel: coefficient is not a lambda");
    }
    if (coeff.samples.size() != grid.n_points) {
        throw std::invalid_argument("solve_parabolic_kernel: coefficient/grid size mismatch");
    }
    if (grid.n_points % 2 == 0) {
        throw ConfigError("solve_parabolic_kernel: n_points must be odd so the "
                          "characteristic lattice hits the boundary row exactly");
    }
    GoursatWorkspace ws(coeff.samples, grid.dx);
    bool converged = false;
    double last_diff = 0.0;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        last_diff = ws.sweep();
        if (last_diff <= kTol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericalError("Goursat kernel iteration did not converge in " +
                             std::to_string(kMaxSweeps) + " sweeps");
    }
    ParabolicKernel kernel;
    kernel.residual = ws.sweep();  // one extra sweep measures the fixed-point residual
    const std::size_t n = grid.n_points;
    kernel.k_table.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        kernel.k_table[i].resize(i + 1);
        for (std::size_t j = 0; j <= i; ++j) {
            kernel.k_table[i][j] = lattice_value(ws.G, i, j);
        }
    }
    kernel.gain_row = kernel.k_table[n - 1];
    return kernel;
}

double backstepping_control(const HyperbolicKernel& kernel,
                            const std::vector<double>& u, double dx) {
    const std::size_t n = u.size();
    if (kernel.F.size() != n) {
        throw std::invalid_argument("backstepping_control: kernel/state size mismatch");
    }
    // U = int_0^1 F(1-y) u(y) dy
    std::vector<double> prod(n);
    for (std::size_t j = 0; j < n; ++j) prod[j] = kernel.F[n - 1 - j] * u[j];
    return trapezoid_integrate(prod, dx);
}

double backstepping_control(const ParabolicKernel& kernel,
                            const std::vector<double>& u, double dx) {
    const std::size_t n = u.size();
    if (kernel.gain_row.size() != n) {
        throw std::invalid_argument("backstepping_control: kernel/state size mismatch");
    }
    std::vector<double> prod(n);
    for (std::size_t j = 0; j < n; ++j) prod[j] = kernel.gain_row[j] * u[j];
    return trapezoid_integrate(prod, dx);
}

}  // namespace pdectrl
