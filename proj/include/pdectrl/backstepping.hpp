#pragma once

#include <vector>

#include "pdectrl/numerics.hpp"
#include "pdectrl/pde_env.hpp"

namespace pdectrl {

// Convolution-form kernel for the hyperbolic benchmark: k(x,y) = F(x-y).
struct HyperbolicKernel {
    std::vector<double> F;
    double residual = 0.0;
};

// Raw Volterra solver: F(x) = -g(x) + int_0^x F(x-y) g(y) dy by Picard
// iteration with trapezoid quadrature. For constant g == b the solution is
// F(x) = -b e^{bx}. F(0) = -g(0) exactly.
HyperbolicKernel solve_volterra(const std::vector<double>& g, double dx);

// Stabilizing gain for the benchmark plant u_t = u_x - beta(x) u(0,t): the
// plant's recirculation is -beta, so this is solve_volterra applied to the
// negated coefficient samples (see hyperbolic_recirculation).
HyperbolicKernel solve_hyperbolic_kernel(const CoefficientFn& coeff, const Grid& grid);

// Triangular kernel for the parabolic benchmark, solved as a Goursat-form
// integral equation in characteristic variables xi = x+y, eta = x-y on a
// lattice of spacing 2*dx. Boundary data matches the Neumann plant
// (u_x(0,t) = 0): k_y(x,0) = 0 and k(x,x) = -1/2 int_0^x lambda.
struct ParabolicKernel {
    std::vector<std::vector<double>> k_table;  // k_table[i][j] = k(x_i, y_j), j <= i
    std::vector<double> gain_row;              // k(1, y_j)
    double residual = 0.0;
};

ParabolicKernel solve_parabolic_kernel(const CoefficientFn& coeff, const Grid& grid);

// Feedback law U(t) = int_0^1 k(1,y) u(y,t) dy.
double backstepping_control(const HyperbolicKernel& kernel,
                            const std::vector<double>& u, double dx);
double backstepping_control(const ParabolicKernel& kernel,
                            const std::vector<double>& u, double dx);

}  // namespace pdectrl
