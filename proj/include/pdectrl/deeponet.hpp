#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdectrl/dataset.hpp"
#include "pdectrl/nn.hpp"
#include "pdectrl/pde_env.hpp"

namespace pdectrl {

struct DeepONetConfig {
    std::size_t latent = 64;
    std::vector<std::size_t> branch_hidden = {128, 128};
    std::vector<std::size_t> trunk_hidden = {64, 64};
};

// Branch consumes the concatenated (coefficient, state) samples; trunk
// consumes a scalar query coordinate. The scalar output is
// dot(branch, trunk) + output_bias; feature mode returns the pre-summation
// product vector evaluated at the actuated boundary query x = 1.
struct DeepONet {
    DenseNet branch;  // 2*n_points -> latent, relu hidden
    DenseNet trunk;   // 1 -> latent, tanh hidden
    double output_bias = 0.0;
    std::size_t n_points = 0;
    std::size_t latent = 0;
};

// Fresh model. The first branch layer's columns are scaled at init by the
// benchmark's coefficient amplitude (and a nominal state scale of 10) so the
// raw physical inputs arrive well-conditioned; this is equivalent to fixed
// input normalization folded into the weights.
DeepONet make_deeponet(Benchmark kind, std::size_t n_points, const DeepONetConfig& config,
                       Rng& rng);

double forward_scalar(const DeepONet& model, const double* coeff, const double* state,
                      double query);
double forward_scalar(const DeepONet& model, const std::vector<double>& coeff,
                      const std::vector<double>& state, double query);

std::vector<double> forward_features(const DeepONet& model, const double* coeff,
                                     const double* state);
std::vector<double> forward_features(const DeepONet& model, const std::vector<double>& coeff,
                                     const std::vector<double>& state);

struct PretrainOptions {
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    double lr = 1e-3;
    OptKind optimizer = OptKind::adam;
    // Called after each epoch with (epoch index, train MSE, test MSE).
    std::function<void(std::size_t, double, double)> on_epoch;
};

struct PretrainReport {
    std::vector<double> train_mse;  // per epoch
    std::vector<double> test_mse;   // per epoch
    double final_rel_l2 = 0.0;      // sqrt(sum (pred-t)^2 / sum t^2) on the test set
};

// Minimizes MSE between forward_scalar(query = 1) and the stored targets
// over shuffled mini-batches. Throws NumericalError on a non-finite loss.
PretrainReport pretrain(DeepONet& model, const Dataset& train, const Dataset& test,
                        const PretrainOptions& options, Rng& rng);

double dataset_mse(const DeepONet& model, const Dataset& data);
double dataset_rel_l2(const DeepONet& model, const Dataset& data);

// Checkpoint adapters (net names "branch", "trunk", scalar "output_bias").
void deeponet_save(const DeepONet& model, const std::string& path);
DeepONet deeponet_load(const std::string& path);

}  // namespace pdectrl
