#include "pdectrl/deeponet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pdectrl/errors.hpp"
#include "pdectrl/kernels.hpp"

namespace pdectrl {

namespace {
constexpr double kStateScale = 10.0;

void check_model(const DeepONet& model) {
    if (model.branch.input_dim() != 2 * model.n_points || model.trunk.input_dim() != 1 ||
        model.branch.output_dim() != model.latent || model.trunk.output_dim() != model.latent) {
        throw std::invalid_argument("deeponet: inconsistent branch/trunk shapes");
    }
}

std::vector<double> joint_input(const DeepONet& model, const double* coeff,
                                const double* state) {
    std::vector<double> x(2 * model.n_points);
    std::copy(coeff, coeff + model.n_points, x.begin());
    std::copy(state, state + model.n_points, x.begin() + static_cast<std::ptrdiff_t>(model.n_points));
    return x;
}
}  // namespace

DeepONet make_deeponet(Benchmark kind, std::size_t n_points, const DeepONetConfig& config,
                       Rng& rng) {
    if (n_points < 3) throw ConfigError("deeponet n_points must be at least 3");
    if (config.latent < 1) throw ConfigError("deeponet latent width must be at least 1");
    DeepONet model;
    model.n_points = n_points;
    model.latent = config.latent;
    model.branch = make_net(2 * n_points, config.branch_hidden, config.latent, Act::relu,
                            Act::identity, rng);
    model.trunk =
        make_net(1, config.trunk_hidden, config.latent, Act::tanh_act, Act::identity, rng);
    model.output_bias = 0.0;

    // Fold fixed input scaling into the first branch layer so raw physical
    // inputs (coefficients up to the benchmark amplitude, states of order 10)
    // arrive with the conditioning the uniform init assumes.
    Layer& first = model.branch.layers.front();
    const double coeff_scale = coefficient_amplitude(kind);
    for (std::size_t r = 0; r < first.out; ++r) {
        for (std::size_t c = 0; c < first.in; ++c) {
            first.w[r * first.in + c] /= (c < n_points ? coeff_scale : kStateScale);
        }
    }
    return model;
}

double forward_scalar(const DeepONet& model, const double* coeff, const double* state,
                      double query) {
    check_model(model);
    ForwardCache bc, tc;
    const std::vector<double> b = net_forward(model.branch, joint_input(model, coeff, state), bc);
    const std::vector<double> t = net_forward(model.trunk, {query}, tc);
    return kernels::dot(b.data(), t.data(), model.latent) + model.output_bias;
}

double forward_scalar(const DeepONet& model, const std::vector<double>& coeff,
                      const std::vector<double>& state, double query) {
    if (coeff.size() != model.n_points || state.size() != model.n_points) {
        throw std::invalid_argument("deeponet forward: coeff/state size mismatch");
    }
    return forward_scalar(model, coeff.data(), state.data(), query);
}

std::vector<double> forward_features(const DeepONet& model, const double* coeff,
                                     const double* state) {
    check_model(model);
    ForwardCache bc, tc;
    const std::vector<double> b = net_forward(model.branch, joint_input(model, coeff, state), bc);
    const std::vector<double> t = net_forward(model.trunk, {1.0}, tc);
    std::vector<double> features(model.latent);
    for (std::size_t i = 0; i < model.latent; ++i) features[i] = b[i] * t[i];
    return features;
}

std::vector<double> forward_features(const DeepONet& model, const std::vector<double>& coeff,
                                     const std::vector<double>& state) {
    if (coeff.size() != model.n_points || state.size() != model.n_points) {
        throw std::invalid_argument("deeponet features: coeff/state size mismatch");
    }
    return forward_features(model, coeff.data(), state.data());
}

namespace {
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.next_double() * static_cast<double>(i + 1));
        std::swap(idx[i], idx[std::min(j, i)]);
    }
}
}  // namespace

double dataset_mse(const DeepONet& model, const Dataset& data) {
    if (data.count() == 0) throw std::invalid_argument("dataset_mse: empty dataset");
    double acc = 0.0;
    for (std::size_t i = 0; i < data.count(); ++i) {
        const double err =
            forward_scalar(model, data.coeff_at(i), data.state_at(i), 1.0) - data.target[i];
        acc += err * err;
    }
    return acc / static_cast<double>(data.count());
}

double dataset_rel_l2(const DeepONet& model, const Dataset& data) {
    if (data.count() == 0) throw std::invalid_argument("dataset_rel_l2: empty dataset");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < data.count(); ++i) {
        const double err =
            forward_scalar(model, data.coeff_at(i), data.state_at(i), 1.0) - data.target[i];
        num += err * err;
        den += data.target[i] * data.target[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

PretrainReport pretrain(DeepONet& model, const Dataset& train, const Dataset& test,
                        const PretrainOptions& options, Rng& rng) {
    check_model(model);
    if (train.n_points != model.n_points || test.n_points != model.n_points) {
        throw ConfigError("pretrain: dataset grid size does not match the model");
    }
    if (train.count() == 0 || test.count() == 0) {
        throw ConfigError("pretrain: train and test sets must be non-empty");
    }
    if (options.batch_size < 1) throw ConfigError("pretrain: batch_size must be at least 1");

    Optimizer opt_b, opt_t, opt_bias;
    opt_b.kind = opt_t.kind = opt_bias.kind = options.optimizer;
    opt_b.lr = opt_t.lr = opt_bias.lr = options.lr;
    DenseNet bias_net = scalar_net(model.output_bias);
    opt_b.init(model.branch);
    opt_t.init(model.trunk);
    opt_bias.init(bias_net);

    NetGrads gb = make_grads(model.branch);
    NetGrads gt = make_grads(model.trunk);
    NetGrads gbias = make_grads(bias_net);

    std::vector<std::size_t> order(train.count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    PretrainReport report;
    ForwardCache bc, tc;
    std::vector<double> d_b(model.latent), d_t_sum(model.latent);

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double epoch_sq = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t stop = std::min(order.size(), start + options.batch_size);
            const auto batch_n = static_cast<double>(stop - start);
            gb.zero();
            gt.zero();
            gbias.zero();
            // The trunk always sees the same query (the actuated boundary),
            // so one forward serves the whole batch and the per-sample trunk
            // gradients can be summed before a single backward pass.
            const std::vector<double> t = net_forward(model.trunk, {1.0}, tc);
            std::fill(d_t_sum.begin(), d_t_sum.end(), 0.0);
            for (std::size_t s = start; s < stop; ++s) {
                const std::size_t i = order[s];
                const std::vector<double> b = net_forward(
                    model.branch, joint_input(model, train.coeff_at(i), train.state_at(i)), bc);
                const double pred =
                    kernels::dot(b.data(), t.data(), model.latent) + model.output_bias;
                const double err = pred - train.target[i];
                epoch_sq += err * err;
                const double dpred = 2.0 * err / batch_n;
                for (std::size_t k = 0; k < model.latent; ++k) {
                    d_b[k] = dpred * t[k];
                    d_t_sum[k] += dpred * b[k];
                }
                net_backward(model.branch, bc, d_b, gb);
                gbias.b[0][0] += dpred;
            }
            net_backward(model.trunk, tc, d_t_sum, gt);
            opt_b.step(model.branch, gb);
            opt_t.step(model.trunk, gt);
            opt_bias.step(bias_net, gbias);
            model.output_bias = scalar_value(bias_net);
        }
        const double train_mse = epoch_sq / static_cast<double>(train.count());
        const double test_mse = dataset_mse(model, test);
        if (!std::isfinite(train_mse) || !std::isfinite(test_mse)) {
            throw NumericalError("pretraining diverged at epoch " + std::to_string(epoch) +
                                 " (train MSE " + std::to_string(train_mse) + ", test MSE " +
                                 std::to_string(test_mse) + ")");
        }
        report.train_mse.push_back(train_mse);
        report.test_mse.push_back(test_mse);
        if (options.on_epoch) options.on_epoch(epoch, train_mse, test_mse);
    }
    report.final_rel_l2 = dataset_rel_l2(model, test);
    return report;
}

void deeponet_save(const DeepONet& model, const std::string& path) {
    check_model(model);
    NamedNets nets;
    nets.add("branch", model.branch);
    nets.add("trunk", model.trunk);
    nets.add("output_bias", scalar_net(model.output_bias));
    checkpoint_save(nets, path);
}

DeepONet deeponet_load(const std::string& path) {
    const NamedNets nets = checkpoint_load(path);
    DeepONet model;
    model.branch = nets.get("branch");
    model.trunk = nets.get("trunk");
    model.output_bias = scalar_value(nets.get("output_bias"));
    if (model.branch.input_dim() % 2 != 0 || model.trunk.input_dim() != 1 ||
        model.branch.output_dim() != model.trunk.output_dim()) {
        throw FormatError("checkpoint does not hold a valid operator model: " + path);
    }
    model.n_points = model.branch.input_dim() / 2;
    model.latent = model.branch.output_dim();
    return model;
}

}  // namespace pdectrl
