#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdectrl/numerics.hpp"

namespace pdectrl {

enum class Act : std::uint32_t { identity = 0, relu = 1, tanh_act = 2 };

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    Act act = Act::identity;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;  // out
};

struct DenseNet {
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.front().in; }
    std::size_t output_dim() const { return layers.back().out; }
    std::size_t param_count() const;
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
DenseNet make_net(std::size_t input, const std::vector<std::size_t>& hidden,
                  std::size_t output, Act hidden_act, Act output_act, Rng& rng);

struct ForwardCache {
    std::vector<std::vector<double>> inputs;  // input to each layer
    std::vector<std::vector<double>> pre;     // pre-activation per layer
    std::vector<std::vector<double>> post;    // post-activation per layer
};

// Returns the network output; cache captures what backward needs.
std::vector<double> net_forward(const DenseNet& net, const std::vector<double>& input,
                                ForwardCache& cache);
std::vector<double> net_forward(const DenseNet& net, const std::vector<double>& input);

struct NetGrads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;
    void zero();
};

NetGrads make_grads(const DenseNet& net);

// Accumulates parameter gradients into grads, returns d(loss)/d(input).
std::vector<double> net_backward(const DenseNet& net, const ForwardCache& cache,
                                 const std::vector<double>& dout, NetGrads& grads);

enum class OptKind { adam, sgd };

// Adam with bias correction (or plain SGD when kind == sgd), one optimizer
// instance per network.
struct Optimizer {
    OptKind kind = OptKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t steps = 0;
    std::vector<std::vector<double>> mw, vw, mb, vb;

    void init(const DenseNet& net);
    void step(DenseNet& net, const NetGrads& grads);
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct SquashedSample {
    double action;
    double pre_squash;
    double log_prob;
};

// a = bound * tanh(mean + exp(log_std) * noise); log-density includes the
// tanh change of variables and the bound scale. log_std is used as given
// (clamp it before calling).
SquashedSample squashed_gaussian_sample(double mean, double log_std, double noise,
                                        double action_bound);

// Stable log(1 - tanh(x)^2).
double log_one_minus_tanh_sq(double x);

// Named-network checkpoint container; insertion order is the file order.
struct NamedNets {
    std::vector<std::pair<std::string, DenseNet>> items;

    void add(const std::string& name, DenseNet net);
    const DenseNet& get(const std::string& name) const;
    bool has(const std::string& name) const;
};

// Scalars piggyback on the net container as a single 1x1 identity layer
// holding the value in its bias.
DenseNet scalar_net(double value);
double scalar_value(const DenseNet& net);

void checkpoint_save(const NamedNets& nets, const std::string& path);
NamedNets checkpoint_load(const std::string& path);

}  // namespace pdectrl
