#include "pdectrl/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "binio.hpp"
#include "pdectrl/errors.hpp"
#include "pdectrl/kernels.hpp"

namespace pdectrl {

std::size_t DenseNet::param_count() const {
    std::size_t total = 0;
    for (const Layer& l : layers) total += l.w.size() + l.b.size();
    return total;
}

DenseNet make_net(std::size_t input, const std::vector<std::size_t>& hidden,
                  std::size_t output, Act hidden_act, Act output_act, Rng& rng) {
    std::vector<std::size_t> dims;
    dims.push_back(input);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output);
    DenseNet net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.act = (l + 2 == dims.size()) ? output_act : hidden_act;
        layer.w.resize(layer.in * layer.out);
        layer.b.assign(layer.out, 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (double& w : layer.w) w = rng.uniform(-bound, bound);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {
void apply_act(Act act, const std::vector<double>& pre, std::vector<double>& post) {
    post.resize(pre.size());
    switch (act) {
        case Act::identity:
            post = pre;
            break;
        case Act::relu:
            for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            break;
        case Act::tanh_act:
            for (std::size_t i = 0; i < pre.size(); ++i) post[i] = std::tanh(pre[i]);
            break;
    }
}
}  // namespace

std::vector<double> net_forward(const DenseNet& net, const std::vector<double>& input,
                                ForwardCache& cache) {
    if (input.size() != net.input_dim()) {
        throw std::invalid_argument("net_forward: input length " + std::to_string(input.size()) +
                                    " != expected " + std::to_string(net.input_dim()));
    }
    const std::size_t L = net.layers.size();
    cache.inputs.resize(L);
    cache.pre.resize(L);
    cache.post.resize(L);
    std::vector<double> cur = input;
    for (std::size_t l = 0; l < L; ++l) {
        const Layer& layer = net.layers[l];
        cache.inputs[l] = cur;
        cache.pre[l].resize(layer.out);
        kernels::matvec_bias(layer.w.data(), layer.b.data(), cur.data(),
                             cache.pre[l].data(), layer.out, layer.in);
        apply_act(layer.act, cache.pre[l], cache.post[l]);
        cur = cache.post[l];
    }
    return cur;
}

std::vector<double> net_forward(const DenseNet& net, const std::vector<double>& input) {
    ForwardCache cache;
    return net_forward(net, input, cache);
}

void NetGrads::zero() {
    for (auto& g : w) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : b) std::fill(g.begin(), g.end(), 0.0);
}

NetGrads make_grads(const DenseNet& net) {
    NetGrads grads;
    for (const Layer& l : net.layers) {
        grads.w.emplace_back(l.w.size(), 0.0);
        grads.b.emplace_back(l.b.size(), 0.0);
    }
    return grads;
}

std::vector<double> net_backward(const DenseNet& net, const ForwardCache& cache,
                                 const std::vector<double>& dout, NetGrads& grads) {
    const std::size_t L = net.layers.size();
    if (dout.size() != net.output_dim()) {
        throw std::invalid_argument("net_backward: gradient length mismatch");
    }
    if (grads.w.size() != L) throw std::invalid_argument("net_backward: grads shape mismatch");
    std::vector<double> dact = dout;
    std::vector<double> dpre;
    for (std::size_t l = L; l-- > 0;) {
        const Layer& layer = net.layers[l];
        dpre.resize(layer.out);
        switch (layer.act) {
            case Act::identity:
                dpre = dact;
                break;
            case Act::relu:
                for (std::size_t i = 0; i < layer.out; ++i) {
                    dpre[i] = cache.pre[l][i] > 0.0 ? dact[i] : 0.0;
                }
                break;
            case Act::tanh_act:
                for (std::size_t i = 0; i < layer.out; ++i) {
                    const double t = cache.post[l][i];
                    dpre[i] = dact[i] * (1.0 - t * t);
                }
                break;
        }
        kernels::axpy(1.0, dpre.data(), grads.b[l].data(), layer.out);
        kernels::ger_acc(grads.w[l].data(), dpre.data(), cache.inputs[l].data(),
                         layer.out, layer.in);
        dact.assign(layer.in, 0.0);
        kernels::matvec_t_acc(layer.w.data(), dpre.data(), dact.data(), layer.out, layer.in);
    }
    return dact;
}

void Optimizer::init(const DenseNet& net) {
    mw.clear(); vw.clear(); mb.clear(); vb.clear();
    steps = 0;
    for (const Layer& l : net.layers) {
        mw.emplace_back(l.w.size(), 0.0);
        vw.emplace_back(l.w.size(), 0.0);
        mb.emplace_back(l.b.size(), 0.0);
        vb.emplace_back(l.b.size(), 0.0);
    }
}

void Optimizer::step(DenseNet& net, const NetGrads& grads) {
    if (mw.size() != net.layers.size()) {
        throw std::invalid_argument("optimizer not initialized for this network");
    }
    if (kind == OptKind::sgd) {
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            kernels::axpy(-lr, grads.w[l].data(), net.layers[l].w.data(), grads.w[l].size());
            kernels::axpy(-lr, grads.b[l].data(), net.layers[l].b.data(), grads.b[l].size());
        }
        return;
    }
    steps += 1;
    const double bc1 = 1.0 / (1.0 - std::pow(beta1, static_cast<double>(steps)));
    const double bc2 = 1.0 / (1.0 - std::pow(beta2, static_cast<double>(steps)));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        kernels::adam_update(net.layers[l].w.data(), mw[l].data(), vw[l].data(),
                             grads.w[l].data(), grads.w[l].size(), lr, beta1, beta2, eps,
                             bc1, bc2);
        kernels::adam_update(net.layers[l].b.data(), mb[l].data(), vb[l].data(),
                             grads.b[l].data(), grads.b[l].size(), lr, beta1, beta2, eps,
                             bc1, bc2);
    }
}

double log_one_minus_tanh_sq(double x) {
    const double ax = std::abs(x);
    return 2.0 * (std::log(2.0) - ax - std::log1p(std::exp(-2.0 * ax)));
}

SquashedSample squashed_gaussian_sample(double mean, double log_std, double noise,
                                        double action_bound) {
    const double std_dev = std::exp(log_std);
    const double pre = mean + std_dev * noise;
    const double action = action_bound * std::tanh(pre);
    // Normal log-density at pre, minus the tanh and scale Jacobians.
    const double log_normal = -0.5 * noise * noise - log_std - 0.5 * std::log(2.0 * M_PI);
    const double log_prob = log_normal - log_one_minus_tanh_sq(pre) - std::log(action_bound);
    return SquashedSample{action, pre, log_prob};
}

void NamedNets::add(const std::string& name, DenseNet net) {
    items.emplace_back(name, std::move(net));
}

const DenseNet& NamedNets::get(const std::string& name) const {
    for (const auto& [key, net] : items) {
        if (key == name) return net;
    }
    throw FormatError("checkpoint is missing net '" + name + "'");
}

bool NamedNets::has(const std::string& name) const {
    for (const auto& [key, net] : items) {
        if (key == name) return true;
    }
    return false;
}

DenseNet scalar_net(double value) {
    DenseNet net;
    Layer l;
    l.in = 1;
    l.out = 1;
    l.act = Act::identity;
    l.w = {0.0};
    l.b = {value};
    net.layers.push_back(std::move(l));
    return net;
}

double scalar_value(const DenseNet& net) {
    if (net.layers.size() != 1 || net.layers[0].b.size() != 1) {
        throw FormatError("checkpoint net is not a scalar record");
    }
    return net.layers[0].b[0];
}

namespace {
constexpr char kMagic[4] = {'N', 'N', 'C', 'P'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

void checkpoint_save(const NamedNets& nets, const std::string& path) {
    ByteSink sink(path);
    if (!sink.out) throw ConfigError("cannot open checkpoint for writing: " + path);
    sink.raw(kMagic, 4);
    sink.value<std::uint16_t>(kVersion);
    sink.value<std::uint16_t>(static_cast<std::uint16_t>(nets.items.size()));
    for (const auto& [name, net] : nets.items) {
        sink.value<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
        sink.raw(name.data(), name.size());
        sink.value<std::uint32_t>(static_cast<std::uint32_t>(net.layers.size()));
        for (const Layer& l : net.layers) {
            sink.value<std::uint32_t>(static_cast<std::uint32_t>(l.in));
            sink.value<std::uint32_t>(static_cast<std::uint32_t>(l.out));
            sink.value<std::uint32_t>(static_cast<std::uint32_t>(l.act));
        }
        for (const Layer& l : net.layers) {
            sink.raw(l.w.data(), l.w.size() * sizeof(double));
            sink.raw(l.b.data(), l.b.size() * sizeof(double));
        }
    }
    const std::uint64_t checksum = sink.checksum;
    sink.value<std::uint64_t>(checksum);
    sink.out.flush();
    if (!sink.out) throw ConfigError("failed writing checkpoint: " + path);
}

NamedNets checkpoint_load(const std::string& path) {
    ByteSource src(path);
    if (!src.in) throw ConfigError("cannot open checkpoint: " + path);
    char magic[4];
    src.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad checkpoint magic in " + path);
    }
    const auto version = src.value<std::uint16_t>();
    if (version != kVersion) {
        throw FormatError("checkpoint version mismatch in " + path + ": expected " +
                          std::to_string(kVersion) + ", found " + std::to_string(version));
    }
    const auto count = src.value<std::uint16_t>();
    NamedNets nets;
    for (std::uint16_t k = 0; k < count; ++k) {
        const auto name_len = src.value<std::uint32_t>();
        if (name_len > 4096) throw FormatError("implausible net name length in " + path);
        std::string name(name_len, '\0');
        src.raw(name.data(), name_len);
        const auto layer_count = src.value<std::uint32_t>();
        if (layer_count > 1024) throw FormatError("implausible layer count in " + path);
        DenseNet net;
        for (std::uint32_t l = 0; l < layer_count; ++l) {
            Layer layer;
            layer.in = src.value<std::uint32_t>();
            layer.out = src.value<std::uint32_t>();
            const auto act = src.value<std::uint32_t>();
            if (act > 2) throw FormatError("unknown activation code in " + path);
            layer.act = static_cast<Act>(act);
            if (layer.in == 0 || layer.out == 0 || layer.in * layer.out > (1u << 28)) {
                throw FormatError("implausible layer dimensions in " + path);
            }
            net.layers.push_back(std::move(layer));
        }
        for (Layer& layer : net.layers) {
            layer.w.resize(layer.in * layer.out);
            layer.b.resize(layer.out);
            src.raw(layer.w.data(), layer.w.size() * sizeof(double));
            src.raw(layer.b.data(), layer.b.size() * sizeof(double));
        }
        nets.add(name, std::move(net));
    }
    const std::uint64_t expected = src.checksum;
    const auto stored = src.value<std::uint64_t>();
    if (stored != expected) {
        throw FormatError("checkpoint checksum mismatch in " + path);
    }
    char extra;
    src.in.read(&extra, 1);
    if (src.in.gcount() != 0) throw FormatError("trailing bytes after checkpoint in " + path);
    return nets;
}

}  // namespace pdectrl
