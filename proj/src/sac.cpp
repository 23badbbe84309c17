#include "pdectrl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pdectrl/errors.hpp"
#include "pdectrl/kernels.hpp"

namespace pdectrl {

const char* extractor_name(ExtractorKind kind) {
    switch (kind) {
        case ExtractorKind::flatten: return "flatten";
        case ExtractorKind::deeponet_random: return "deeponet_random";
        case ExtractorKind::deeponet_pretrained: return "deeponet_pretrained";
    }
    return "?";
}

ExtractorKind parse_extractor(const std::string& name) {
    if (name == "flatten") return ExtractorKind::flatten;
    if (name == "deeponet_random") return ExtractorKind::deeponet_random;
    if (name == "deeponet_pretrained") return ExtractorKind::deeponet_pretrained;
    throw ConfigError("unknown extractor kind: " + name);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
    if (capacity < 1) throw ConfigError("replay capacity must be at least 1");
    items_.resize(capacity);
}

void ReplayBuffer::push(Transition t) {
    items_[head_] = std::move(t);
    head_ += 1;
    if (head_ == items_.size()) {
        head_ = 0;
        full_ = true;
    }
}

TransitionView ReplayBuffer::view(std::size_t i) const {
    const Transition& t = items_[i];
    return {t.state.data(), t.next_state.data(), t.action, t.reward, t.done, t.truncated};
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
    const std::size_t n = size();
    if (n < batch) {
        throw std::logic_error("replay buffer not ready: holds " + std::to_string(n) +
                               " transitions, batch needs " + std::to_string(batch));
    }
    std::vector<std::size_t> idx(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const auto j = static_cast<std::size_t>(rng.next_double() * static_cast<double>(n));
        idx[i] = std::min(j, n - 1);
    }
    return idx;
}

std::vector<double> extract_features(const Extractor& ext, const std::vector<double>& coeff,
                                     const double* state, ExtractorCache& cache) {
    if (ext.kind == ExtractorKind::flatten) {
        return std::vector<double>(state, state + ext.state_dim);
    }
    const DeepONet& m = ext.model;
    if (coeff.size() != m.n_points) {
        throw std::invalid_argument("extract_features: coefficient size mismatch");
    }
    std::vector<double> x(2 * m.n_points);
    std::copy(coeff.begin(), coeff.end(), x.begin());
    std::copy(state, state + m.n_points, x.begin() + static_cast<std::ptrdiff_t>(m.n_points));
    cache.branch_out = net_forward(m.branch, x, cache.branch);
    cache.trunk_out = net_forward(m.trunk, {1.0}, cache.trunk);
    std::vector<double> features(m.latent);
    for (std::size_t i = 0; i < m.latent; ++i) {
        features[i] = cache.branch_out[i] * cache.trunk_out[i];
    }
    return features;
}

ExtractorGrads make_extractor_grads(const Extractor& ext) {
    ExtractorGrads g;
    if (ext.kind != ExtractorKind::flatten) {
        g.branch = make_grads(ext.model.branch);
        g.trunk = make_grads(ext.model.trunk);
    }
    return g;
}

void extractor_backward(const Extractor& ext, const ExtractorCache& cache,
                        const std::vector<double>& d_features, ExtractorGrads& grads) {
    if (ext.kind == ExtractorKind::flatten) return;
    const std::size_t p = ext.model.latent;
    std::vector<double> d_b(p), d_t(p);
    for (std::size_t i = 0; i < p; ++i) {
        d_b[i] = d_features[i] * cache.trunk_out[i];
        d_t[i] = d_features[i] * cache.branch_out[i];
    }
    net_backward(ext.model.branch, cache.branch, d_b, grads.branch);
    net_backward(ext.model.trunk, cache.trunk, d_t, grads.trunk);
}

PolicyOut actor_forward(const Actor& actor, const std::vector<double>& coeff,
                        const double* state) {
    ExtractorCache ec;
    ForwardCache nc;
    const std::vector<double> features = extract_features(actor.ext, coeff, state, ec);
    const std::vector<double> out = net_forward(actor.net, features, nc);
    PolicyOut po;
    po.mean = out[0];
    po.log_std = std::clamp(out[1], kLogStdMin, kLogStdMax);
    return po;
}

namespace {

double critic_forward_cached(const Critic& critic, const std::vector<double>& coeff,
                             const double* state, double action, double bound,
                             ExtractorCache& ec, ForwardCache& nc) {
    std::vector<double> input = extract_features(critic.ext, coeff, state, ec);
    input.push_back(action / bound);
    return net_forward(critic.net, input, nc)[0];
}

void lerp_net(DenseNet& target, const DenseNet& source, double tau) {
    for (std::size_t l = 0; l < target.layers.size(); ++l) {
        Layer& t = target.layers[l];
        const Layer& s = source.layers[l];
        for (std::size_t i = 0; i < t.w.size(); ++i) t.w[i] += tau * (s.w[i] - t.w[i]);
        for (std::size_t i = 0; i < t.b.size(); ++i) t.b[i] += tau * (s.b[i] - t.b[i]);
    }
}

}  // namespace

double critic_forward(const Critic& critic, const std::vector<double>& coeff,
                      const double* state, double action, double action_bound) {
    ExtractorCache ec;
    ForwardCache nc;
    return critic_forward_cached(critic, coeff, state, action, action_bound, ec, nc);
}

Agent make_agent(const SacConfig& config, std::size_t n_points, double action_bound,
                 const std::vector<double>& coeff) {
    if (!(config.discount >= 0.0 && config.discount < 1.0)) {
        throw ConfigError("sac discount must lie in [0, 1)");
    }
    if (!(config.tau > 0.0 && config.tau <= 1.0)) throw ConfigError("sac tau must lie in (0, 1]");
    if (config.alpha < 0.0) throw ConfigError("sac alpha must be non-negative");
    if (config.batch_size < 1) throw ConfigError("sac batch_size must be at least 1");
    if (config.capacity < config.batch_size) {
        throw ConfigError("sac capacity must be at least batch_size");
    }
    if (!(action_bound > 0.0)) throw ConfigError("sac action bound must be positive");
    if (n_points < 1) throw ConfigError("sac state dimension must be at least 1");
    if (coeff.size() != n_points) throw ConfigError("sac coefficient size mismatch");

    Rng rng(derive_seed(config.seed, 0));
    auto make_ext = [&]() {
        Extractor ext;
        ext.kind = config.extractor;
        ext.state_dim = n_points;
        if (config.extractor == ExtractorKind::deeponet_random) {
            ext.model = make_deeponet(config.benchmark, n_points, config.operator_config, rng);
        } else if (config.extractor == ExtractorKind::deeponet_pretrained) {
            if (config.pretrained_path.empty()) {
                throw ConfigError("extractor deeponet_pretrained requires a checkpoint path");
            }
            ext.model = deeponet_load(config.pretrained_path);
            if (ext.model.n_points != n_points) {
                throw ConfigError("pretrained checkpoint grid (" +
                                  std::to_string(ext.model.n_points) +
                                  ") does not match the environment (" +
                                  std::to_string(n_points) + ")");
            }
        }
        return ext;
    };

    Agent agent;
    agent.config = config;
    agent.n_points = n_points;
    agent.action_bound = action_bound;
    agent.coeff = coeff;
    agent.actor.ext = make_ext();
    agent.actor.net = make_net(agent.actor.ext.feature_dim(), config.actor_hidden, 2, Act::relu,
                               Act::identity, rng);
    agent.critic1.ext = make_ext();
    agent.critic1.net = make_net(agent.critic1.ext.feature_dim() + 1, config.critic_hidden, 1,
                                 Act::relu, Act::identity, rng);
    agent.critic2.ext = make_ext();
    agent.critic2.net = make_net(agent.critic2.ext.feature_dim() + 1, config.critic_hidden, 1,
                                 Act::relu, Act::identity, rng);
    agent.target1 = agent.critic1;
    agent.target2 = agent.critic2;

    const bool don = config.extractor != ExtractorKind::flatten;
    auto setup = [&](Optimizer& opt, const DenseNet& net, double lr) {
        opt.kind = config.optimizer;
        opt.lr = lr;
        opt.init(net);
    };
    setup(agent.actor_net_opt, agent.actor.net, config.actor_lr);
    setup(agent.critic1_net_opt, agent.critic1.net, config.critic_lr);
    setup(agent.critic2_net_opt, agent.critic2.net, config.critic_lr);
    if (don) {
        setup(agent.actor_branch_opt, agent.actor.ext.model.branch, config.actor_lr);
        setup(agent.actor_trunk_opt, agent.actor.ext.model.trunk, config.actor_lr);
        setup(agent.critic1_branch_opt, agent.critic1.ext.model.branch, config.critic_lr);
        setup(agent.critic1_trunk_opt, agent.critic1.ext.model.trunk, config.critic_lr);
        setup(agent.critic2_branch_opt, agent.critic2.ext.model.branch, config.critic_lr);
        setup(agent.critic2_trunk_opt, agent.critic2.ext.model.trunk, config.critic_lr);
    }
    return agent;
}

double td_target(double reward, double q1, double q2, double log_pi, bool done, double discount,
                 double alpha) {
    if (done) return reward;
    return reward + discount * (std::min(q1, q2) - alpha * log_pi);
}

std::vector<double> compute_target(const Agent& agent, const Batch& batch, Rng& rng) {
    std::vector<double> y(batch.size());
    ExtractorCache ec, ec1, ec2;
    ForwardCache nc, nc1, nc2;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TransitionView& tv = batch[i];
        const std::vector<double> features =
            extract_features(agent.actor.ext, agent.coeff, tv.next_state, ec);
        const std::vector<double> out = net_forward(agent.actor.net, features, nc);
        const double log_std = std::clamp(out[1], kLogStdMin, kLogStdMax);
        const SquashedSample sq =
            squashed_gaussian_sample(out[0], log_std, rng.normal(), agent.action_bound);
        const double q1 = critic_forward_cached(agent.target1, agent.coeff, tv.next_state,
                                                sq.action, agent.action_bound, ec1, nc1);
        const double q2 = critic_forward_cached(agent.target2, agent.coeff, tv.next_state,
                                                sq.action, agent.action_bound, ec2, nc2);
        const bool done_eff =
            tv.done && !(agent.config.truncation_bootstraps && tv.truncated);
        y[i] = td_target(tv.reward, q1, q2, sq.log_prob, done_eff, agent.config.discount,
                         agent.config.alpha);
    }
    return y;
}

double critic_gradients(const Agent& agent, int which, const Batch& batch,
                        const std::vector<double>& y, NetGrads& d_net, ExtractorGrads& d_ext) {
    if (which != 1 && which != 2) throw std::invalid_argument("critic_gradients: which must be 1 or 2");
    const Critic& critic = which == 1 ? agent.critic1 : agent.critic2;
    if (y.size() != batch.size()) {
        throw std::invalid_argument("critic_gradients: target size mismatch");
    }
    const auto B = static_cast<double>(batch.size());
    const std::size_t fd = critic.ext.feature_dim();
    double loss = 0.0;
    ExtractorCache ec;
    ForwardCache nc;
    std::vector<double> d_out(1), d_feat(fd);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TransitionView& tv = batch[i];
        const double q = critic_forward_cached(critic, agent.coeff, tv.state, tv.action,
                                               agent.action_bound, ec, nc);
        const double err = q - y[i];
        loss += err * err / B;
        d_out[0] = 2.0 * err / B;
        const std::vector<double> d_input = net_backward(critic.net, nc, d_out, d_net);
        if (critic.ext.kind != ExtractorKind::flatten) {
            std::copy_n(d_input.begin(), fd, d_feat.begin());
            extractor_backward(critic.ext, ec, d_feat, d_ext);
        }
    }
    return loss;
}

double actor_gradients(const Agent& agent, const Batch& batch, const std::vector<double>& noises,
                       NetGrads& d_net, ExtractorGrads& d_ext) {
    if (noises.size() != batch.size()) {
        throw std::invalid_argument("actor_gradients: noise size mismatch");
    }
    const auto B = static_cast<double>(batch.size());
    const double bound = agent.action_bound;
    const double alpha = agent.config.alpha;
    double loss = 0.0;
    ExtractorCache ec, ec1, ec2;
    ForwardCache nc, nc1, nc2;
    // Parameter gradients of the critics are discarded during the actor step;
    // these sinks absorb them so only dQ/da flows back.
    NetGrads sink1 = make_grads(agent.critic1.net);
    NetGrads sink2 = make_grads(agent.critic2.net);
    std::vector<double> d_out(2);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TransitionView& tv = batch[i];
        const std::vector<double> features =
            extract_features(agent.actor.ext, agent.coeff, tv.state, ec);
        const std::vector<double> out = net_forward(agent.actor.net, features, nc);
        const double raw = out[1];
        const double log_std = std::clamp(raw, kLogStdMin, kLogStdMax);
        const SquashedSample sq = squashed_gaussian_sample(out[0], log_std, noises[i], bound);
        const double q1 = critic_forward_cached(agent.critic1, agent.coeff, tv.state, sq.action,
                                                bound, ec1, nc1);
        const double q2 = critic_forward_cached(agent.critic2, agent.coeff, tv.state, sq.action,
                                                bound, ec2, nc2);
        loss += (alpha * sq.log_prob - std::min(q1, q2)) / B;

        const bool first = q1 <= q2;
        const std::vector<double> d_cin = first
                                              ? net_backward(agent.critic1.net, nc1, {1.0}, sink1)
                                              : net_backward(agent.critic2.net, nc2, {1.0}, sink2);
        const double dq_da = d_cin.back() / bound;

        const double th = std::tanh(sq.pre_squash);
        const double da_dpre = bound * (1.0 - th * th);
        const double sigma_eps = std::exp(log_std) * noises[i];
        const double dlogpi_dpre = 2.0 * th;
        const double d_pre = alpha * dlogpi_dpre - dq_da * da_dpre;
        d_out[0] = d_pre / B;
        const bool gate = raw > kLogStdMin && raw < kLogStdMax;
        d_out[1] = gate ? (d_pre * sigma_eps - alpha) / B : 0.0;
        const std::vector<double> d_feat = net_backward(agent.actor.net, nc, d_out, d_net);
        extractor_backward(agent.actor.ext, ec, d_feat, d_ext);
    }
    return loss;
}

std::pair<double, double> critic_update(Agent& agent, const Batch& batch,
                                        const std::vector<double>& y) {
    const bool don = agent.config.extractor != ExtractorKind::flatten;
    double losses[2];
    for (int which = 1; which <= 2; ++which) {
        Critic& critic = which == 1 ? agent.critic1 : agent.critic2;
        NetGrads d_net = make_grads(critic.net);
        ExtractorGrads d_ext = make_extractor_grads(critic.ext);
        losses[which - 1] = critic_gradients(agent, which, batch, y, d_net, d_ext);
        (which == 1 ? agent.critic1_net_opt : agent.critic2_net_opt).step(critic.net, d_net);
        if (don) {
            (which == 1 ? agent.critic1_branch_opt : agent.critic2_branch_opt)
                .step(critic.ext.model.branch, d_ext.branch);
            (which == 1 ? agent.critic1_trunk_opt : agent.critic2_trunk_opt)
                .step(critic.ext.model.trunk, d_ext.trunk);
        }
    }
    return {losses[0], losses[1]};
}

double actor_update(Agent& agent, const Batch& batch, Rng& rng) {
    std::vector<double> noises(batch.size());
    for (double& n : noises) n = rng.normal();
    NetGrads d_net = make_grads(agent.actor.net);
    ExtractorGrads d_ext = make_extractor_grads(agent.actor.ext);
    const double loss = actor_gradients(agent, batch, noises, d_net, d_ext);
    agent.actor_net_opt.step(agent.actor.net, d_net);
    if (agent.config.extractor != ExtractorKind::flatten) {
        agent.actor_branch_opt.step(agent.actor.ext.model.branch, d_ext.branch);
        agent.actor_trunk_opt.step(agent.actor.ext.model.trunk, d_ext.trunk);
    }
    return loss;
}

void polyak_update(Agent& agent) {
    const double tau = agent.config.tau;
    lerp_net(agent.target1.net, agent.critic1.net, tau);
    lerp_net(agent.target2.net, agent.critic2.net, tau);
    if (agent.config.extractor != ExtractorKind::flatten) {
        lerp_net(agent.target1.ext.model.branch, agent.critic1.ext.model.branch, tau);
        lerp_net(agent.target1.ext.model.trunk, agent.critic1.ext.model.trunk, tau);
        lerp_net(agent.target2.ext.model.branch, agent.critic2.ext.model.branch, tau);
        lerp_net(agent.target2.ext.model.trunk, agent.critic2.ext.model.trunk, tau);
    }
}

double deterministic_action(const Agent& agent, const std::vector<double>& coeff,
                            const double* state) {
    ExtractorCache ec;
    ForwardCache nc;
    const std::vector<double> features = extract_features(agent.actor.ext, coeff, state, ec);
    const std::vector<double> out = net_forward(agent.actor.net, features, nc);
    return agent.action_bound * std::tanh(out[0]);
}

SacResult sac_train(Env& env, const SacConfig& config_in) {
    SacConfig config = config_in;
    config.benchmark = env.config().kind;
    const std::size_t n = env.grid().n_points;

    SacResult result;
    result.agent = make_agent(config, n, env.config().action_bound, env.coeff().samples);
    Agent& agent = result.agent;

    Rng rng(derive_seed(config.seed, 1));
    ReplayBuffer buffer(config.capacity);
    env.reset(rng);
    std::vector<double> state = env.state().values;
    double ep_return = 0.0;
    std::size_t episode = 0;
    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    result.metrics.reserve(config.total_steps);

    for (std::size_t step = 1; step <= config.total_steps; ++step) {
        const PolicyOut po = actor_forward(agent.actor, agent.coeff, state.data());
        const SquashedSample sq =
            squashed_gaussian_sample(po.mean, po.log_std, rng.normal(), agent.action_bound);

        StepResult res;
        try {
            res = env.step(sq.action);
        } catch (const EnvironmentFault& e) {
            throw EnvironmentFault(std::string(e.what()) + " (training step " +
                                   std::to_string(step) + ")");
        }
        double reward = res.reward;
        if (res.done) reward += env.bonus();

        Transition t;
        t.state = state;
        t.next_state = env.state().values;
        t.action = sq.action;
        t.reward = reward;
        t.done = res.done;
        t.truncated = res.truncated_by_blowup;
        buffer.push(std::move(t));
        ep_return += reward;

        MetricsRow row;
        row.step = step;
        row.episode = episode;
        row.episodic_return = kNaN;
        row.critic1_loss = kNaN;
        row.critic2_loss = kNaN;
        row.actor_loss = kNaN;

        if (res.done) {
            row.episodic_return = ep_return;
            episode += 1;
            ep_return = 0.0;
            env.reset(rng);
        }
        state = env.state().values;

        if (step > config.warmup_steps && buffer.size() >= config.batch_size) {
            for (std::size_t g = 0; g < config.grad_steps; ++g) {
                const std::vector<std::size_t> idx =
                    buffer.sample_indices(config.batch_size, rng);
                Batch batch;
                batch.reserve(idx.size());
                for (std::size_t i : idx) batch.push_back(buffer.view(i));
                const std::vector<double> y = compute_target(agent, batch, rng);
                const auto [l1, l2] = critic_update(agent, batch, y);
                polyak_update(agent);
                const double la = actor_update(agent, batch, rng);
                if (!std::isfinite(l1) || !std::isfinite(l2) || !std::isfinite(la)) {
                    throw NumericalError("non-finite loss at training step " +
                                         std::to_string(step) + " (critic1 " +
                                         std::to_string(l1) + ", critic2 " + std::to_string(l2) +
                                         ", actor " + std::to_string(la) + ")");
                }
                row.critic1_loss = l1;
                row.critic2_loss = l2;
                row.actor_loss = la;
            }
        }
        row.buffer_size = buffer.size();
        result.metrics.push_back(row);
    }
    result.episodes = episode;
    return result;
}

namespace {

void save_component_nets(NamedNets& nets, const std::string& prefix, const Extractor& ext,
                         const DenseNet& head) {
    nets.add(prefix + ".net", head);
    if (ext.kind != ExtractorKind::flatten) {
        nets.add(prefix + ".branch", ext.model.branch);
        nets.add(prefix + ".trunk", ext.model.trunk);
        nets.add(prefix + ".bias", scalar_net(ext.model.output_bias));
    }
}

Extractor load_extractor(const NamedNets& nets, const std::string& prefix, ExtractorKind kind,
                         std::size_t n_points) {
    Extractor ext;
    ext.kind = kind;
    ext.state_dim = n_points;
    if (kind == ExtractorKind::flatten) return ext;
    ext.model.branch = nets.get(prefix + ".branch");
    ext.model.trunk = nets.get(prefix + ".trunk");
    ext.model.output_bias = scalar_value(nets.get(prefix + ".bias"));
    if (ext.model.branch.input_dim() != 2 * n_points ||
        ext.model.branch.output_dim() != ext.model.trunk.output_dim()) {
        throw FormatError("agent checkpoint holds inconsistent extractor shapes");
    }
    ext.model.n_points = n_points;
    ext.model.latent = ext.model.branch.output_dim();
    return ext;
}

}  // namespace

void agent_save(const Agent& agent, const std::string& path) {
    NamedNets nets;
    nets.add("meta.extractor",
             scalar_net(static_cast<double>(static_cast<int>(agent.config.extractor))));
    nets.add("meta.benchmark",
             scalar_net(agent.config.benchmark == Benchmark::hyperbolic ? 0.0 : 1.0));
    nets.add("meta.n_points", scalar_net(static_cast<double>(agent.n_points)));
    nets.add("meta.action_bound", scalar_net(agent.action_bound));
    save_component_nets(nets, "actor", agent.actor.ext, agent.actor.net);
    save_component_nets(nets, "critic1", agent.critic1.ext, agent.critic1.net);
    save_component_nets(nets, "critic2", agent.critic2.ext, agent.critic2.net);
    save_component_nets(nets, "target1", agent.target1.ext, agent.target1.net);
    save_component_nets(nets, "target2", agent.target2.ext, agent.target2.net);
    checkpoint_save(nets, path);
}

Agent agent_load(const std::string& path) {
    const NamedNets nets = checkpoint_load(path);
    Agent agent;
    const double kind_value = scalar_value(nets.get("meta.extractor"));
    if (kind_value != 0.0 && kind_value != 1.0 && kind_value != 2.0) {
        throw FormatError("agent checkpoint has an unknown extractor tag");
    }
    agent.config.extractor = static_cast<ExtractorKind>(static_cast<int>(kind_value));
    agent.config.benchmark = scalar_value(nets.get("meta.benchmark")) == 0.0
                                 ? Benchmark::hyperbolic
                                 : Benchmark::parabolic;
    agent.n_points = static_cast<std::size_t>(scalar_value(nets.get("meta.n_points")));
    agent.action_bound = scalar_value(nets.get("meta.action_bound"));
    if (agent.n_points < 1 || !(agent.action_bound > 0.0)) {
        throw FormatError("agent checkpoint has implausible metadata");
    }
    const ExtractorKind kind = agent.config.extractor;
    agent.actor.ext = load_extractor(nets, "actor", kind, agent.n_points);
    agent.actor.net = nets.get("actor.net");
    agent.critic1.ext = load_extractor(nets, "critic1", kind, agent.n_points);
    agent.critic1.net = nets.get("critic1.net");
    agent.critic2.ext = load_extractor(nets, "critic2", kind, agent.n_points);
    agent.critic2.net = nets.get("critic2.net");
    agent.target1.ext = load_extractor(nets, "target1", kind, agent.n_points);
    agent.target1.net = nets.get("target1.net");
    agent.target2.ext = load_extractor(nets, "target2", kind, agent.n_points);
    agent.target2.net = nets.get("target2.net");
    if (agent.actor.net.output_dim() != 2 || agent.critic1.net.output_dim() != 1) {
        throw FormatError("agent checkpoint holds inconsistent head shapes");
    }
    return agent;
}

}  // namespace pdectrl
