#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdectrl/deeponet.hpp"
#include "pdectrl/nn.hpp"
#include "pdectrl/pde_env.hpp"

namespace pdectrl {

// flatten feeds the raw state samples to the actor/critic trunks; the
// deeponet kinds feed the operator's pre-summation feature vector and let the
// extractor parameters train along with the heads.
enum class ExtractorKind { flatten, deeponet_random, deeponet_pretrained };

const char* extractor_name(ExtractorKind kind);
ExtractorKind parse_extractor(const std::string& name);

struct SacConfig {
    Benchmark benchmark = Benchmark::hyperbolic;  // sets extractor input scaling
    double discount = 0.99;
    double alpha = 0.2;
    double tau = 0.005;
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    std::size_t batch_size = 256;
    std::size_t capacity = 1000000;
    std::size_t total_steps = 100000;
    std::size_t warmup_steps = 1000;
    std::size_t grad_steps = 1;  // gradient steps per env step after warmup
    ExtractorKind extractor = ExtractorKind::flatten;
    std::vector<std::size_t> actor_hidden{256, 256};
    std::vector<std::size_t> critic_hidden{256, 256};
    DeepONetConfig operator_config;  // deeponet_random architecture
    std::string pretrained_path;     // deeponet_pretrained checkpoint
    bool truncation_bootstraps = false;
    OptKind optimizer = OptKind::adam;
    std::uint64_t seed = 0;
};

struct Transition {
    std::vector<double> state;
    std::vector<double> next_state;
    double action = 0.0;
    double reward = 0.0;
    bool done = false;
    bool truncated = false;  // blow-up truncation (done is also set)
};

struct TransitionView {
    const double* state;
    const double* next_state;
    double action;
    double reward;
    bool done;
    bool truncated;
};

using Batch = std::vector<TransitionView>;

// FIFO ring with uniform with-replacement sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return full_ ? items_.size() : head_; }
    std::size_t capacity() const { return items_.size(); }
    const Transition& at(std::size_t i) const { return items_[i]; }
    TransitionView view(std::size_t i) const;
    // Throws std::logic_error if fewer than batch items are stored.
    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

  private:
    std::vector<Transition> items_;
    std::size_t head_ = 0;
    bool full_ = false;
};

struct Extractor {
    ExtractorKind kind = ExtractorKind::flatten;
    DeepONet model;  // unused for flatten
    std::size_t state_dim = 0;

    std::size_t feature_dim() const {
        return kind == ExtractorKind::flatten ? state_dim : model.latent;
    }
};

struct ExtractorCache {
    ForwardCache branch;
    ForwardCache trunk;
    std::vector<double> branch_out;
    std::vector<double> trunk_out;
};

struct ExtractorGrads {
    NetGrads branch;
    NetGrads trunk;
};

std::vector<double> extract_features(const Extractor& ext, const std::vector<double>& coeff,
                                     const double* state, ExtractorCache& cache);
void extractor_backward(const Extractor& ext, const ExtractorCache& cache,
                        const std::vector<double>& d_features, ExtractorGrads& grads);
ExtractorGrads make_extractor_grads(const Extractor& ext);

struct Actor {
    Extractor ext;
    DenseNet net;  // feature_dim -> hidden -> (mean, raw log_std)
};

struct Critic {
    Extractor ext;
    DenseNet net;  // feature_dim + 1 -> hidden -> scalar Q
};

struct PolicyOut {
    double mean = 0.0;
    double log_std = 0.0;  // clamped to [kLogStdMin, kLogStdMax]
};

PolicyOut actor_forward(const Actor& actor, const std::vector<double>& coeff,
                        const double* state);

// Q value; the action enters the trunk input normalized by the bound.
double critic_forward(const Critic& critic, const std::vector<double>& coeff,
                      const double* state, double action, double action_bound);

struct Agent {
    SacConfig config;
    std::size_t n_points = 0;
    double action_bound = 0.0;
    std::vector<double> coeff;  // coefficient samples of the training plant
    Actor actor;
    Critic critic1, critic2;
    Critic target1, target2;
    Optimizer actor_net_opt, actor_branch_opt, actor_trunk_opt;
    Optimizer critic1_net_opt, critic1_branch_opt, critic1_trunk_opt;
    Optimizer critic2_net_opt, critic2_branch_opt, critic2_trunk_opt;
};

// Builds actor, critics and exact target copies. Network init draws come
// from derive_seed(config.seed, 0) in a fixed documented order (actor
// extractor, actor head, critic1 extractor, critic1 head, critic2 extractor,
// critic2 head); pretrained extractors are all loaded from the same
// checkpoint as five distinct parameter sets.
Agent make_agent(const SacConfig& config, std::size_t n_points, double action_bound,
                 const std::vector<double>& coeff);

// y = r + discount * (1 - done) * (min(q1, q2) - alpha * logpi).
double td_target(double reward, double q1, double q2, double log_pi, bool done,
                 double discount, double alpha);

// One fresh policy sample per item (one rng.normal() each, in batch order).
std::vector<double> compute_target(const Agent& agent, const Batch& batch, Rng& rng);

// Pure gradient evaluations (no parameter update); return the loss. Used by
// the update steps and by finite-difference tests.
double critic_gradients(const Agent& agent, int which, const Batch& batch,
                        const std::vector<double>& y, NetGrads& d_net, ExtractorGrads& d_ext);
double actor_gradients(const Agent& agent, const Batch& batch, const std::vector<double>& noises,
                       NetGrads& d_net, ExtractorGrads& d_ext);

std::pair<double, double> critic_update(Agent& agent, const Batch& batch,
                                        const std::vector<double>& y);
double actor_update(Agent& agent, const Batch& batch, Rng& rng);
void polyak_update(Agent& agent);

double deterministic_action(const Agent& agent, const std::vector<double>& coeff,
                            const double* state);

struct MetricsRow {
    std::size_t step = 0;
    std::size_t episode = 0;
    double episodic_return = 0.0;  // NaN unless an episode ended at this step
    double critic1_loss = 0.0;     // NaN before gradient steps begin
    double critic2_loss = 0.0;
    double actor_loss = 0.0;
    std::size_t buffer_size = 0;
};

struct SacResult {
    Agent agent;
    std::vector<MetricsRow> metrics;
    std::size_t episodes = 0;
};

// Algorithm: per env step sample a ~ pi, step the env, push the transition
// (terminal bonus folded into the final reward), and after warmup run
// grad_steps of compute_target -> critic_update -> polyak_update ->
// actor_update. Bit-deterministic given (seed, config, env config).
SacResult sac_train(Env& env, const SacConfig& config);

// Full agent state under stable net names; optimizer state is not persisted.
void agent_save(const Agent& agent, const std::string& path);
Agent agent_load(const std::string& path);

}  // namespace pdectrl
