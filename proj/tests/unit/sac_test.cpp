#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "pdectrl/errors.hpp"
#include "pdectrl/sac.hpp"

using namespace pdectrl;

namespace {

SacConfig tiny_config(ExtractorKind kind) {
    SacConfig cfg;
    cfg.extractor = kind;
    cfg.actor_hidden = {8};
    cfg.critic_hidden = {8};
    cfg.operator_config.latent = 4;
    cfg.operator_config.branch_hidden = {8};
    cfg.operator_config.trunk_hidden = {6};
    cfg.batch_size = 4;
    cfg.capacity = 256;
    cfg.seed = 3;
    return cfg;
}

std::vector<double> random_state(Rng& rng, std::size_t n, double scale = 5.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-scale, scale);
    return v;
}

Transition random_transition(Rng& rng, std::size_t n) {
    Transition t;
    t.state = random_state(rng, n);
    t.next_state = random_state(rng, n);
    t.action = rng.uniform(-2.0, 2.0);
    t.reward = rng.uniform(-5.0, 5.0);
    t.done = rng.next_double() < 0.2;
    t.truncated = t.done && rng.next_double() < 0.5;
    return t;
}

// Zero every layer so the net outputs exactly its final bias.
void make_constant(DenseNet& net, const std::vector<double>& bias) {
    for (auto& layer : net.layers) {
        std::fill(layer.w.begin(), layer.w.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    net.layers.back().b = bias;
}

EnvConfig tiny_env_config() {
    EnvConfig cfg;
    cfg.n_points = 11;
    cfg.dt = 0.05;
    cfg.horizon = 1.0;
    cfg.steps_per_action = 2;
    cfg.gamma = 5.5;
    cfg.action_bound = 10.0;
    return cfg;
}

double rel_err(double fd, double an) {
    return std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-6});
}

constexpr double kL2Eps = 1e-5;

}  // namespace

TEST_CASE("extractor names round-trip") {
    CHECK(parse_extractor("flatten") == ExtractorKind::flatten);
    CHECK(parse_extractor("deeponet_random") == ExtractorKind::deeponet_random);
    CHECK(parse_extractor("deeponet_pretrained") == ExtractorKind::deeponet_pretrained);
    CHECK(extractor_name(ExtractorKind::flatten) == std::string("flatten"));
    CHECK_THROWS_AS(parse_extractor("cnn"), ConfigError);
}

TEST_CASE("replay buffer is a fifo ring with uniform sampling") {
    ReplayBuffer buf(3);
    CHECK(buf.capacity() == 3);
    CHECK(buf.size() == 0);
    Rng rng(1);
    for (int i = 0; i < 4; ++i) {
        Transition t;
        t.state = {static_cast<double>(i)};
        t.next_state = {0.0};
        t.action = i;
        buf.push(std::move(t));
    }
    CHECK(buf.size() == 3);
    // The 4th push overwrote slot 0; slots 1 and 2 keep items 1 and 2.
    CHECK(buf.at(0).action == 3.0);
    CHECK(buf.at(1).action == 1.0);
    CHECK(buf.at(2).action == 2.0);
    CHECK(buf.view(1).action == 1.0);
    CHECK(buf.view(1).state[0] == 1.0);

    CHECK_THROWS_AS(buf.sample_indices(4, rng), std::logic_error);
    auto idx = buf.sample_indices(3, rng);
    CHECK(idx.size() == 3);
    for (auto i : idx) CHECK(i < 3);
}

TEST_CASE("sampling is with replacement and close to uniform") {
    ReplayBuffer buf(16);
    for (int i = 0; i < 10; ++i) {
        Transition t;
        t.state = {0.0};
        t.next_state = {0.0};
        buf.push(std::move(t));
    }
    Rng rng(2024);
    // A batch as large as the population almost surely repeats an index.
    bool any_duplicate = false;
    for (int trial = 0; trial < 5; ++trial) {
        auto idx = buf.sample_indices(10, rng);
        std::vector<int> seen(10, 0);
        for (auto i : idx) seen[i]++;
        for (int c : seen) any_duplicate = any_duplicate || c > 1;
    }
    CHECK(any_duplicate);

    // 1e5 draws: each of the 10 cells expects 1e4 with sigma ~95; a 4.2
    // sigma band is deterministic for the fixed seed and extremely unlikely
    // to flag a genuinely uniform sampler.
    std::vector<int> counts(10, 0);
    for (int rep = 0; rep < 10000; ++rep) {
        for (auto i : buf.sample_indices(10, rng)) counts[i]++;
    }
    for (int c : counts) CHECK(std::fabs(c - 10000.0) < 400.0);
}

TEST_CASE("td_target arithmetic") {
    CHECK(td_target(1.0, 2.0, 3.0, -1.0, false, 0.99, 0.2) ==
          doctest::Approx(3.178).epsilon(1e-12));
    CHECK(td_target(1.0, 3.0, 2.0, -1.0, false, 0.99, 0.2) ==
          doctest::Approx(3.178).epsilon(1e-12));  // min is symmetric
    CHECK(td_target(1.5, 2.0, 3.0, -1.0, true, 0.99, 0.2) == 1.5);
    CHECK(td_target(1.5, 2.0, 3.0, -1.0, false, 0.0, 0.2) == 1.5);
}

TEST_CASE("make_agent wires shapes, seeds and target copies") {
    const std::size_t n = 7;
    std::vector<double> coeff(n, 1.0);
    auto cfg = tiny_config(ExtractorKind::flatten);
    auto agent = make_agent(cfg, n, 10.0, coeff);
    CHECK(agent.n_points == n);
    CHECK(agent.action_bound == 10.0);
    CHECK(agent.actor.ext.feature_dim() == n);
    CHECK(agent.actor.net.input_dim() == n);
    CHECK(agent.actor.net.output_dim() == 2);
    CHECK(agent.critic1.net.input_dim() == n + 1);
    CHECK(agent.critic1.net.output_dim() == 1);
    // Targets start as exact copies.
    CHECK(agent.target1.net.layers[0].w == agent.critic1.net.layers[0].w);
    CHECK(agent.target2.net.layers[0].w == agent.critic2.net.layers[0].w);
    // The twin critics differ from each other.
    CHECK(agent.critic1.net.layers[0].w != agent.critic2.net.layers[0].w);

    auto again = make_agent(cfg, n, 10.0, coeff);
    CHECK(again.actor.net.layers[0].w == agent.actor.net.layers[0].w);

    auto don = make_agent(tiny_config(ExtractorKind::deeponet_random), n, 10.0, coeff);
    CHECK(don.actor.ext.feature_dim() == 4);
    CHECK(don.actor.net.input_dim() == 4);
    CHECK(don.critic1.net.input_dim() == 5);
    // Independent extractor draws per component.
    CHECK(don.actor.ext.model.branch.layers[0].w != don.critic1.ext.model.branch.layers[0].w);
    CHECK(don.target1.ext.model.branch.layers[0].w == don.critic1.ext.model.branch.layers[0].w);
}

TEST_CASE("pretrained extractors load five copies of the checkpoint") {
    const std::size_t n = 9;
    DeepONetConfig arch;
    arch.latent = 4;
    arch.branch_hidden = {8};
    arch.trunk_hidden = {6};
    Rng rng(31);
    auto model = make_deeponet(Benchmark::hyperbolic, n, arch, rng);
    std::string path = "/tmp/pdectrl_sac_test_pretrained.nncp";
    deeponet_save(model, path);

    auto cfg = tiny_config(ExtractorKind::deeponet_pretrained);
    cfg.operator_config = arch;
    cfg.pretrained_path = path;
    std::vector<double> coeff(n, 2.0);
    auto agent = make_agent(cfg, n, 5.0, coeff);
    CHECK(agent.actor.ext.model.branch.layers[0].w == model.branch.layers[0].w);
    CHECK(agent.critic1.ext.model.branch.layers[0].w == model.branch.layers[0].w);
    CHECK(agent.critic2.ext.model.trunk.layers[0].w == model.trunk.layers[0].w);

    cfg.pretrained_path.clear();
    CHECK_THROWS_AS(make_agent(cfg, n, 5.0, coeff), ConfigError);

    cfg.pretrained_path = path;
    std::vector<double> coeff11(11, 2.0);
    CHECK_THROWS_AS(make_agent(cfg, 11, 5.0, coeff11), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("flatten features are the raw state") {
    auto cfg = tiny_config(ExtractorKind::flatten);
    std::vector<double> coeff(5, 1.0);
    auto agent = make_agent(cfg, 5, 10.0, coeff);
    std::vector<double> state = {1.0, -2.0, 3.0, -4.0, 5.0};
    ExtractorCache cache;
    auto features = extract_features(agent.actor.ext, coeff, state.data(), cache);
    CHECK(features == state);
}

TEST_CASE("compute_target reduces to the scalar formula with rigged critics") {
    const std::size_t n = 5;
    std::vector<double> coeff(n, 1.0);
    auto cfg = tiny_config(ExtractorKind::flatten);
    cfg.alpha = 0.0;
    cfg.discount = 0.99;
    auto agent = make_agent(cfg, n, 10.0, coeff);
    make_constant(agent.target1.net, {2.0});
    make_constant(agent.target2.net, {1.5});

    Rng data_rng(8);
    std::vector<Transition> storage;
    Batch batch;
    for (int i = 0; i < 1000; ++i) storage.push_back(random_transition(data_rng, n));
    for (const auto& t : storage) {
        batch.push_back({t.state.data(), t.next_state.data(), t.action, t.reward, t.done,
                         t.truncated});
    }
    Rng rng(99);
    auto y = compute_target(agent, batch, rng);
    REQUIRE(y.size() == batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double expect = batch[i].done ? batch[i].reward : batch[i].reward + 0.99 * 1.5;
        CHECK(std::fabs(y[i] - expect) < 1e-12);
    }
}

TEST_CASE("compute_target honors the entropy term and truncation bootstrapping") {
    const std::size_t n = 4;
    std::vector<double> coeff(n, 1.0);
    auto cfg = tiny_config(ExtractorKind::flatten);
    cfg.alpha = 0.2;
    cfg.discount = 0.9;
    cfg.truncation_bootstraps = true;
    auto agent = make_agent(cfg, n, 2.0, coeff);
    make_constant(agent.actor.net, {0.25, -0.3});  // mean, raw log_std
    make_constant(agent.target1.net, {1.0});
    make_constant(agent.target2.net, {4.0});

    Rng data_rng(18);
    std::vector<Transition> storage;
    Batch batch;
    for (int i = 0; i < 200; ++i) storage.push_back(random_transition(data_rng, n));
    storage[0].done = true;
    storage[0].truncated = true;   // bootstraps under this config
    storage[1].done = true;
    storage[1].truncated = false;  // true terminal
    for (const auto& t : storage) {
        batch.push_back({t.state.data(), t.next_state.data(), t.action, t.reward, t.done,
                         t.truncated});
    }

    Rng rng_a(55), rng_b(55);
    auto y = compute_target(agent, batch, rng_a);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto sq = squashed_gaussian_sample(0.25, -0.3, rng_b.normal(), 2.0);
        bool terminal = batch[i].done && !batch[i].truncated;
        double expect = terminal
                            ? batch[i].reward
                            : batch[i].reward + 0.9 * (1.0 - 0.2 * sq.log_prob);
        CHECK(y[i] == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("critic gradients pass finite-difference checks") {
    for (auto kind : {ExtractorKind::flatten, ExtractorKind::deeponet_random}) {
        const std::size_t n = 4;
        std::vector<double> coeff(n, 1.5);
        auto cfg = tiny_config(kind);
        cfg.actor_hidden = {6};
        cfg.critic_hidden = {6};
        auto agent = make_agent(cfg, n, 3.0, coeff);

        Rng data_rng(7);
        std::vector<Transition> storage;
        Batch batch;
        for (int i = 0; i < 3; ++i) storage.push_back(random_transition(data_rng, n));
        for (const auto& t : storage) {
            batch.push_back({t.state.data(), t.next_state.data(), t.action, t.reward, t.done,
                             t.truncated});
        }
        std::vector<double> y = {0.5, -1.0, 2.0};

        NetGrads d_net = make_grads(agent.critic1.net);
        ExtractorGrads d_ext = make_extractor_grads(agent.critic1.ext);
        critic_gradients(agent, 1, batch, y, d_net, d_ext);

        const double eps = 1e-6;
        auto loss_at = [&]() {
            NetGrads sink = make_grads(agent.critic1.net);
            ExtractorGrads esink = make_extractor_grads(agent.critic1.ext);
            return critic_gradients(agent, 1, batch, y, sink, esink);
        };
        for (std::size_t l = 0; l < agent.critic1.net.layers.size(); ++l) {
            auto& w = agent.critic1.net.layers[l].w;
            for (std::size_t k = 0; k < w.size(); k += 3) {
                double saved = w[k];
                w[k] = saved + eps;
                double up = loss_at();
                w[k] = saved - eps;
                double dn = loss_at();
                w[k] = saved;
                CHECK(rel_err((up - dn) / (2 * eps), d_net.w[l][k]) < kL2Eps);
            }
        }
        if (kind == ExtractorKind::deeponet_random) {
            auto& bw = agent.critic1.ext.model.branch.layers[0].w;
            for (std::size_t k = 0; k < bw.size(); k += 5) {
                double saved = bw[k];
                bw[k] = saved + eps;
                double up = loss_at();
                bw[k] = saved - eps;
                double dn = loss_at();
                bw[k] = saved;
                CHECK(rel_err((up - dn) / (2 * eps), d_ext.branch.w[0][k]) < kL2Eps);
            }
            auto& tw = agent.critic1.ext.model.trunk.layers.back().w;
            for (std::size_t k = 0; k < tw.size(); k += 2) {
                double saved = tw[k];
                tw[k] = saved + eps;
                double up = loss_at();
                tw[k] = saved - eps;
                double dn = loss_at();
                tw[k] = saved;
                CHECK(rel_err((up - dn) / (2 * eps),
                              d_ext.trunk.w[agent.critic1.ext.model.trunk.layers.size() - 1][k]) <
                      kL2Eps);
            }
        }
    }
}

TEST_CASE("actor gradients pass finite-difference checks") {
    for (auto kind : {ExtractorKind::flatten, ExtractorKind::deeponet_random}) {
        const std::size_t n = 4;
        std::vector<double> coeff(n, -0.5);
        auto cfg = tiny_config(kind);
        cfg.actor_hidden = {6};
        cfg.critic_hidden = {6};
        cfg.alpha = 0.2;
        auto agent = make_agent(cfg, n, 3.0, coeff);

        Rng data_rng(17);
        std::vector<Transition> storage;
        Batch batch;
        for (int i = 0; i < 3; ++i) storage.push_back(random_transition(data_rng, n));
        for (const auto& t : storage) {
            batch.push_back({t.state.data(), t.next_state.data(), t.action, t.reward, t.done,
                             t.truncated});
        }
        std::vector<double> noises = {0.3, -1.1, 0.7};

        NetGrads d_net = make_grads(agent.actor.net);
        ExtractorGrads d_ext = make_extractor_grads(agent.actor.ext);
        actor_gradients(agent, batch, noises, d_net, d_ext);

        const double eps = 1e-6;
        // The loss chains through both critics; cancellation noise on
        // small-magnitude gradients needs a little more slack than tol.
        const double tol = 5e-5;
        auto loss_at = [&]() {
            NetGrads sink = make_grads(agent.actor.net);
            ExtractorGrads esink = make_extractor_grads(agent.actor.ext);
            return actor_gradients(agent, batch, noises, sink, esink);
        };
        for (std::size_t l = 0; l < agent.actor.net.layers.size(); ++l) {
            auto& w = agent.actor.net.layers[l].w;
            for (std::size_t k = 0; k < w.size(); k += 3) {
                double saved = w[k];
                w[k] = saved + eps;
                double up = loss_at();
                w[k] = saved - eps;
                double dn = loss_at();
                w[k] = saved;
                CHECK(rel_err((up - dn) / (2 * eps), d_net.w[l][k]) < tol);
            }
            auto& b = agent.actor.net.layers[l].b;
            for (std::size_t k = 0; k < b.size(); ++k) {
                double saved = b[k];
                b[k] = saved + eps;
                double up = loss_at();
                b[k] = saved - eps;
                double dn = loss_at();
                b[k] = saved;
                CHECK(rel_err((up - dn) / (2 * eps), d_net.b[l][k]) < tol);
            }
        }
        if (kind == ExtractorKind::deeponet_random) {
            auto& bw = agent.actor.ext.model.branch.layers[0].w;
            for (std::size_t k = 0; k < bw.size(); k += 5) {
                double saved = bw[k];
                bw[k] = saved + eps;
                double up = loss_at();
                bw[k] = saved - eps;
                double dn = loss_at();
                bw[k] = saved;
                CHECK(rel_err((up - dn) / (2 * eps), d_ext.branch.w[0][k]) < tol);
            }
        }
    }
}

TEST_CASE("polyak_update blends targets toward the critics") {
    const std::size_t n = 5;
    std::vector<double> coeff(n, 1.0);
    auto cfg = tiny_config(ExtractorKind::flatten);
    cfg.tau = 0.005;
    auto agent = make_agent(cfg, n, 10.0, coeff);
    // Diverge the critics from the targets.
    for (auto& w : agent.critic1.net.layers[0].w) w += 1.0;
    for (auto& w : agent.critic2.net.layers[0].w) w -= 0.5;

    auto t1_before = agent.target1.net.layers[0].w;
    polyak_update(agent);
    for (std::size_t k = 0; k < t1_before.size(); ++k) {
        double expect = t1_before[k] + 0.005 * (agent.critic1.net.layers[0].w[k] - t1_before[k]);
        CHECK(agent.target1.net.layers[0].w[k] == expect);
    }

    // Repeated updates with frozen critics converge geometrically.
    auto gap0 = agent.critic1.net.layers[0].w[0] - agent.target1.net.layers[0].w[0];
    for (int k = 0; k < 10; ++k) polyak_update(agent);
    double gap10 = agent.critic1.net.layers[0].w[0] - agent.target1.net.layers[0].w[0];
    CHECK(gap10 == doctest::Approx(gap0 * std::pow(0.995, 10)).epsilon(1e-10));

    // tau = 1 copies outright.
    agent.config.tau = 1.0;
    polyak_update(agent);
    for (std::size_t k = 0; k < t1_before.size(); ++k) {
        CHECK(agent.target1.net.layers[0].w[k] ==
              doctest::Approx(agent.critic1.net.layers[0].w[k]).epsilon(1e-14));
    }
}

TEST_CASE("updates move the trained component and only that component") {
    const std::size_t n = 5;
    std::vector<double> coeff(n, 1.0);
    auto agent = make_agent(tiny_config(ExtractorKind::flatten), n, 10.0, coeff);

    Rng data_rng(12);
    std::vector<Transition> storage;
    Batch batch;
    for (int i = 0; i < 4; ++i) storage.push_back(random_transition(data_rng, n));
    for (const auto& t : storage) {
        batch.push_back({t.state.data(), t.next_state.data(), t.action, t.reward, t.done,
                         t.truncated});
    }

    auto actor_before = agent.actor.net.layers[0].w;
    auto critic_before = agent.critic1.net.layers[0].w;
    auto target_before = agent.target1.net.layers[0].w;

    std::vector<double> y = {0.1, -0.2, 0.3, -0.4};
    auto [l1, l2] = critic_update(agent, batch, y);
    CHECK(std::isfinite(l1));
    CHECK(std::isfinite(l2));
    CHECK(l1 >= 0.0);
    CHECK(agent.critic1.net.layers[0].w != critic_before);
    CHECK(agent.target1.net.layers[0].w == target_before);  // polyak is separate
    CHECK(agent.actor.net.layers[0].w == actor_before);
    CHECK(agent.critic1_net_opt.steps == 1);

    critic_before = agent.critic1.net.layers[0].w;
    Rng rng(66);
    double al = actor_update(agent, batch, rng);
    CHECK(std::isfinite(al));
    CHECK(agent.actor.net.layers[0].w != actor_before);
    CHECK(agent.critic1.net.layers[0].w == critic_before);
    CHECK(agent.actor_net_opt.steps == 1);
}

TEST_CASE("sac_train with zero steps returns the freshly initialized agent") {
    Env env(tiny_env_config());
    auto cfg = tiny_config(ExtractorKind::flatten);
    cfg.total_steps = 0;
    auto result = sac_train(env, cfg);
    CHECK(result.metrics.empty());
    CHECK(result.episodes == 0);

    auto expect_cfg = cfg;
    expect_cfg.benchmark = Benchmark::hyperbolic;
    auto expect =
        make_agent(expect_cfg, env.grid().n_points, env.config().action_bound, env.coeff().samples);
    CHECK(result.agent.actor.net.layers[0].w == expect.actor.net.layers[0].w);
    CHECK(result.agent.critic2.net.layers[1].w == expect.critic2.net.layers[1].w);
}

TEST_CASE("sac_train runs all variants deterministically") {
    DeepONetConfig arch;
    arch.latent = 4;
    arch.branch_hidden = {8};
    arch.trunk_hidden = {6};
    Rng mrng(41);
    auto model = make_deeponet(Benchmark::hyperbolic, 11, arch, mrng);
    std::string path = "/tmp/pdectrl_sac_test_train_pre.nncp";
    deeponet_save(model, path);

    for (auto kind : {ExtractorKind::flatten, ExtractorKind::deeponet_random,
                      ExtractorKind::deeponet_pretrained}) {
        auto cfg = tiny_config(kind);
        cfg.operator_config = arch;
        cfg.total_steps = 60;
        cfg.warmup_steps = 20;
        cfg.batch_size = 8;
        if (kind == ExtractorKind::deeponet_pretrained) cfg.pretrained_path = path;

        Env env(tiny_env_config());
        auto result = sac_train(env, cfg);
        REQUIRE(result.metrics.size() == 60);
        CHECK(result.episodes >= 1);

        std::size_t return_rows = 0;
        for (std::size_t i = 0; i < result.metrics.size(); ++i) {
            const auto& row = result.metrics[i];
            CHECK(row.step == i + 1);
            CHECK(row.buffer_size == i + 1);
            if (!std::isnan(row.episodic_return)) ++return_rows;
            if (row.step <= 20) {
                CHECK(std::isnan(row.critic1_loss));
                CHECK(std::isnan(row.actor_loss));
            } else {
                CHECK(std::isfinite(row.critic1_loss));
                CHECK(std::isfinite(row.critic2_loss));
                CHECK(std::isfinite(row.actor_loss));
            }
        }
        CHECK(return_rows == result.episodes);

        Env env2(tiny_env_config());
        auto result2 = sac_train(env2, cfg);
        CHECK(result2.agent.actor.net.layers[0].w == result.agent.actor.net.layers[0].w);
        CHECK(result2.metrics.size() == result.metrics.size());
        for (std::size_t i = 0; i < result.metrics.size(); ++i) {
            const auto& a = result.metrics[i];
            const auto& b = result2.metrics[i];
            bool same_return = (std::isnan(a.episodic_return) && std::isnan(b.episodic_return)) ||
                               a.episodic_return == b.episodic_return;
            CHECK(same_return);
            bool same_loss = (std::isnan(a.critic1_loss) && std::isnan(b.critic1_loss)) ||
                             a.critic1_loss == b.critic1_loss;
            CHECK(same_loss);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("agent checkpoints round-trip the policy") {
    DeepONetConfig arch;
    arch.latent = 4;
    arch.branch_hidden = {8};
    arch.trunk_hidden = {6};
    for (auto kind : {ExtractorKind::flatten, ExtractorKind::deeponet_random}) {
        auto cfg = tiny_config(kind);
        cfg.operator_config = arch;
        cfg.total_steps = 30;
        cfg.warmup_steps = 10;
        cfg.batch_size = 8;
        Env env(tiny_env_config());
        auto result = sac_train(env, cfg);

        std::string path = "/tmp/pdectrl_sac_test_agent.nncp";
        agent_save(result.agent, path);
        auto loaded = agent_load(path);
        CHECK(loaded.config.extractor == kind);
        CHECK(loaded.config.benchmark == Benchmark::hyperbolic);
        CHECK(loaded.n_points == 11);
        CHECK(loaded.action_bound == result.agent.action_bound);
        CHECK(loaded.actor.net.layers[0].w == result.agent.actor.net.layers[0].w);
        CHECK(loaded.target2.net.layers[0].w == result.agent.target2.net.layers[0].w);
        if (kind == ExtractorKind::deeponet_random) {
            CHECK(loaded.actor.ext.model.branch.layers[0].w ==
                  result.agent.actor.ext.model.branch.layers[0].w);
        }

        Rng srng(71);
        auto state = random_state(srng, 11, 8.0);
        double before = deterministic_action(result.agent, env.coeff().samples, state.data());
        double after = deterministic_action(loaded, env.coeff().samples, state.data());
        CHECK(before == after);
        std::remove(path.c_str());
    }
}

TEST_CASE("make_agent validates its configuration") {
    std::vector<double> coeff(5, 1.0);
    auto cfg = tiny_config(ExtractorKind::flatten);
    cfg.discount = 1.0;
    CHECK_THROWS_AS(make_agent(cfg, 5, 10.0, coeff), ConfigError);
    cfg = tiny_config(ExtractorKind::flatten);
    cfg.tau = 0.0;
    CHECK_THROWS_AS(make_agent(cfg, 5, 10.0, coeff), ConfigError);
    cfg = tiny_config(ExtractorKind::flatten);
    cfg.capacity = 2;  // below batch_size
    CHECK_THROWS_AS(make_agent(cfg, 5, 10.0, coeff), ConfigError);
    cfg = tiny_config(ExtractorKind::flatten);
    CHECK_THROWS_AS(make_agent(cfg, 5, -1.0, coeff), ConfigError);
    CHECK_THROWS_AS(make_agent(cfg, 4, 10.0, coeff), ConfigError);  // coeff size mismatch
}
