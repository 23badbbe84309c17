#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pdectrl/dataset.hpp"
#include "pdectrl/deeponet.hpp"
#include "pdectrl/errors.hpp"
#include "pdectrl/nn.hpp"

using namespace pdectrl;

namespace {

DeepONetConfig tiny_config() {
    DeepONetConfig cfg;
    cfg.latent = 8;
    cfg.branch_hidden = {16, 16};
    cfg.trunk_hidden = {8, 8};
    return cfg;
}

// Small synthetic regression set: targets are a smooth functional of the
// inputs, well inside the model's capacity.
Dataset synthetic_dataset(std::size_t count, std::size_t n_points, std::uint64_t seed) {
    Dataset data;
    data.kind = Benchmark::hyperbolic;
    data.n_points = static_cast<std::uint32_t>(n_points);
    data.master_seed = seed;
    data.gamma_lo = 5.0;
    data.gamma_hi = 6.0;
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        double coeff_level = rng.uniform(-5.0, 5.0);
        double state_level = rng.uniform(-10.0, 10.0);
        double state_mean = 0.0;
        for (std::size_t j = 0; j < n_points; ++j) {
            double c = coeff_level + 0.3 * rng.uniform(-1.0, 1.0);
            double s = state_level + 0.5 * rng.uniform(-1.0, 1.0);
            data.coeff.push_back(c);
            data.state.push_back(s);
            state_mean += s;
        }
        state_mean /= static_cast<double>(n_points);
        data.target.push_back(0.3 * state_mean + 0.1 * coeff_level);
    }
    data.max_abs_control = 5.0;
    return data;
}

}  // namespace

TEST_CASE("make_deeponet shapes follow the architecture") {
    Rng rng(1);
    auto model = make_deeponet(Benchmark::hyperbolic, 11, tiny_config(), rng);
    CHECK(model.n_points == 11);
    CHECK(model.latent == 8);
    CHECK(model.branch.input_dim() == 22);
    CHECK(model.branch.output_dim() == 8);
    CHECK(model.trunk.input_dim() == 1);
    CHECK(model.trunk.output_dim() == 8);
    CHECK(model.output_bias == 0.0);
    CHECK(model.branch.layers.front().act == Act::relu);
    CHECK(model.trunk.layers.front().act == Act::tanh_act);
}

TEST_CASE("feature sum plus bias equals the scalar forward at the boundary query") {
    Rng rng(2);
    auto model = make_deeponet(Benchmark::parabolic, 9, tiny_config(), rng);
    model.output_bias = 0.37;
    Rng data_rng(3);
    std::vector<double> coeff(9), state(9);
    for (auto& c : coeff) c = data_rng.uniform(-50.0, 50.0);
    for (auto& s : state) s = data_rng.uniform(-10.0, 10.0);

    auto features = forward_features(model, coeff, state);
    REQUIRE(features.size() == 8);
    double sum = model.output_bias;
    for (double f : features) sum += f;
    CHECK(sum == doctest::Approx(forward_scalar(model, coeff, state, 1.0)).epsilon(1e-12));
}

TEST_CASE("init scaling is input normalization folded into the first layer") {
    const std::size_t n = 7;
    Rng rng1(42), rng2(42);
    auto scaled = make_deeponet(Benchmark::hyperbolic, n, tiny_config(), rng1);
    auto raw = make_deeponet(Benchmark::hyperbolic, n, tiny_config(), rng2);
    // Undo the folded normalization on the second copy.
    auto& first = raw.branch.layers.front();
    const double amp = coefficient_amplitude(Benchmark::hyperbolic);
    for (std::size_t r = 0; r < first.out; ++r) {
        for (std::size_t c = 0; c < first.in; ++c) {
            first.w[r * first.in + c] *= (c < n) ? amp : 10.0;
        }
    }
    Rng data_rng(7);
    std::vector<double> coeff(n), state(n), coeff_n(n), state_n(n);
    for (std::size_t i = 0; i < n; ++i) {
        coeff[i] = data_rng.uniform(-5.0, 5.0);
        state[i] = data_rng.uniform(-10.0, 10.0);
        coeff_n[i] = coeff[i] / amp;
        state_n[i] = state[i] / 10.0;
    }
    // scaled(raw inputs) == raw(normalized inputs)
    CHECK(forward_scalar(scaled, coeff, state, 1.0) ==
          doctest::Approx(forward_scalar(raw, coeff_n, state_n, 1.0)).epsilon(1e-12));
}

TEST_CASE("pretrain overfits a small synthetic set") {
    auto train = synthetic_dataset(64, 9, 11);
    auto test = synthetic_dataset(16, 9, 12);
    Rng rng(5);
    auto model = make_deeponet(Benchmark::hyperbolic, 9, tiny_config(), rng);
    double initial_mse = dataset_mse(model, train);

    PretrainOptions opts;
    opts.epochs = 300;
    opts.batch_size = 16;
    opts.lr = 1e-3;
    std::size_t calls = 0;
    opts.on_epoch = [&](std::size_t epoch, double train_mse, double test_mse) {
        CHECK(epoch == calls);
        CHECK(std::isfinite(train_mse));
        CHECK(std::isfinite(test_mse));
        ++calls;
    };
    auto report = pretrain(model, train, test, opts, rng);
    CHECK(calls == 300);
    REQUIRE(report.train_mse.size() == 300);
    REQUIRE(report.test_mse.size() == 300);
    CHECK(dataset_mse(model, train) < 0.05 * initial_mse);
    CHECK(report.final_rel_l2 == doctest::Approx(dataset_rel_l2(model, test)).epsilon(1e-12));
    CHECK(report.final_rel_l2 < 1.0);
}

TEST_CASE("pretrain with zero epochs leaves the model untouched") {
    auto train = synthetic_dataset(32, 9, 21);
    auto test = synthetic_dataset(8, 9, 22);
    Rng rng(6);
    auto model = make_deeponet(Benchmark::hyperbolic, 9, tiny_config(), rng);
    auto before_w = model.branch.layers[0].w;
    double before_bias = model.output_bias;

    PretrainOptions opts;
    opts.epochs = 0;
    auto report = pretrain(model, train, test, opts, rng);
    CHECK(model.branch.layers[0].w == before_w);
    CHECK(model.output_bias == before_bias);
    CHECK(report.train_mse.empty());
    CHECK(report.final_rel_l2 == doctest::Approx(dataset_rel_l2(model, test)).epsilon(1e-12));
}

TEST_CASE("pretrain is deterministic for a fixed seed") {
    auto train = synthetic_dataset(32, 9, 31);
    auto test = synthetic_dataset(8, 9, 32);
    PretrainOptions opts;
    opts.epochs = 5;
    opts.batch_size = 8;

    auto run = [&]() {
        Rng rng(77);
        auto model = make_deeponet(Benchmark::hyperbolic, 9, tiny_config(), rng);
        pretrain(model, train, test, opts, rng);
        return model;
    };
    auto a = run();
    auto b = run();
    CHECK(a.branch.layers[0].w == b.branch.layers[0].w);
    CHECK(a.trunk.layers.back().w == b.trunk.layers.back().w);
    CHECK(a.output_bias == b.output_bias);
}

TEST_CASE("deeponet checkpoints round-trip") {
    Rng rng(8);
    auto model = make_deeponet(Benchmark::parabolic, 9, tiny_config(), rng);
    model.output_bias = 1.5;
    std::string path = "/tmp/pdectrl_deeponet_test.nncp";
    deeponet_save(model, path);
    auto loaded = deeponet_load(path);
    CHECK(loaded.n_points == 9);
    CHECK(loaded.latent == 8);
    CHECK(loaded.output_bias == 1.5);
    CHECK(loaded.branch.layers[0].w == model.branch.layers[0].w);
    CHECK(loaded.trunk.layers[1].w == model.trunk.layers[1].w);

    Rng data_rng(9);
    std::vector<double> coeff(9), state(9);
    for (auto& c : coeff) c = data_rng.uniform(-50.0, 50.0);
    for (auto& s : state) s = data_rng.uniform(-10.0, 10.0);
    CHECK(forward_scalar(loaded, coeff, state, 0.5) ==
          forward_scalar(model, coeff, state, 0.5));
    std::remove(path.c_str());
}

TEST_CASE("deeponet_load rejects checkpoints that are not operator models") {
    Rng rng(10);
    NamedNets nets;
    nets.add("actor", make_net(4, {8}, 2, Act::relu, Act::identity, rng));
    std::string path = "/tmp/pdectrl_deeponet_badload.nncp";
    checkpoint_save(nets, path);
    CHECK_THROWS_AS(deeponet_load(path), FormatError);
    std::remove(path.c_str());
}
