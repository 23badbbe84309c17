#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdectrl/numerics.hpp"
#include "pdectrl/pde_env.hpp"

namespace pdectrl {

// Supervised pairs ((coefficient samples, state samples) -> boundary control)
// harvested from closed-loop backstepping rollouts. Stored struct-of-arrays;
// sample i owns coeff[i*n .. i*n+n) and state[i*n .. i*n+n).
struct Dataset {
    Benchmark kind = Benchmark::hyperbolic;
    std::uint32_t n_points = 0;
    std::uint64_t master_seed = 0;
    double gamma_lo = 0.0;
    double gamma_hi = 0.0;
    double max_abs_control = 0.0;  // max |U| observed during generation
    std::vector<double> coeff;
    std::vector<double> state;
    std::vector<double> target;

    std::size_t count() const { return target.size(); }
    const double* coeff_at(std::size_t i) const { return coeff.data() + i * n_points; }
    const double* state_at(std::size_t i) const { return state.data() + i * n_points; }
};

struct GenOptions {
    Benchmark kind = Benchmark::hyperbolic;
    std::size_t n_points = 101;
    double dt = 1e-3;
    double horizon = 5.0;
    std::size_t record_every = 50;  // solver steps between recorded samples
    std::size_t n_coeffs = 100;
    std::size_t n_inits = 60;
    double gamma_lo = 5.0;
    double gamma_hi = 6.0;
    double init_lo = 1.0;
    double init_hi = 10.0;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0 = hardware concurrency
};

struct GenReport {
    std::size_t rollouts = 0;
    std::vector<double> skipped_gammas;  // kernel solves that failed to converge
};

// Pre-draws all gamma values, then all initial amplitudes, from a master RNG
// seeded with options.seed (in that documented order), so each rollout is a
// pure function of its parameters and the result is independent of the
// thread count. Controls are recomputed and applied every solver step; a
// sample is recorded before stepping whenever step % record_every == 0.
Dataset generate_dataset(const GenOptions& options, GenReport* report = nullptr);

// Deterministic shuffled split: permutes indices with rng and assigns the
// first round(train_fraction * count) samples to the first dataset.
std::pair<Dataset, Dataset> shuffle_split(const Dataset& data, double train_fraction, Rng& rng);

// PDDS binary format, checksummed. Throws FormatError on malformed input.
void dataset_write(const Dataset& data, const std::string& path);
Dataset dataset_read(const std::string& path);
// Header fields only (kind, grid size, count, seed, gamma range, max |U|);
// the sample payload is left empty and the checksum is not verified.
Dataset dataset_read_header(const std::string& path);

}  // namespace pdectrl
