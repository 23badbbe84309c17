#include "pdectrl/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "binio.hpp"
#include "pdectrl/backstepping.hpp"
#include "pdectrl/errors.hpp"

namespace pdectrl {

namespace {

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PDECTRL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) {
            throw ConfigError(std::string("invalid PDECTRL_THREADS value: ") + env);
        }
        return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

double uniform_in(Rng& rng, double lo, double hi) {
    return lo + rng.next_double() * (hi - lo);
}

}  // namespace

Dataset generate_dataset(const GenOptions& options, GenReport* report) {
    if (options.n_points < 3) throw ConfigError("dataset n_points must be at least 3");
    if (options.dt <= 0.0 || options.horizon <= 0.0) {
        throw ConfigError("dataset dt and horizon must be positive");
    }
    if (options.record_every < 1) throw ConfigError("dataset record_every must be at least 1");
    if (options.n_coeffs < 1 || options.n_inits < 1) {
        throw ConfigError("dataset n_coeffs and n_inits must be at least 1");
    }
    const Grid grid = make_grid(options.n_points);
    if (options.kind == Benchmark::hyperbolic && options.dt > grid.dx + 1e-15) {
        throw ConfigError("dataset dt violates the CFL bound dt <= dx");
    }

    const auto steps = static_cast<std::size_t>(std::llround(options.horizon / options.dt));
    if (steps < 1) throw ConfigError("dataset horizon shorter than one solver step");
    const std::size_t spr = (steps + options.record_every - 1) / options.record_every;
    const std::size_t n = options.n_points;

    // All randomness is drawn up front from the master stream, gammas first,
    // then the shared initial amplitudes, so rollouts are pure functions of
    // their parameters and the thread count cannot affect the result.
    Rng master(options.seed);
    std::vector<double> gammas(options.n_coeffs);
    for (double& g : gammas) g = uniform_in(master, options.gamma_lo, options.gamma_hi);
    std::vector<double> inits(options.n_inits);
    for (double& c : inits) c = uniform_in(master, options.init_lo, options.init_hi);

    Dataset out;
    out.kind = options.kind;
    out.n_points = static_cast<std::uint32_t>(n);
    out.master_seed = options.seed;
    out.gamma_lo = options.gamma_lo;
    out.gamma_hi = options.gamma_hi;
    const std::size_t block = options.n_inits * spr;
    const std::size_t total = options.n_coeffs * block;
    out.coeff.resize(total * n);
    out.state.resize(total * n);
    out.target.resize(total);

    std::vector<char> coeff_ok(options.n_coeffs, 0);
    std::vector<double> thread_max;
    std::vector<double> skipped;
    std::mutex skip_mutex;
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const std::size_t workers = std::min(resolve_threads(options.threads), options.n_coeffs);
    thread_max.assign(workers, 0.0);

    auto run_coeff = [&](std::size_t ci, double& local_max) {
        const CoefficientFn coeff = sample_coefficient(options.kind, gammas[ci], grid);
        HyperbolicKernel hk;
        ParabolicKernel pk;
        try {
            if (options.kind == Benchmark::hyperbolic) {
                hk = solve_hyperbolic_kernel(coeff, grid);
            } else {
                pk = solve_parabolic_kernel(coeff, grid);
            }
        } catch (const NumericalError&) {
            std::lock_guard<std::mutex> lock(skip_mutex);
            skipped.push_back(gammas[ci]);
            return;
        }
        coeff_ok[ci] = 1;
        const std::vector<double> recirc = options.kind == Benchmark::hyperbolic
                                               ? hyperbolic_recirculation(coeff)
                                               : std::vector<double>();
        std::vector<double> u(n);
        for (std::size_t ii = 0; ii < options.n_inits; ++ii) {
            std::fill(u.begin(), u.end(), inits[ii]);
            std::size_t rec = 0;
            for (std::size_t step = 0; step < steps; ++step) {
                const double control = options.kind == Benchmark::hyperbolic
                                           ? backstepping_control(hk, u, grid.dx)
                                           : backstepping_control(pk, u, grid.dx);
                if (!std::isfinite(control)) {
                    throw NumericalError("backstepping rollout produced a non-finite control");
                }
                local_max = std::max(local_max, std::abs(control));
                if (step % options.record_every == 0) {
                    const std::size_t idx = ci * block + ii * spr + rec;
                    std::copy(coeff.samples.begin(), coeff.samples.end(),
                              out.coeff.begin() + static_cast<std::ptrdiff_t>(idx * n));
                    std::copy(u.begin(), u.end(),
                              out.state.begin() + static_cast<std::ptrdiff_t>(idx * n));
                    out.target[idx] = control;
                    ++rec;
                }
                if (options.kind == Benchmark::hyperbolic) {
                    hyperbolic_step(u, recirc, control, options.dt, grid.dx);
                } else {
                    parabolic_step(u, coeff.samples, control, options.dt, grid.dx);
                }
            }
        }
    };

    auto worker = [&](std::size_t wid) {
        try {
            while (true) {
                const std::size_t ci = next.fetch_add(1);
                if (ci >= options.n_coeffs) break;
                run_coeff(ci, thread_max[wid]);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (workers <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (double m : thread_max) out.max_abs_control = std::max(out.max_abs_control, m);

    const auto n_skipped =
        static_cast<std::size_t>(std::count(coeff_ok.begin(), coeff_ok.end(), 0));
    if (n_skipped == options.n_coeffs) {
        throw NumericalError("no backstepping kernel converged for any sampled coefficient");
    }
    if (n_skipped > 0) {
        // Compact out the blocks of coefficients whose kernel solve failed.
        std::size_t write = 0;
        for (std::size_t ci = 0; ci < options.n_coeffs; ++ci) {
            if (!coeff_ok[ci]) continue;
            if (write != ci) {
                std::copy_n(out.coeff.begin() + static_cast<std::ptrdiff_t>(ci * block * n),
                            block * n,
                            out.coeff.begin() + static_cast<std::ptrdiff_t>(write * block * n));
                std::copy_n(out.state.begin() + static_cast<std::ptrdiff_t>(ci * block * n),
                            block * n,
                            out.state.begin() + static_cast<std::ptrdiff_t>(write * block * n));
                std::copy_n(out.target.begin() + static_cast<std::ptrdiff_t>(ci * block),
                            block,
                            out.target.begin() + static_cast<std::ptrdiff_t>(write * block));
            }
            ++write;
        }
        out.coeff.resize(write * block * n);
        out.state.resize(write * block * n);
        out.target.resize(write * block);
    }

    if (report) {
        report->rollouts = (options.n_coeffs - n_skipped) * options.n_inits;
        std::sort(skipped.begin(), skipped.end());
        report->skipped_gammas = std::move(skipped);
    }
    return out;
}

std::pair<Dataset, Dataset> shuffle_split(const Dataset& data, double train_fraction, Rng& rng) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie strictly between 0 and 1");
    }
    const std::size_t count = data.count();
    if (count < 2) throw ConfigError("cannot split a dataset with fewer than two samples");
    std::vector<std::size_t> perm(count);
    for (std::size_t i = 0; i < count; ++i) perm[i] = i;
    for (std::size_t i = count - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.next_double() * static_cast<double>(i + 1));
        std::swap(perm[i], perm[std::min(j, i)]);
    }
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
    n_train = std::max<std::size_t>(1, std::min(n_train, count - 1));

    const std::size_t n = data.n_points;
    auto make_part = [&](std::size_t lo, std::size_t hi) {
        Dataset part;
        part.kind = data.kind;
        part.n_points = data.n_points;
        part.master_seed = data.master_seed;
        part.gamma_lo = data.gamma_lo;
        part.gamma_hi = data.gamma_hi;
        part.max_abs_control = data.max_abs_control;
        part.coeff.resize((hi - lo) * n);
        part.state.resize((hi - lo) * n);
        part.target.resize(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::size_t src = perm[i];
            const std::size_t dst = i - lo;
            std::copy_n(data.coeff_at(src), n,
                        part.coeff.begin() + static_cast<std::ptrdiff_t>(dst * n));
            std::copy_n(data.state_at(src), n,
                        part.state.begin() + static_cast<std::ptrdiff_t>(dst * n));
            part.target[dst] = data.target[src];
        }
        return part;
    };
    return {make_part(0, n_train), make_part(n_train, count)};
}

namespace {
constexpr char kDatasetMagic[4] = {'P', 'D', 'D', 'S'};
constexpr std::uint16_t kDatasetVersion = 1;
}  // namespace

void dataset_write(const Dataset& data, const std::string& path) {
    ByteSink sink(path);
    if (!sink.out) throw ConfigError("cannot open dataset for writing: " + path);
    sink.raw(kDatasetMagic, 4);
    sink.value<std::uint16_t>(kDatasetVersion);
    sink.value<std::uint8_t>(data.kind == Benchmark::hyperbolic ? 0 : 1);
    sink.value<std::uint32_t>(data.n_points);
    sink.value<std::uint64_t>(data.count());
    sink.value<std::uint64_t>(data.master_seed);
    sink.value<double>(data.gamma_lo);
    sink.value<double>(data.gamma_hi);
    sink.value<double>(data.max_abs_control);
    const std::size_t n = data.n_points;
    for (std::size_t i = 0; i < data.count(); ++i) {
        sink.raw(data.coeff_at(i), n * sizeof(double));
        sink.raw(data.state_at(i), n * sizeof(double));
        sink.value<double>(data.target[i]);
    }
    const std::uint64_t checksum = sink.checksum;
    sink.value<std::uint64_t>(checksum);
    sink.out.flush();
    if (!sink.out) throw ConfigError("failed writing dataset: " + path);
}

namespace {
// Shared header decode; count comes back separately since the header-only
// reader leaves the payload vectors empty.
std::uint64_t read_dataset_header(ByteSource& src, const std::string& path, Dataset& data) {
    char magic[4];
    src.raw(magic, 4);
    if (std::memcmp(magic, kDatasetMagic, 4) != 0) {
        throw FormatError("not a dataset file (bad magic): " + path);
    }
    const auto version = src.value<std::uint16_t>();
    if (version != kDatasetVersion) {
        throw FormatError("unsupported dataset version " + std::to_string(version) +
                          " (expected " + std::to_string(kDatasetVersion) + ") in " + path);
    }
    const auto kind_byte = src.value<std::uint8_t>();
    if (kind_byte > 1) {
        throw FormatError("unknown benchmark tag " + std::to_string(kind_byte) + " in " + path);
    }
    data.kind = kind_byte == 0 ? Benchmark::hyperbolic : Benchmark::parabolic;
    data.n_points = src.value<std::uint32_t>();
    if (data.n_points < 3 || data.n_points > 1000000) {
        throw FormatError("implausible dataset grid size in " + path);
    }
    const auto count = src.value<std::uint64_t>();
    if (count > 1000000000ULL) {
        throw FormatError("implausible dataset sample count in " + path);
    }
    data.master_seed = src.value<std::uint64_t>();
    data.gamma_lo = src.value<double>();
    data.gamma_hi = src.value<double>();
    data.max_abs_control = src.value<double>();
    return count;
}
}  // namespace

Dataset dataset_read_header(const std::string& path) {
    ByteSource src(path);
    if (!src.in) throw ConfigError("cannot open dataset: " + path);
    Dataset data;
    read_dataset_header(src, path, data);
    return data;
}

Dataset dataset_read(const std::string& path) {
    ByteSource src(path);
    if (!src.in) throw ConfigError("cannot open dataset: " + path);
    Dataset data;
    const std::uint64_t count = read_dataset_header(src, path, data);
    const std::size_t n = data.n_points;
    data.coeff.resize(count * n);
    data.state.resize(count * n);
    data.target.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        src.raw(data.coeff.data() + i * n, n * sizeof(double));
        src.raw(data.state.data() + i * n, n * sizeof(double));
        data.target[i] = src.value<double>();
    }
    const std::uint64_t expected = src.checksum;
    const auto stored = src.value<std::uint64_t>();
    if (stored != expected) throw FormatError("dataset checksum mismatch in " + path);
    src.in.peek();
    if (!src.in.eof()) throw FormatError("trailing bytes after dataset checksum in " + path);
    return data;
}

}  // namespace pdectrl
