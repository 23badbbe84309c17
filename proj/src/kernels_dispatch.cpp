#include "pdectrl/kernels.hpp"

#include <cstdlib>
#include <string>

#include "pdectrl/errors.hpp"

namespace pdectrl::kernels {
namespace {

const Backend* select_by_name(const std::string& name) {
    if (name == "scalar") return &scalar_backend();
    if (name == "avx2") {
#ifdef PDECTRL_HAVE_AVX2
        if (avx2_supported()) return &avx2_backend();
        throw ConfigError("PDECTRL_KERNELS=avx2 requested but CPU lacks AVX2/FMA");
#else
        throw ConfigError("PDECTRL_KERNELS=avx2 requested but this build has no AVX2 backend");
#endif
    }
    throw ConfigError("unknown kernel backend '" + name + "' (expected scalar or avx2)");
}

const Backend* detect() {
    if (const char* env = std::getenv("PDECTRL_KERNELS")) {
        return select_by_name(env);
    }
#ifdef PDECTRL_HAVE_AVX2
    if (avx2_supported()) return &avx2_backend();
#endif
    return &scalar_backend();
}

const Backend*& slot() {
    static const Backend* chosen = detect();
    return chosen;
}

}  // namespace

const Backend& active() { return *slot(); }

const char* backend_name() { return active().name; }

void force_backend(const char* name) { slot() = select_by_name(name); }

}  // namespace pdectrl::kernels
