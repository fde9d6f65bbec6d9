#include "sce/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "sce/error.hpp"

namespace sce::simd {

namespace {

Level detect() {
    if (const char* env = std::getenv("SCE_SIMD"); env != nullptr && std::string(env) == "scalar") {
        return Level::Scalar;
    }
    return cpu_supports(Level::Avx2) ? Level::Avx2 : Level::Scalar;
}

std::atomic<Level>& current() {
    static std::atomic<Level> level{detect()};
    return level;
}

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw Error(ErrorKind::InvalidArgument, "simd kernel: length mismatch");
}

}  // namespace

bool cpu_supports(Level level) {
    switch (level) {
        case Level::Scalar:
            return true;
        case Level::Avx2:
#if defined(SCE_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

Level active_level() { return current().load(std::memory_order_relaxed); }

void set_level(Level level) {
    if (!cpu_supports(level)) {
        throw Error(ErrorKind::InvalidArgument, "simd level not supported on this CPU");
    }
    current().store(level, std::memory_order_relaxed);
}

std::string_view to_string(Level level) {
    return level == Level::Avx2 ? "avx2" : "scalar";
}

#if defined(SCE_HAVE_AVX2)
#define SCE_DISPATCH(fn, ...) \
    (active_level() == Level::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define SCE_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double dot(std::span<const double> a, std::span<const double> b) {
    check_sizes(a.size(), b.size());
    return SCE_DISPATCH(dot, a.data(), b.data(), a.size());
}

double sq_diff_sum(std::span<const double> a, std::span<const double> b) {
    check_sizes(a.size(), b.size());
    return SCE_DISPATCH(sq_diff_sum, a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    check_sizes(x.size(), y.size());
    SCE_DISPATCH(axpy, alpha, x.data(), y.data(), x.size());
}

double sum(std::span<const double> a) { return SCE_DISPATCH(sum, a.data(), a.size()); }

#undef SCE_DISPATCH

}  // namespace sce::simd
