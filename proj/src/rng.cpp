#include "survblend/rng.hpp"

#include <cmath>

#include "survblend/specfun.hpp"

namespace survblend {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
} // namespace

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x2545F4914F6CDD1DULL;
    for (std::uint64_t p : parts) {
        h = mix64(h ^ (p + kGamma + (h << 6) + (h >> 2)));
    }
    return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : base_(mix64(mix64(seed + kGamma) ^ mix64(stream * 0xDA942042E4DD58B5ULL + 1))) {}

std::uint64_t CounterRng::next_u64() {
    ++counter_;
    return mix64(base_ + counter_ * kGamma);
}

double CounterRng::uniform() {
    // 53-bit mantissa, offset by half a step: range is strictly inside (0,1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double CounterRng::normal(double mu, double sd) {
    return mu + sd * specfun::normal_quantile(uniform());
}

double CounterRng::lognormal(double log_mean, double log_sd) {
    return std::exp(normal(log_mean, log_sd));
}

} // namespace survblend
