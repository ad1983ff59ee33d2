#pragma once

#include <cstdint>
#include <initializer_list>

namespace survblend {

// Counter-based 64-bit generator (splitmix64 finalizer over base + n*gamma).
// A (seed, stream) pair fully determines the sequence, so independent streams
// can be derived for every (scenario, replication, year, role) without any
// sequential coupling between them.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();

    // Uniform on the open interval (0,1); never returns 0 or 1, so the
    // draw is always a valid quantile-function argument.
    double uniform();

    // Inverse-CDF sampling, see specfun::normal_quantile.
    double normal(double mu, double sd);
    double lognormal(double log_mean, double log_sd);

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Order-sensitive hash of a list of tags, for deriving stream ids.
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts);

} // namespace survblend
