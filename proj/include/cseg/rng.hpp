#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cseg {

/// Mixes (seed, tag, index) into an independent stream seed. Generation of
/// sample i never depends on how many other samples were drawn before it.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

/// Seeded generator with platform-independent draws. The engine is
/// std::mt19937_64 (its output sequence is fixed by the standard); the
/// distributions are computed here because the std:: ones are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n), n > 0, rejection-sampled (no modulo bias).
    std::uint64_t index(std::uint64_t n);
    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cseg
