#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace selfreg {

/// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Folds a list of integers (base seed, condition id, replication, ...) into a
/// single 64-bit seed. Distinct tuples give unrelated seeds.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// Seedable generator with a portable normal sampler. std::normal_distribution
/// is implementation-defined, so Gaussian draws use Box-Muller on top of the
/// (fully specified) mt19937_64 stream to keep panels identical across
/// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal(double mean = 0.0, double sd = 1.0);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace selfreg
