#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ericson {

/// Identifies one realization of an ensemble. Two plans with equal fields
/// produce bit-identical sample streams.
struct RngPlan {
    std::uint64_t master_seed = 0;
    std::uint64_t realization_index = 0;
};

/// Independent purposes within one realization draw from distinct streams so
/// that, e.g., changing the coupling matrix never perturbs the Hamiltonian.
enum class Stream : std::uint32_t {
    hamiltonian = 1,
    hamiltonian_second = 2,
    coupling = 3,
    graph = 4,
    leads = 5,
    noise = 6,
};

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 128-bit counter is laid out as (position lo, position hi,
/// realization lo, realization hi) and the 64-bit key is derived from the
/// master seed and the stream tag. Any (seed, realization, stream, position)
/// tuple is therefore addressable without generating its predecessors.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(const RngPlan& plan, Stream stream);
    CounterRng(std::uint64_t key, std::uint64_t realization);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal via Box-Muller; pairs are cached.
    double normal();
    /// Uniform integer in [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound);

    /// Raw Philox4x32-10 block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::uint64_t realization_ = 0;
    std::uint64_t position_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Name of the generator, recorded in run manifests.
inline constexpr const char* kRngAlgorithm = "philox4x32-10/box-muller";

} // namespace ericson
