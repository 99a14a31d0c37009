#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace skillr1
{
/*!
 * Counter-based Philox4x32-10 generator.
 *
 * A stream is identified by a 64-bit key; the 128-bit counter walks blocks
 * of four 32-bit outputs. Two generators built from the same key produce
 * the same sequence regardless of thread or call order, so every rollout,
 * sampled skill, and initialized instance gets a stream derived from its
 * coordinates instead of sharing a mutable engine.
 *
 * Satisfies UniformRandomBitGenerator with 64-bit results.
 */
class Philox
{
  public:
    using result_type = std::uint64_t;

    explicit Philox(std::uint64_t key, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max()
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()();

    //! Uniform double in [0, 1) with 53 random bits
    double uniform();

    //! Standard normal via Box-Muller (no cached second value)
    double normal();

    //! Uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n);

    //! Single Philox4x32-10 block (exposed for known-answer tests)
    static std::array<std::uint32_t, 4>
    block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

  private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int buf_pos_ = 4;

    void refill();
};

//! SplitMix64 finalizer
std::uint64_t mix64(std::uint64_t x);

//! Combine coordinates into one seed; order-sensitive
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

//! Stream purposes, mixed into every derived seed
enum class StreamPurpose : std::uint64_t
{
    instances = 1,
    rollout = 2,
    skill_sample = 3,
    init_params = 4,
    eval_rollout = 5,
    eval_skill_sample = 6,
};

}  // namespace skillr1
