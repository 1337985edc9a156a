#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace noma {

/*!
 * Philox4x32-10 counter-based generator.
 *
 * The key is the user seed and the counter's upper half is the stream id,
 * so every Monte Carlo trial owns an independent, schedule-free stream.
 */
class Philox4x32
{
  public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint64_t stream);

    //! Raw bijection, exposed for known-answer tests.
    static Block bijection(Block counter, Key key);

    result_type operator()();

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

  private:
    Key key_;
    std::uint64_t stream_;
    std::uint64_t block_index_{0};
    Block buffer_{};
    int used_{4};
};

//! Sampling helpers over a Philox stream.
class RandomStream
{
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(seed, stream)
    {
    }

    //! Uniform on [0, 1) with 53 random bits.
    double uniform();
    //! Uniform on (0, 1); safe under log.
    double uniform_open();
    //! Standard normal via Box-Muller.
    double normal();
    //! Circularly symmetric CN(0, 1).
    std::complex<double> complex_normal();

    Philox4x32& engine() { return engine_; }

  private:
    Philox4x32 engine_;
    double cached_normal_{0};
    bool has_cached_{false};
};

}  // namespace noma
