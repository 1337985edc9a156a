#pragma once

#include <cstdint>
#include <string>

#include "noma/channel.hpp"
#include "noma/system.hpp"

namespace noma {

//! Run-level settings that are not part of the physical scenario.
struct SimulationOptions
{
    QuantizerMode quantizer{QuantizerMode::rvq};
    //! 0 selects NOMA_THREADS or the hardware concurrency
    int threads{0};
    bool cluster_reduction{true};
};

struct RunConfig
{
    SystemConfig system;
    SimulationOptions simulation;
};

/*!
 * Parse a YAML document with sections `system`, `users` and `simulation`.
 * Unknown keys, missing required keys and invalid values raise ConfigError
 * carrying the 1-based source line.
 */
RunConfig parse_config(const std::string& text);

//! parse_config on a file; I/O errors name the path.
RunConfig load_config(const std::string& path);

//! Stable textual form of a config (fixed key order, %.17g numbers).
std::string canonical_text(const SystemConfig& config);

//! 64-bit FNV-1a of canonical_text.
std::uint64_t config_digest(const SystemConfig& config);

std::uint64_t fnv1a64(const std::string& bytes);

//! Digest as 16 lowercase hex digits.
std::string digest_hex(std::uint64_t digest);

}  // namespace noma
