#pragma once

#include <string>
#include <vector>

#include "noma/channel.hpp"

namespace noma {

/*!
 * Binary realization trace.
 *
 * Layout (all little-endian):
 *   char[8]  "NOMATRC1"
 *   u32      version (1)
 *   u32      M, N, K
 *   u64      realization count
 *   per realization, user order i = n + N k:
 *     complex64[NK][M]  h, h_hat, e_tilde
 *     float32[NK]       cos2, sin2
 *     complex64[N][M]   w
 * complex64 is (float32 re, float32 im).
 */
void write_trace(const std::string& path,
                 const std::vector<ChannelRealization>& realizations);

std::vector<ChannelRealization> read_trace(const std::string& path);

}  // namespace noma
