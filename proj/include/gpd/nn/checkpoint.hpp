#pragma once

#include <filesystem>
#include <iosfwd>

#include "gpd/nn/network.hpp"

namespace gpd::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned binary container, all integers and floats little-endian:
///
///   "GPDN" | u32 version | u32 total layer count | string arch | u8 fully_convolutional
///   | u32 input count | (u32 c, u32 h, u32 w) per input
///   | u32 stack count (branches, then head)
///   | per stack: u32 layer count | per layer:
///       u8 kind (0 conv, 1 relu, 2 maxpool, 3 fully connected)
///       u32 rank | u32 dims[rank]           conv (out, in, kh, kw); fc (out, in); rank 0 otherwise
///       f32 weights[prod dims] | f32 biases[out]
///
/// Strings are u32 length + bytes.
void write_checkpoint(std::ostream& out, const Network<float>& net);
Network<float> read_checkpoint(std::istream& in);

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path);
Network<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace gpd::nn
