#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gplab/grid.hpp"

namespace gplab {

// GPF1 layout (all little-endian):
//   "GPF1" | u8 bc | u32 nx | u32 ny | u32 nz | f64 L | nx·ny·nz f64 values
// Values are x-fastest. Two-dimensional grids are stored with nz = 1.

std::vector<std::uint8_t> encode_field(const ScalarField& f);
ScalarField decode_field(std::span<const std::uint8_t> bytes);

void save_field(const ScalarField& f, const std::filesystem::path& path);
ScalarField load_field(const std::filesystem::path& path);

}  // namespace gplab
