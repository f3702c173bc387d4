#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "calfoa/frame.hpp"

namespace calfoa {

/// Decode a binary P5 image with maxval 255. Comments are skipped.
Frame read_pgm(std::span<const std::uint8_t> bytes, std::size_t index = 0);

/// Canonical P5 encoding: "P5\n<w> <h>\n255\n" followed by the raster.
std::vector<std::uint8_t> write_pgm(const Frame& frame);

Frame read_pgm_file(const std::filesystem::path& path, std::size_t index = 0);
void write_pgm_file(const std::filesystem::path& path, const Frame& frame);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace calfoa
