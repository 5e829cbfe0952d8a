#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fedleak/tensor.hpp"

namespace fedleak {

/// Binary P5 greymap of a [1,H,W] image in [-1,1]; byte = round((v+1)*127.5), clamped.
std::vector<std::uint8_t> encode_pgm(const Tensor& image);
void export_pgm(const Tensor& image, const std::filesystem::path& path);

}  // namespace fedleak
