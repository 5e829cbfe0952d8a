#include "fedleak/pgm.hpp"

#include <fstream>
#include <string>

#include "fedleak/data.hpp"
#include "fedleak/errors.hpp"

namespace fedleak {

std::vector<std::uint8_t> encode_pgm(const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 1) {
        throw DimensionError("export_pgm expects a [1,H,W] image, got " + shape_str(image.shape()));
    }
    const std::string header =
        "P5\n" + std::to_string(image.dim(2)) + " " + std::to_string(image.dim(1)) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + image.size());
    for (float v : image.values()) out.push_back(unit_to_byte(v));
    return out;
}

void export_pgm(const Tensor& image, const std::filesystem::path& path) {
    const auto bytes = encode_pgm(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace fedleak
