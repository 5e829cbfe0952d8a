#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedleak/models.hpp"
#include "fedleak/rng.hpp"
#include "fedleak/tensor.hpp"

namespace fedleak {

enum class DatasetKind { mnist, fashion_mnist, cifar10 };

std::string to_string(DatasetKind kind);
DatasetKind dataset_from_string(const std::string& name);

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kImageSide = 28;

struct RawImages {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<std::uint8_t>> images;  // rows*cols bytes each
};

RawImages load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

// In-memory variants; `source` names the buffer in error messages.
RawImages parse_idx_images(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

struct CifarRecord {
    int label = 0;
    std::vector<std::uint8_t> rgb;  // 1024 R, 1024 G, 1024 B
};

std::vector<CifarRecord> load_cifar10(std::span<const std::filesystem::path> paths);
std::vector<CifarRecord> parse_cifar10(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

/// Byte 0..255 -> [-1,1].
float byte_to_unit(std::uint8_t value);
/// Inverse of byte_to_unit, rounding and clamping.
std::uint8_t unit_to_byte(float value);

/// 28x28 grayscale bytes -> [1,28,28] in [-1,1].
Tensor preprocess_gray(std::span<const std::uint8_t> pixels, std::size_t rows, std::size_t cols);
/// 32x32 planar RGB -> luma -> bilinear 28x28 -> [1,28,28] in [-1,1].
Tensor preprocess_rgb(std::span<const std::uint8_t> rgb);

/// 0.299R + 0.587G + 0.114B, exact for R=G=B.
double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);
/// Half-pixel-centred bilinear resize of a single-channel image.
std::vector<double> bilinear_resize(std::span<const double> src, std::size_t src_h, std::size_t src_w,
                                    std::size_t dst_h, std::size_t dst_w);

struct DatasetSplit {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> test;
};

/// Pairs IDX image/label files; throws ParseError when the counts disagree.
std::vector<LabeledImage> load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Reads a dataset from its conventional file names under `dir`:
/// MNIST-family `{train,t10k}-{images-idx3,labels-idx1}-ubyte`,
/// CIFAR-10 `data_batch_{1..5}.bin` and `test_batch.bin`.
DatasetSplit load_dataset(DatasetKind kind, const std::filesystem::path& dir);

struct Partition {
    int owner_class = 0;
    std::vector<LabeledImage> samples;
};

/// Seeded per-class subsample of exactly `samples_per_class` images for each of the 10 classes.
std::map<int, Partition> partition_by_class(std::span<const LabeledImage> dataset, std::size_t samples_per_class,
                                            Rng& rng);

}  // namespace fedleak
