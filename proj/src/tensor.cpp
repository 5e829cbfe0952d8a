#include "fedleak/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "fedleak/errors.hpp"

namespace fedleak {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto extent : shape) n *= extent;
    return n;
}

namespace {

void validate_shape(const Shape& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
    for (auto extent : shape) {
        if (extent == 0) throw DimensionError("tensor extent must be >= 1, got " + shape_str(shape));
    }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (shape_numel(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + shape_str(shape_) + " needs " + std::to_string(shape_numel(shape_)) +
                             " values, got " + std::to_string(data_.size()));
    }
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* context) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(context) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

}  // namespace fedleak
