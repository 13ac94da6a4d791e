#include "sadis/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "sadis/error.hpp"

namespace sadis {

namespace {

void require_finite(const Matrix& m, const char* what)
{
    if (!m.allFinite()) {
        throw ValidationError(std::string(what) + " contains non-finite values");
    }
}

std::string shape_string(std::span<const std::size_t> shape)
{
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

}  // namespace

std::size_t element_count(std::span<const std::size_t> shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

bool all_finite(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

NdArray::NdArray(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_))
{
    if (element_count(shape) != data.size()) {
        throw DimensionError("array shape " + shape_string(shape) + " does not match " +
                             std::to_string(data.size()) + " elements");
    }
}

Embedding::Embedding(Matrix tokens) : tokens_(std::move(tokens))
{
    if (tokens_.rows() < 1 || tokens_.cols() < 1) {
        throw DimensionError("embedding needs at least one token and one feature column");
    }
    require_finite(tokens_, "embedding");
}

Embedding Embedding::zeros(Eigen::Index tokens, Eigen::Index width)
{
    return Embedding(Matrix::Zero(tokens, width));
}

LatentTensor::LatentTensor(Eigen::Index channels, Eigen::Index height, Eigen::Index width)
    : LatentTensor(Matrix::Zero(channels, height * width), height, width)
{
}

LatentTensor::LatentTensor(Matrix flat, Eigen::Index height, Eigen::Index width)
    : flat_(std::move(flat)), height_(height), width_(width)
{
    if (flat_.rows() < 1) {
        throw DimensionError("latent needs at least one channel");
    }
    if (height_ < 1 || width_ < 1 || height_ * width_ < 2) {
        throw DimensionError("latent needs H*W >= 2, got " + std::to_string(height_) + "x" +
                             std::to_string(width_));
    }
    if (flat_.cols() != height_ * width_) {
        throw DimensionError("latent storage does not match its spatial size");
    }
    require_finite(flat_, "latent");
}

Matrix LatentTensor::plane(Eigen::Index c) const
{
    Matrix out(height_, width_);
    for (Eigen::Index h = 0; h < height_; ++h) {
        for (Eigen::Index w = 0; w < width_; ++w) {
            out(h, w) = at(c, h, w);
        }
    }
    return out;
}

bool LatentTensor::same_shape(const LatentTensor& other) const
{
    return channels() == other.channels() && height_ == other.height_ && width_ == other.width_;
}

RgbImage::RgbImage(std::size_t height, std::size_t width)
    : RgbImage(height, width, std::vector<double>(height * width * 3, 0.0))
{
}

RgbImage::RgbImage(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels))
{
    if (height_ < 1 || width_ < 1) {
        throw DimensionError("image must be at least 1x1");
    }
    if (pixels_.size() != height_ * width_ * 3) {
        throw DimensionError("rgb pixel buffer does not match " + std::to_string(height_) + "x" +
                             std::to_string(width_) + "x3");
    }
    if (!all_finite(pixels_)) {
        throw ValidationError("image contains non-finite values");
    }
    for (double& v : pixels_) v = std::clamp(v, 0.0, 1.0);
}

GrayImage::GrayImage(std::size_t height, std::size_t width, double fill)
    : GrayImage(height, width, std::vector<double>(height * width, fill))
{
}

GrayImage::GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels))
{
    if (height_ < 1 || width_ < 1) {
        throw DimensionError("image must be at least 1x1");
    }
    if (pixels_.size() != height_ * width_) {
        throw DimensionError("gray pixel buffer does not match image size");
    }
    if (!all_finite(pixels_)) {
        throw ValidationError("image contains non-finite values");
    }
    for (double& v : pixels_) v = std::clamp(v, 0.0, 1.0);
}

Embedding to_embedding(const NdArray& array)
{
    if (array.rank() != 2) {
        throw DimensionError("embedding must be rank 2 (n_t, c), got shape " + shape_string(array.shape));
    }
    const auto rows = static_cast<Eigen::Index>(array.shape[0]);
    const auto cols = static_cast<Eigen::Index>(array.shape[1]);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = array.data[static_cast<std::size_t>(r * cols + c)];
        }
    }
    return Embedding(std::move(m));
}

LatentTensor to_latent(const NdArray& array)
{
    if (array.rank() != 3) {
        throw DimensionError("latent must be rank 3 (C, H, W), got shape " + shape_string(array.shape));
    }
    const auto channels = static_cast<Eigen::Index>(array.shape[0]);
    const auto height = static_cast<Eigen::Index>(array.shape[1]);
    const auto width = static_cast<Eigen::Index>(array.shape[2]);
    const Eigen::Index pixels = height * width;
    Matrix flat(channels, pixels);
    for (Eigen::Index c = 0; c < channels; ++c) {
        for (Eigen::Index p = 0; p < pixels; ++p) {
            flat(c, p) = array.data[static_cast<std::size_t>(c * pixels + p)];
        }
    }
    return LatentTensor(std::move(flat), height, width);
}

NdArray to_array(const Embedding& embedding)
{
    const Matrix& m = embedding.tokens();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    return NdArray({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(data));
}

NdArray to_array(const LatentTensor& latent)
{
    const Matrix& m = latent.flat();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index c = 0; c < m.rows(); ++c) {
        for (Eigen::Index p = 0; p < m.cols(); ++p) data.push_back(m(c, p));
    }
    return NdArray({static_cast<std::size_t>(latent.channels()), static_cast<std::size_t>(latent.height()),
                    static_cast<std::size_t>(latent.width())},
                   std::move(data));
}

}  // namespace sadis
