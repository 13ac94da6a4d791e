#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sadis {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense C-order array of arbitrary rank, the in-memory form of an NPY file.
struct NdArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    NdArray() = default;
    NdArray(std::vector<std::size_t> shape, std::vector<double> data);

    std::size_t rank() const { return shape.size(); }
    std::size_t size() const { return data.size(); }
};

std::size_t element_count(std::span<const std::size_t> shape);

// Token matrix of an image encoder: n_t rows, c feature columns.
class Embedding {
public:
    Embedding() = default;
    explicit Embedding(Matrix tokens);

    static Embedding zeros(Eigen::Index tokens, Eigen::Index width);

    const Matrix& tokens() const { return tokens_; }
    Eigen::Index token_count() const { return tokens_.rows(); }
    Eigen::Index width() const { return tokens_.cols(); }

    bool operator==(const Embedding& other) const { return tokens_ == other.tokens_; }

private:
    Matrix tokens_;
};

// Channel-major latent C x H x W, stored as a C x (H*W) matrix whose column
// index is h * W + w.
class LatentTensor {
public:
    LatentTensor() = default;
    LatentTensor(Eigen::Index channels, Eigen::Index height, Eigen::Index width);
    LatentTensor(Matrix flat, Eigen::Index height, Eigen::Index width);

    Eigen::Index channels() const { return flat_.rows(); }
    Eigen::Index height() const { return height_; }
    Eigen::Index width() const { return width_; }
    Eigen::Index pixels() const { return height_ * width_; }

    const Matrix& flat() const { return flat_; }
    Matrix& flat() { return flat_; }

    double& at(Eigen::Index c, Eigen::Index h, Eigen::Index w) { return flat_(c, h * width_ + w); }
    double at(Eigen::Index c, Eigen::Index h, Eigen::Index w) const { return flat_(c, h * width_ + w); }

    // Spatial plane of one channel as an H x W matrix.
    Matrix plane(Eigen::Index c) const;

    bool same_shape(const LatentTensor& other) const;
    bool operator==(const LatentTensor& other) const
    {
        return same_shape(other) && flat_ == other.flat_;
    }

private:
    Matrix flat_;
    Eigen::Index height_ = 0;
    Eigen::Index width_ = 0;
};

// H x W x 3 image, channels interleaved, values in [0, 1].
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(std::size_t height, std::size_t width);
    RgbImage(std::size_t height, std::size_t width, std::vector<double> pixels);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t pixel_count() const { return height_ * width_; }

    double& at(std::size_t y, std::size_t x, std::size_t ch) { return pixels_[(y * width_ + x) * 3 + ch]; }
    double at(std::size_t y, std::size_t x, std::size_t ch) const { return pixels_[(y * width_ + x) * 3 + ch]; }

    std::span<const double> pixels() const { return pixels_; }
    std::span<double> pixels() { return pixels_; }

    bool operator==(const RgbImage&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> pixels_;
};

class GrayImage {
public:
    GrayImage() = default;
    GrayImage(std::size_t height, std::size_t width, double fill = 0.0);
    GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }

    double& at(std::size_t y, std::size_t x) { return pixels_[y * width_ + x]; }
    double at(std::size_t y, std::size_t x) const { return pixels_[y * width_ + x]; }

    std::span<const double> pixels() const { return pixels_; }

    bool operator==(const GrayImage&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> pixels_;
};

// Conversions between the interchange array and the typed views. Each
// validates rank and finiteness.
Embedding to_embedding(const NdArray& array);
LatentTensor to_latent(const NdArray& array);
NdArray to_array(const Embedding& embedding);
NdArray to_array(const LatentTensor& latent);

bool all_finite(std::span<const double> values);

}  // namespace sadis
