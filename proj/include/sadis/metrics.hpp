#pragma once

#include <cstdint>
#include <vector>

#include "sadis/tensor.hpp"

namespace sadis {

struct HistogramSet {
    std::size_t bins_per_channel = 256;
    std::vector<double> hist_r;
    std::vector<double> hist_g;
    std::vector<double> hist_b;

    const std::vector<double>& channel(std::size_t ch) const;
};

// Normalized per-channel histograms; value v lands in bin min(floor(v * bins), bins - 1).
HistogramSet color_histograms(const RgbImage& image, std::size_t bins = 256);

// Bhattacharyya coefficient sum_i sqrt(p_i q_i).
double bhattacharyya_coefficient(const std::vector<double>& p, const std::vector<double>& q);

// Sum over R, G, B of sqrt(max(0, 1 - BC)); lies in [0, 3].
double chist_distance(const RgbImage& a, const RgbImage& b, std::size_t bins = 256);

struct SwdOptions {
    std::size_t projections = 64;
    std::size_t scales = 3;
    std::uint64_t seed = 0;
};

// Seeded unit directions in RGB space, shared by every scale.
std::vector<Eigen::Vector3d> swd_directions(std::size_t count, std::uint64_t seed);

// 1-D Wasserstein-1 distance between two samples. The larger sample is
// reduced to the smaller count by picking sorted quantiles at (2i+1)/(2m).
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

// Sliced Wasserstein distance over RGB pixel clouds, averaged over
// directions and pyramid scales. A variant operating in plain RGB.
double swd_color_distance(const RgbImage& a, const RgbImage& b, const SwdOptions& options = {});
double swd_color_distance(const RgbImage& a, const RgbImage& b, const std::vector<Eigen::Vector3d>& directions,
                          std::size_t scales);

// (z - m)(z - m)^T / (HW - 1)
Matrix normalized_covariance(const LatentTensor& z);

// ||Cov(a) - Cov(b)||_F / ||Cov(b)||_F
double covariance_distance(const LatentTensor& a, const LatentTensor& b);
double covariance_distance(const LatentTensor& a, const Matrix& target_cov);

struct SpectrumProfile {
    std::vector<double> radial_bins;     // mean power per integer radius
    std::vector<std::size_t> bin_counts; // frequencies falling in each radius
    std::size_t max_radius = 0;

    double total_power() const;
};

// |DFT|^2 of an H x W array binned by round(|centered frequency|).
SpectrumProfile radial_spectrum(const Matrix& z);

// Mean over channels of each channel's radial profile.
SpectrumProfile radial_spectrum(const LatentTensor& z);

// Mean |log(1 + a_r) - log(1 + b_r)| over bins [begin, end).
double spectrum_gap(const SpectrumProfile& a, const SpectrumProfile& b);
double spectrum_gap(const SpectrumProfile& a, const SpectrumProfile& b, std::size_t begin, std::size_t end);

}  // namespace sadis
