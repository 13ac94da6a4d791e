#include "sadis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include "sadis/error.hpp"
#include "sadis/imageops.hpp"

namespace sadis {

namespace {

std::vector<double> channel_values(const RgbImage& image, std::size_t ch)
{
    std::vector<double> out(image.pixel_count());
    const auto px = image.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = px[3 * i + ch];
    return out;
}

std::vector<double> project(const RgbImage& image, const Eigen::Vector3d& dir)
{
    std::vector<double> out(image.pixel_count());
    const auto px = image.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = dir[0] * px[3 * i] + dir[1] * px[3 * i + 1] + dir[2] * px[3 * i + 2];
    }
    return out;
}

// One-dimensional DFT along each row of `in`, returning the transformed rows.
Eigen::MatrixXcd dft_rows(const Eigen::MatrixXcd& in)
{
    const Eigen::Index n = in.cols();
    std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddle[static_cast<std::size_t>(k)] = {std::cos(angle), std::sin(angle)};
    }
    Eigen::MatrixXcd out(in.rows(), n);
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
        for (Eigen::Index u = 0; u < n; ++u) {
            std::complex<double> acc = 0.0;
            for (Eigen::Index x = 0; x < n; ++x) {
                acc += in(r, x) * twiddle[static_cast<std::size_t>((u * x) % n)];
            }
            out(r, u) = acc;
        }
    }
    return out;
}

Eigen::Index centered(Eigen::Index k, Eigen::Index n)
{
    return k <= n / 2 ? k : k - n;
}

}  // namespace

const std::vector<double>& HistogramSet::channel(std::size_t ch) const
{
    switch (ch) {
    case 0: return hist_r;
    case 1: return hist_g;
    case 2: return hist_b;
    default: throw DomainError("histogram channel index out of range");
    }
}

HistogramSet color_histograms(const RgbImage& image, std::size_t bins)
{
    if (bins < 2) {
        throw DomainError("histograms need at least 2 bins");
    }
    HistogramSet set;
    set.bins_per_channel = bins;
    std::vector<double>* targets[3] = {&set.hist_r, &set.hist_g, &set.hist_b};
    const double weight = 1.0 / static_cast<double>(image.pixel_count());
    for (std::size_t ch = 0; ch < 3; ++ch) {
        auto& hist = *targets[ch];
        hist.assign(bins, 0.0);
        for (double v : channel_values(image, ch)) {
            const auto bin = std::min(static_cast<std::size_t>(std::floor(v * static_cast<double>(bins))), bins - 1);
            hist[bin] += weight;
        }
    }
    return set;
}

double bhattacharyya_coefficient(const std::vector<double>& p, const std::vector<double>& q)
{
    if (p.size() != q.size()) {
        throw DimensionError("histograms differ in bin count");
    }
    double bc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
    return bc;
}

double chist_distance(const RgbImage& a, const RgbImage& b, std::size_t bins)
{
    const HistogramSet ha = color_histograms(a, bins);
    const HistogramSet hb = color_histograms(b, bins);
    double total = 0.0;
    for (std::size_t ch = 0; ch < 3; ++ch) {
        // 1 - BC written as half the squared Hellinger sum, which equals it
        // for normalized histograms and is exactly zero for identical ones.
        const auto& p = ha.channel(ch);
        const auto& q = hb.channel(ch);
        double gap = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
            gap += d * d;
        }
        total += std::sqrt(std::max(0.0, 0.5 * gap));
    }
    return total;
}

std::vector<Eigen::Vector3d> swd_directions(std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::Vector3d> dirs;
    dirs.reserve(count);
    while (dirs.size() < count) {
        Eigen::Vector3d d(normal(rng), normal(rng), normal(rng));
        const double norm = d.norm();
        if (norm > 1e-12) dirs.push_back(d / norm);
    }
    return dirs;
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) {
        throw DimensionError("wasserstein_1d needs nonempty samples");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.size() < b.size()) std::swap(a, b);
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = n == m ? i : (2 * i + 1) * n / (2 * m);
        total += std::abs(a[j] - b[i]);
    }
    return total / static_cast<double>(m);
}

double swd_color_distance(const RgbImage& a, const RgbImage& b, const std::vector<Eigen::Vector3d>& directions,
                          std::size_t scales)
{
    if (directions.empty()) throw DomainError("swd needs at least one projection");
    if (scales < 1) throw DomainError("swd needs at least one scale");
    const std::size_t need = std::size_t{1} << (scales - 1);
    for (const RgbImage* img : {&a, &b}) {
        if (img->height() < need || img->width() < need) {
            throw DimensionError("image " + std::to_string(img->height()) + "x" + std::to_string(img->width()) +
                                 " is too small for " + std::to_string(scales) + " scales");
        }
    }
    RgbImage level_a = a;
    RgbImage level_b = b;
    double total = 0.0;
    for (std::size_t s = 0; s < scales; ++s) {
        if (s > 0) {
            level_a = downsample2x(level_a);
            level_b = downsample2x(level_b);
        }
        for (const auto& dir : directions) {
            total += wasserstein_1d(project(level_a, dir), project(level_b, dir));
        }
    }
    return total / static_cast<double>(scales * directions.size());
}

double swd_color_distance(const RgbImage& a, const RgbImage& b, const SwdOptions& options)
{
    if (options.projections < 1) throw DomainError("swd needs at least one projection");
    return swd_color_distance(a, b, swd_directions(options.projections, options.seed), options.scales);
}

Matrix normalized_covariance(const LatentTensor& z)
{
    const Vector mean = z.flat().rowwise().mean();
    const Matrix centered = z.flat().colwise() - mean;
    return centered * centered.transpose() / static_cast<double>(z.pixels() - 1);
}

double covariance_distance(const LatentTensor& a, const Matrix& target_cov)
{
    if (a.channels() != target_cov.rows() || target_cov.rows() != target_cov.cols()) {
        throw DimensionError("covariance_distance: channel mismatch");
    }
    const double denom = target_cov.norm();
    if (!(denom > 0.0)) {
        throw DegenerateError("reference covariance is zero; relative distance undefined");
    }
    return (normalized_covariance(a) - target_cov).norm() / denom;
}

double covariance_distance(const LatentTensor& a, const LatentTensor& b)
{
    if (a.channels() != b.channels()) {
        throw DimensionError("covariance_distance: channel mismatch " + std::to_string(a.channels()) + " vs " +
                             std::to_string(b.channels()));
    }
    return covariance_distance(a, normalized_covariance(b));
}

double SpectrumProfile::total_power() const
{
    double total = 0.0;
    for (std::size_t r = 0; r < radial_bins.size(); ++r) total += radial_bins[r] * static_cast<double>(bin_counts[r]);
    return total;
}

SpectrumProfile radial_spectrum(const Matrix& z)
{
    const Eigen::Index h = z.rows();
    const Eigen::Index w = z.cols();
    if (h < 2 || w < 2) {
        throw DimensionError("radial_spectrum needs at least a 2x2 array");
    }
    const Eigen::MatrixXcd along_w = dft_rows(z.cast<std::complex<double>>());
    const Eigen::MatrixXcd freq = dft_rows(along_w.transpose()).transpose();

    auto radius = [&](Eigen::Index u, Eigen::Index v) {
        const double fu = static_cast<double>(centered(u, h));
        const double fv = static_cast<double>(centered(v, w));
        return static_cast<std::size_t>(std::lround(std::sqrt(fu * fu + fv * fv)));
    };

    SpectrumProfile profile;
    for (Eigen::Index u = 0; u < h; ++u) {
        for (Eigen::Index v = 0; v < w; ++v) profile.max_radius = std::max(profile.max_radius, radius(u, v));
    }
    profile.radial_bins.assign(profile.max_radius + 1, 0.0);
    profile.bin_counts.assign(profile.max_radius + 1, 0);
    for (Eigen::Index u = 0; u < h; ++u) {
        for (Eigen::Index v = 0; v < w; ++v) {
            const std::size_t r = radius(u, v);
            profile.radial_bins[r] += std::norm(freq(u, v));
            profile.bin_counts[r] += 1;
        }
    }
    for (std::size_t r = 0; r <= profile.max_radius; ++r) {
        if (profile.bin_counts[r]) profile.radial_bins[r] /= static_cast<double>(profile.bin_counts[r]);
    }
    return profile;
}

SpectrumProfile radial_spectrum(const LatentTensor& z)
{
    SpectrumProfile mean = radial_spectrum(z.plane(0));
    for (Eigen::Index c = 1; c < z.channels(); ++c) {
        const SpectrumProfile p = radial_spectrum(z.plane(c));
        for (std::size_t r = 0; r < mean.radial_bins.size(); ++r) mean.radial_bins[r] += p.radial_bins[r];
    }
    for (double& v : mean.radial_bins) v /= static_cast<double>(z.channels());
    return mean;
}

double spectrum_gap(const SpectrumProfile& a, const SpectrumProfile& b, std::size_t begin, std::size_t end)
{
    if (a.radial_bins.size() != b.radial_bins.size()) {
        throw DimensionError("spectrum_gap: profiles differ in length (" + std::to_string(a.radial_bins.size()) +
                             " vs " + std::to_string(b.radial_bins.size()) + ")");
    }
    if (begin >= end || end > a.radial_bins.size()) {
        throw DomainError("spectrum_gap: empty or out-of-range bin window");
    }
    double total = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
        total += std::abs(std::log1p(a.radial_bins[r]) - std::log1p(b.radial_bins[r]));
    }
    return total / static_cast<double>(end - begin);
}

double spectrum_gap(const SpectrumProfile& a, const SpectrumProfile& b)
{
    return spectrum_gap(a, b, 0, a.radial_bins.size());
}

}  // namespace sadis
