#include "sadis/imageops.hpp"

#include <numeric>
#include <string>

#include "sadis/error.hpp"

namespace sadis {

GrayImage grayscale(const RgbImage& image)
{
    std::vector<double> out(image.pixel_count());
    const auto px = image.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = kLumaR * px[3 * i] + kLumaG * px[3 * i + 1] + kLumaB * px[3 * i + 2];
    }
    return GrayImage(image.height(), image.width(), std::move(out));
}

RgbImage gray_to_rgb(const GrayImage& image)
{
    const auto px = image.pixels();
    std::vector<double> out(px.size() * 3);
    for (std::size_t i = 0; i < px.size(); ++i) {
        out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = px[i];
    }
    return RgbImage(image.height(), image.width(), std::move(out));
}

GrayImage average_gray(const GrayImage& image)
{
    const auto px = image.pixels();
    const double mean = std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
    return GrayImage(image.height(), image.width(), mean);
}

RgbImage downsample2x(const RgbImage& image)
{
    if (image.height() < 2 || image.width() < 2) {
        throw DimensionError("downsample2x needs at least 2x2 input, got " + std::to_string(image.height()) + "x" +
                             std::to_string(image.width()));
    }
    const std::size_t h = image.height() / 2;
    const std::size_t w = image.width() / 2;
    RgbImage out(h, w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                out.at(y, x, ch) = 0.25 * (image.at(2 * y, 2 * x, ch) + image.at(2 * y, 2 * x + 1, ch) +
                                           image.at(2 * y + 1, 2 * x, ch) + image.at(2 * y + 1, 2 * x + 1, ch));
            }
        }
    }
    return out;
}

}  // namespace sadis
