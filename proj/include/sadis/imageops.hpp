#pragma once

#include "sadis/tensor.hpp"

namespace sadis {

// BT.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

GrayImage grayscale(const RgbImage& image);

// Replicates the gray channel into R = G = B so the result can be fed to an
// encoder that expects three channels.
RgbImage gray_to_rgb(const GrayImage& image);

// Full-size image where every pixel holds the mean of the input.
GrayImage average_gray(const GrayImage& image);

// 2x2 box average; a trailing odd row or column is dropped.
RgbImage downsample2x(const RgbImage& image);

}  // namespace sadis
