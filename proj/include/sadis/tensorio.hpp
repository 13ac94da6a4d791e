#pragma once

#include <filesystem>

#include "sadis/tensor.hpp"

namespace sadis {

enum class Precision { f32, f64 };

// NPY v1.0 only. Data is widened to double on read; f32 payloads survive a
// read/write round trip bit-exactly.
NdArray read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const NdArray& array, Precision precision = Precision::f32);

// In-memory variants used by the file functions and the python bindings.
NdArray parse_npy(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_npy(const NdArray& array, Precision precision = Precision::f32);

Embedding read_embedding(const std::filesystem::path& path);
LatentTensor read_latent(const std::filesystem::path& path);

// PNG (8-bit gray/RGB/RGBA/palette, alpha dropped) or binary PPM (P6,
// maxval 255), detected from the file's magic bytes.
RgbImage read_image(const std::filesystem::path& path);
// Format chosen from the extension: .png or .ppm. Values are quantized to
// 8 bits by round-half-up.
void write_image(const std::filesystem::path& path, const RgbImage& image);

unsigned char quantize_channel(double value);

}  // namespace sadis
