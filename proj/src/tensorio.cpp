#include "sadis/tensorio.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include <png.h>

#include "sadis/error.hpp"

namespace sadis {

namespace {

constexpr std::string_view kNpyMagic = "\x93NUMPY";
constexpr std::size_t kNpyPreamble = 10;  // magic(6) + version(2) + header length(2)
constexpr std::size_t kNpyAlign = 64;

static_assert(std::endian::native == std::endian::little, "NPY payloads are handled as little-endian");

std::vector<unsigned char> slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::filesystem::path& path, std::span<const unsigned char> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

// Returns the raw text following `'key':` in the header dict.
std::string_view header_value(std::string_view header, std::string_view key)
{
    const std::string quoted = "'" + std::string(key) + "'";
    auto pos = header.find(quoted);
    if (pos == std::string_view::npos) {
        throw FormatError("npy header is missing field '" + std::string(key) + "'");
    }
    pos = header.find(':', pos + quoted.size());
    if (pos == std::string_view::npos) {
        throw FormatError("npy header field '" + std::string(key) + "' has no value");
    }
    auto rest = header.substr(pos + 1);
    const auto first = rest.find_first_not_of(' ');
    if (first == std::string_view::npos) {
        throw FormatError("npy header field '" + std::string(key) + "' has no value");
    }
    return rest.substr(first);
}

std::vector<std::size_t> parse_shape(std::string_view value)
{
    if (value.empty() || value.front() != '(') {
        throw FormatError("npy header field 'shape' is not a tuple");
    }
    const auto close = value.find(')');
    if (close == std::string_view::npos) {
        throw FormatError("npy header field 'shape' is not terminated");
    }
    std::vector<std::size_t> shape;
    std::string_view body = value.substr(1, close - 1);
    while (!body.empty()) {
        const auto comma = body.find(',');
        std::string_view item = body.substr(0, comma);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) {
            if (!std::all_of(item.begin(), item.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
                throw FormatError("npy header field 'shape' has a non-integer entry '" + std::string(item) + "'");
            }
            shape.push_back(std::stoull(std::string(item)));
        }
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    return shape;
}

std::string shape_literal(const std::vector<std::size_t>& shape)
{
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    if (shape.size() == 1) s += ",";
    return s + ")";
}

bool is_png(std::span<const unsigned char> bytes)
{
    static constexpr unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin());
}

RgbImage decode_png(std::span<const unsigned char> bytes)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw FormatError(std::string("png decode failed: ") + image.message);
    }
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw UnsupportedError("only 8-bit PNG images are supported (16-bit input)");
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        throw FormatError(std::string("png decode failed: ") + image.message);
    }
    std::vector<double> pixels(buffer.size());
    std::transform(buffer.begin(), buffer.end(), pixels.begin(), [](unsigned char b) { return b / 255.0; });
    return RgbImage(image.height, image.width, std::move(pixels));
}

// Next whitespace-delimited token of a PPM header, skipping '#' comments.
std::string ppm_token(std::span<const unsigned char> bytes, std::size_t& pos)
{
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) token.push_back(static_cast<char>(bytes[pos++]));
    if (token.empty()) {
        throw FormatError("truncated ppm header");
    }
    return token;
}

RgbImage decode_ppm(std::span<const unsigned char> bytes)
{
    std::size_t pos = 2;
    std::size_t width = 0;
    std::size_t height = 0;
    unsigned long maxval = 0;
    try {
        width = std::stoul(ppm_token(bytes, pos));
        height = std::stoul(ppm_token(bytes, pos));
        maxval = std::stoul(ppm_token(bytes, pos));
    } catch (const std::logic_error&) {
        throw FormatError("ppm header has a non-numeric field");
    }
    if (maxval != 255) {
        throw UnsupportedError("only 8-bit PPM (maxval 255) is supported, got maxval " + std::to_string(maxval));
    }
    ++pos;  // single whitespace byte before the raster
    const std::size_t count = width * height * 3;
    if (bytes.size() < pos + count) {
        throw FormatError("ppm raster is truncated");
    }
    std::vector<double> pixels(count);
    for (std::size_t i = 0; i < count; ++i) pixels[i] = bytes[pos + i] / 255.0;
    return RgbImage(height, width, std::move(pixels));
}

std::vector<unsigned char> quantize(const RgbImage& image)
{
    std::vector<unsigned char> out(image.pixels().size());
    std::transform(image.pixels().begin(), image.pixels().end(), out.begin(), quantize_channel);
    return out;
}

}  // namespace

unsigned char quantize_channel(double value)
{
    return static_cast<unsigned char>(std::floor(std::clamp(value, 0.0, 1.0) * 255.0 + 0.5));
}

NdArray parse_npy(std::span<const unsigned char> bytes)
{
    if (bytes.size() < kNpyPreamble ||
        std::memcmp(bytes.data(), kNpyMagic.data(), kNpyMagic.size()) != 0) {
        throw FormatError("not an NPY file: bad magic");
    }
    if (bytes[6] != 1 || bytes[7] != 0) {
        throw FormatError("npy version " + std::to_string(bytes[6]) + "." + std::to_string(bytes[7]) +
                          " is not supported (v1.0 only)");
    }
    const std::size_t header_len = bytes[8] | (std::size_t{bytes[9]} << 8);
    if (bytes.size() < kNpyPreamble + header_len) {
        throw FormatError("npy header length exceeds file size");
    }
    const std::string_view header(reinterpret_cast<const char*>(bytes.data() + kNpyPreamble), header_len);

    const std::string_view descr_value = header_value(header, "descr");
    if (descr_value.size() < 2 || (descr_value.front() != '\'' && descr_value.front() != '"')) {
        throw FormatError("npy header field 'descr' is not a string");
    }
    const auto descr_end = descr_value.find(descr_value.front(), 1);
    if (descr_end == std::string_view::npos) {
        throw FormatError("npy header field 'descr' is not terminated");
    }
    const std::string descr(descr_value.substr(1, descr_end - 1));
    std::size_t item_size = 0;
    if (descr == "<f4") {
        item_size = 4;
    } else if (descr == "<f8") {
        item_size = 8;
    } else {
        throw UnsupportedError("unsupported npy dtype '" + descr + "' (expected <f4 or <f8)");
    }

    const std::string_view order = header_value(header, "fortran_order");
    if (order.starts_with("True")) {
        throw UnsupportedError("fortran_order arrays are not supported (C order only)");
    }
    if (!order.starts_with("False")) {
        throw FormatError("npy header field 'fortran_order' is not a boolean");
    }

    std::vector<std::size_t> shape = parse_shape(header_value(header, "shape"));
    const std::size_t count = element_count(shape);
    const std::size_t offset = kNpyPreamble + header_len;
    if (bytes.size() < offset + count * item_size) {
        throw FormatError("npy data section is shorter than shape " + shape_literal(shape) + " requires");
    }

    std::vector<double> data(count);
    const unsigned char* src = bytes.data() + offset;
    if (item_size == 4) {
        for (std::size_t i = 0; i < count; ++i) {
            float v;
            std::memcpy(&v, src + i * 4, 4);
            data[i] = v;
        }
    } else {
        std::memcpy(data.data(), src, count * 8);
    }
    if (!all_finite(data)) {
        throw ValidationError("npy payload contains non-finite values");
    }
    return NdArray(std::move(shape), std::move(data));
}

std::vector<unsigned char> encode_npy(const NdArray& array, Precision precision)
{
    if (array.shape.empty()) {
        throw DimensionError("cannot write a rank-0 array; give it an explicit shape");
    }
    if (element_count(array.shape) != array.data.size()) {
        throw DimensionError("array shape does not match its element count");
    }
    if (!all_finite(array.data)) {
        throw ValidationError("refusing to write non-finite values");
    }

    std::string header = "{'descr': '";
    header += precision == Precision::f32 ? "<f4" : "<f8";
    header += "', 'fortran_order': False, 'shape': " + shape_literal(array.shape) + ", }";
    const std::size_t unpadded = kNpyPreamble + header.size() + 1;
    header.append((kNpyAlign - unpadded % kNpyAlign) % kNpyAlign, ' ');
    header.push_back('\n');
    if (header.size() > 0xffff) {
        throw DimensionError("npy header too long for format v1.0");
    }

    const std::size_t item_size = precision == Precision::f32 ? 4 : 8;
    std::vector<unsigned char> out;
    out.reserve(kNpyPreamble + header.size() + array.size() * item_size);
    out.insert(out.end(), kNpyMagic.begin(), kNpyMagic.end());
    out.push_back(1);
    out.push_back(0);
    out.push_back(static_cast<unsigned char>(header.size() & 0xff));
    out.push_back(static_cast<unsigned char>(header.size() >> 8));
    out.insert(out.end(), header.begin(), header.end());

    const std::size_t data_offset = out.size();
    out.resize(data_offset + array.size() * item_size);
    unsigned char* dst = out.data() + data_offset;
    if (precision == Precision::f32) {
        for (std::size_t i = 0; i < array.size(); ++i) {
            const auto v = static_cast<float>(array.data[i]);
            std::memcpy(dst + i * 4, &v, 4);
        }
    } else {
        std::memcpy(dst, array.data.data(), array.size() * 8);
    }
    return out;
}

NdArray read_npy(const std::filesystem::path& path)
{
    return parse_npy(slurp(path));
}

void write_npy(const std::filesystem::path& path, const NdArray& array, Precision precision)
{
    spill(path, encode_npy(array, precision));
}

Embedding read_embedding(const std::filesystem::path& path)
{
    return to_embedding(read_npy(path));
}

LatentTensor read_latent(const std::filesystem::path& path)
{
    return to_latent(read_npy(path));
}

RgbImage read_image(const std::filesystem::path& path)
{
    const auto bytes = slurp(path);
    if (is_png(bytes)) {
        return decode_png(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
        return decode_ppm(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '7') {
        throw UnsupportedError("only binary P6 PPM is supported");
    }
    throw UnsupportedError("unrecognized image format in " + path.string());
}

void write_image(const std::filesystem::path& path, const RgbImage& image)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto raster = quantize(image);

    if (ext == ".ppm") {
        const std::string header =
            "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
        std::vector<unsigned char> bytes(header.begin(), header.end());
        bytes.insert(bytes.end(), raster.begin(), raster.end());
        spill(path, bytes);
        return;
    }
    if (ext == ".png") {
        png_image png{};
        png.version = PNG_IMAGE_VERSION;
        png.width = static_cast<png_uint_32>(image.width());
        png.height = static_cast<png_uint_32>(image.height());
        png.format = PNG_FORMAT_RGB;
        png_alloc_size_t size = 0;
        if (!png_image_write_to_memory(&png, nullptr, &size, 0, raster.data(), 0, nullptr)) {
            throw IoError(std::string("png encode failed: ") + png.message);
        }
        std::vector<unsigned char> bytes(size);
        if (!png_image_write_to_memory(&png, bytes.data(), &size, 0, raster.data(), 0, nullptr)) {
            throw IoError(std::string("png encode failed: ") + png.message);
        }
        bytes.resize(size);
        spill(path, bytes);
        return;
    }
    throw UnsupportedError("cannot infer image format from extension '" + ext + "' (use .png or .ppm)");
}

}  // namespace sadis
