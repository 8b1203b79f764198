#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "pnpir/errors.hpp"
#include "pnpir/image.hpp"

namespace pnpir {

namespace detail {

struct PngReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

struct PngErrorSlot {
    char message[256] = {};
};

inline void png_read_from_span(png_structp png, png_bytep out, png_size_t n) {
    auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + n > cur->bytes.size()) png_error(png, "truncated PNG stream");
    std::memcpy(out, cur->bytes.data() + cur->pos, n);
    cur->pos += n;
}

inline void png_write_to_vector(png_structp png, png_bytep in, png_size_t n) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), in, in + n);
}

inline void png_flush_noop(png_structp) {}

inline void png_record_error(png_structp png, png_const_charp msg) {
    auto* slot = static_cast<PngErrorSlot*>(png_get_error_ptr(png));
    std::snprintf(slot->message, sizeof(slot->message), "%s", msg ? msg : "unknown libpng error");
    png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

struct RawPng {
    int width = 0;
    int height = 0;
    int depth = 0;
    int color = 0;
    bool has_trns = false;
    std::vector<std::uint8_t> pixels; // row-major interleaved, host-order 16-bit
    std::size_t rowbytes = 0;
};

// libpng reports errors by longjmp; every object with a destructor lives in
// the caller or is declared before setjmp.
inline bool png_decode_raw(std::span<const std::uint8_t> bytes, RawPng& out, PngErrorSlot& err,
                           std::vector<png_bytep>& rows) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_record_error,
                                             png_warning_ignore);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    PngReadCursor cursor{bytes, 0};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, &cursor, png_read_from_span);
    png_read_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.depth = png_get_bit_depth(png, info);
    out.color = png_get_color_type(png, info);
    out.has_trns = png_get_valid(png, info, PNG_INFO_tRNS) != 0;
    const bool supported = (out.color == PNG_COLOR_TYPE_GRAY || out.color == PNG_COLOR_TYPE_RGB) &&
                           (out.depth == 8 || out.depth == 16) && !out.has_trns;
    if (supported) {
        if (out.depth == 16) png_set_swap(png);
        png_read_update_info(png, info);
        out.rowbytes = png_get_rowbytes(png, info);
        out.pixels.resize(out.rowbytes * out.height);
        rows.resize(out.height);
        for (int i = 0; i < out.height; ++i) rows[i] = out.pixels.data() + i * out.rowbytes;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline bool png_encode_raw(const std::vector<png_bytep>& rows, int width, int height, int color,
                           std::vector<std::uint8_t>& out, PngErrorSlot& err) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_record_error,
                                              png_warning_ignore);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, width, height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

} // namespace detail

/// Decode an 8- or 16-bit grayscale or RGB PNG into [0,1] samples.
inline Image decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw IoError("PNG: bad signature");

    detail::RawPng raw;
    detail::PngErrorSlot err;
    std::vector<png_bytep> rows;
    if (!detail::png_decode_raw(bytes, raw, err, rows))
        throw IoError(std::string("PNG: ") + (err.message[0] ? err.message : "decoder setup failed"));

    int channels = 0;
    if (raw.color == PNG_COLOR_TYPE_GRAY) channels = 1;
    else if (raw.color == PNG_COLOR_TYPE_RGB) channels = 3;
    else throw IoError("PNG: unsupported color type (alpha and palette images are rejected)");
    if (raw.depth != 8 && raw.depth != 16)
        throw IoError("PNG: unsupported bit depth " + std::to_string(raw.depth));
    if (raw.has_trns) throw IoError("PNG: transparency is not supported");

    Image img(channels, raw.height, raw.width);
    const double scale = raw.depth == 16 ? 65535.0 : 255.0;
    for (int i = 0; i < raw.height; ++i) {
        const std::uint8_t* row = raw.pixels.data() + i * raw.rowbytes;
        for (int j = 0; j < raw.width; ++j) {
            for (int c = 0; c < channels; ++c) {
                const std::size_t k = static_cast<std::size_t>(j) * channels + c;
                double v;
                if (raw.depth == 16) {
                    std::uint16_t s;
                    std::memcpy(&s, row + 2 * k, 2);
                    v = s;
                } else {
                    v = row[k];
                }
                img(c, i, j) = v / scale;
            }
        }
    }
    return img;
}

/// 8-bit quantization used at export: clamp to [0,1], round half away from zero.
inline std::uint8_t quantize8(double v) noexcept {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::round(c * 255.0));
}

/// Encode as an 8-bit grayscale or RGB PNG.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
    const int ch = img.channels();
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(img.height()) * img.width() * ch);
    for (int i = 0; i < img.height(); ++i)
        for (int j = 0; j < img.width(); ++j)
            for (int c = 0; c < ch; ++c)
                raw[(static_cast<std::size_t>(i) * img.width() + j) * ch + c] = quantize8(img(c, i, j));
    std::vector<png_bytep> rows(img.height());
    for (int i = 0; i < img.height(); ++i)
        rows[i] = raw.data() + static_cast<std::size_t>(i) * img.width() * ch;

    std::vector<std::uint8_t> out;
    detail::PngErrorSlot err;
    if (!detail::png_encode_raw(rows, img.width(), img.height(),
                                ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, out, err))
        throw IoError(std::string("PNG: ") + (err.message[0] ? err.message : "encoder setup failed"));
    return out;
}

/// Image after an 8-bit export/import round trip.
inline Image quantized(const Image& img) {
    Image out = img;
    for (auto& v : out.data()) v = quantize8(v) / 255.0;
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

inline Image read_png(const std::filesystem::path& path) { return decode_png(read_file_bytes(path)); }

inline void write_png(const std::filesystem::path& path, const Image& img) {
    write_file_bytes(path, encode_png(img));
}

} // namespace pnpir
