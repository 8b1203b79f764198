#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pnpir/errors.hpp"
#include "pnpir/fft.hpp"
#include "pnpir/image.hpp"
#include "pnpir/kernel.hpp"
#include "pnpir/rng.hpp"

namespace pnpir {

/// Keeps the upper-left sample of every s x s patch.
inline Image sfold_downsample(const Image& img, int s) {
    if (s < 1 || img.height() % s != 0 || img.width() % s != 0)
        throw InvalidArgument("sfold_downsample: dimensions not divisible by " + std::to_string(s));
    Image out(img.channels(), img.height() / s, img.width() / s);
    for (int c = 0; c < img.channels(); ++c)
        for (int i = 0; i < out.height(); ++i)
            for (int j = 0; j < out.width(); ++j) out(c, i, j) = img(c, s * i, s * j);
    return out;
}

/// Adjoint of sfold_downsample: places samples at (s*i, s*j), zeros elsewhere.
inline Image zerofill_upsample(const Image& img, int s) {
    if (s < 1) throw InvalidArgument("zerofill_upsample: factor must be >= 1");
    Image out(img.channels(), img.height() * s, img.width() * s);
    for (int c = 0; c < img.channels(); ++c)
        for (int i = 0; i < img.height(); ++i)
            for (int j = 0; j < img.width(); ++j) out(c, s * i, s * j) = img(c, i, j);
    return out;
}

/// Keys cubic convolution kernel with a = -0.5.
inline double cubic_weight(double x) noexcept {
    const double ax = std::abs(x);
    if (ax <= 1.0) return (1.5 * ax - 2.5) * ax * ax + 1.0;
    if (ax < 2.0) return ((-0.5 * ax + 2.5) * ax - 4.0) * ax + 2.0;
    return 0.0;
}

namespace detail {

struct ResampleTaps {
    std::vector<int> first;             // first source index per output sample
    std::vector<std::vector<double>> w; // normalized weights per output sample
};

// Pixel-center alignment: output o samples source coordinate (o + 0.5)/scale - 0.5.
// When shrinking the kernel is stretched by 1/scale (antialiasing).
inline ResampleTaps resample_taps(int out_len, double scale) {
    const double stretch = scale < 1.0 ? scale : 1.0;
    const double support = 2.0 / stretch;
    ResampleTaps taps;
    taps.first.resize(out_len);
    taps.w.resize(out_len);
    for (int o = 0; o < out_len; ++o) {
        const double u = (o + 0.5) / scale - 0.5;
        const int lo = static_cast<int>(std::floor(u - support));
        const int hi = static_cast<int>(std::ceil(u + support));
        taps.first[o] = lo;
        auto& w = taps.w[o];
        w.resize(hi - lo + 1);
        double sum = 0.0;
        for (int t = lo; t <= hi; ++t) {
            const double v = stretch * cubic_weight(stretch * (u - t));
            w[t - lo] = v;
            sum += v;
        }
        for (auto& v : w) v /= sum;
    }
    return taps;
}

} // namespace detail

/// Separable bicubic resampling (a = -0.5), pixel-center aligned, taps
/// clamped at the image edges. Output size is round(dim * scale).
inline Image bicubic_resize(const Image& img, double scale) {
    if (!(scale > 0.0)) throw InvalidArgument("bicubic_resize: scale must be > 0");
    const int oh = static_cast<int>(std::lround(img.height() * scale));
    const int ow = static_cast<int>(std::lround(img.width() * scale));
    if (oh < 1 || ow < 1) throw InvalidArgument("bicubic_resize: output would be empty");

    const auto rows = detail::resample_taps(oh, scale);
    const auto cols = detail::resample_taps(ow, scale);
    auto clamp = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };

    Image tmp(img.channels(), img.height(), ow);
    for (int c = 0; c < img.channels(); ++c)
        for (int i = 0; i < img.height(); ++i)
            for (int o = 0; o < ow; ++o) {
                double acc = 0.0;
                const auto& w = cols.w[o];
                for (std::size_t t = 0; t < w.size(); ++t)
                    acc += w[t] * img(c, i, clamp(cols.first[o] + static_cast<int>(t), img.width()));
                tmp(c, i, o) = acc;
            }
    Image out(img.channels(), oh, ow);
    for (int c = 0; c < img.channels(); ++c)
        for (int o = 0; o < oh; ++o) {
            const auto& w = rows.w[o];
            for (int j = 0; j < ow; ++j) {
                double acc = 0.0;
                for (std::size_t t = 0; t < w.size(); ++t)
                    acc += w[t] * tmp(c, clamp(rows.first[o] + static_cast<int>(t), img.height()), j);
                out(c, o, j) = acc;
            }
        }
    return out;
}

/// Kernel k such that (x conv k) followed by s-fold decimation equals
/// bicubic downscaling by 1/s away from the image border. Taps can be negative.
inline BlurKernel bicubic_equivalent_kernel(int s) {
    if (s < 1) throw InvalidArgument("bicubic_equivalent_kernel: factor must be >= 1");
    // one interior output sample; its tap pattern relative to s*o is shift invariant
    const int o = 8;
    const auto taps = detail::resample_taps(16, 1.0 / s);
    const int base = taps.first[o] - s * o;
    const auto& w = taps.w[o];
    int reach = 0;
    for (std::size_t t = 0; t < w.size(); ++t)
        if (w[t] != 0.0) reach = std::max(reach, std::abs(base + static_cast<int>(t)));
    const int size = 2 * reach + 1;
    std::vector<double> k1(size, 0.0);
    for (std::size_t t = 0; t < w.size(); ++t) {
        const int offset = base + static_cast<int>(t);
        if (std::abs(offset) <= reach) k1[reach - offset] += w[t];
    }
    std::vector<double> k2(static_cast<std::size_t>(size) * size);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) k2[static_cast<std::size_t>(i) * size + j] = k1[i] * k1[j];
    return BlurKernel::signed_taps(size, size, std::move(k2));
}

/// 2x2 color filter array tile, listed row-major: (0,0) (0,1) (1,0) (1,1).
class CfaPattern {
public:
    /// Channel index (0=R, 1=G, 2=B) for each tile position.
    explicit CfaPattern(const std::string& letters = "RGGB") : name_(letters) {
        if (letters.size() != 4) throw InvalidArgument("CFA pattern must have 4 letters");
        int counts[3] = {0, 0, 0};
        for (int n = 0; n < 4; ++n) {
            switch (letters[n]) {
            case 'R': case 'r': tile_[n] = 0; break;
            case 'G': case 'g': tile_[n] = 1; break;
            case 'B': case 'b': tile_[n] = 2; break;
            default: throw InvalidArgument("CFA pattern letters must be R, G or B");
            }
            ++counts[tile_[n]];
        }
        if (counts[0] != 1 || counts[1] != 2 || counts[2] != 1)
            throw InvalidArgument("CFA pattern needs one R, two G and one B");
    }

    int channel_at(int i, int j) const noexcept { return tile_[(i & 1) * 2 + (j & 1)]; }
    const std::string& name() const noexcept { return name_; }
    bool operator==(const CfaPattern& o) const noexcept { return tile_ == o.tile_; }

private:
    std::array<int, 4> tile_{};
    std::string name_;
};

inline Image cfa_mask(const CfaPattern& pattern, int height, int width) {
    Image m(3, height, width);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) m(pattern.channel_at(i, j), i, j) = 1.0;
    return m;
}

inline Image mosaic(const Image& img, const CfaPattern& pattern) {
    if (img.channels() != 3) throw InvalidArgument("mosaic: input must have 3 channels");
    Image out(3, img.height(), img.width());
    for (int i = 0; i < img.height(); ++i)
        for (int j = 0; j < img.width(); ++j) {
            const int c = pattern.channel_at(i, j);
            out(c, i, j) = img(c, i, j);
        }
    return out;
}

/// Adds i.i.d. N(0, (sigma255/255)^2) noise drawn from xoshiro256** + Box-Muller.
inline Image add_awgn(const Image& img, double sigma255, std::uint64_t seed) {
    if (!(sigma255 >= 0.0)) throw InvalidArgument("add_awgn: sigma must be >= 0");
    Image out = img;
    if (sigma255 == 0.0) return out;
    const double sd = sigma255 / 255.0;
    GaussianSampler normal(seed);
    for (auto& v : out.data()) v += sd * normal();
    return out;
}

enum class Task { deblur, sisr_classical, sisr_bicubic, demosaic };

inline const char* task_name(Task t) noexcept {
    switch (t) {
    case Task::deblur: return "deblur";
    case Task::sisr_classical: return "sr-classical";
    case Task::sisr_bicubic: return "sr-bicubic";
    case Task::demosaic: return "demosaic";
    }
    return "?";
}

/// Degradation descriptor: the operator T and the AWGN level on the 0-255 scale.
struct DegradationSpec {
    Task task = Task::deblur;
    BlurKernel kernel = BlurKernel::delta();
    int scale = 1;
    CfaPattern cfa{};
    double sigma255 = 0.0;

    static DegradationSpec deblur(BlurKernel k, double sigma255) {
        return {Task::deblur, std::move(k), 1, CfaPattern{}, sigma255};
    }
    static DegradationSpec classical_sr(int s, BlurKernel k, double sigma255) {
        if (s < 1) throw InvalidArgument("scale factor must be >= 1");
        return {Task::sisr_classical, std::move(k), s, CfaPattern{}, sigma255};
    }
    static DegradationSpec bicubic_sr(int s, double sigma255) {
        if (s < 1) throw InvalidArgument("scale factor must be >= 1");
        return {Task::sisr_bicubic, BlurKernel::delta(), s, CfaPattern{}, sigma255};
    }
    static DegradationSpec demosaic(CfaPattern p, double sigma255 = 0.0) {
        return {Task::demosaic, BlurKernel::delta(), 1, std::move(p), sigma255};
    }
};

/// Noise-free forward operator T(x).
inline Image forward_operator(const Image& x, const DegradationSpec& spec) {
    switch (spec.task) {
    case Task::deblur: return circular_convolve(x, spec.kernel);
    case Task::sisr_classical: return sfold_downsample(circular_convolve(x, spec.kernel), spec.scale);
    case Task::sisr_bicubic: return bicubic_resize(x, 1.0 / spec.scale);
    case Task::demosaic: return mosaic(x, spec.cfa);
    }
    throw InvalidArgument("unknown task");
}

/// T(x) + n. For demosaicing the noise is confined to the observed samples.
inline Image apply_degradation(const Image& x, const DegradationSpec& spec, std::uint64_t seed) {
    Image y = add_awgn(forward_operator(x, spec), spec.sigma255, seed);
    if (spec.task == Task::demosaic && spec.sigma255 > 0.0) y = mosaic(y, spec.cfa);
    return y;
}

} // namespace pnpir
