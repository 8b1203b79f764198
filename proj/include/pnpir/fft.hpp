#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <mutex>
#include <vector>

#include "pnpir/errors.hpp"
#include "pnpir/image.hpp"
#include "pnpir/kernel.hpp"

namespace pnpir {

using Complex = std::complex<double>;

/// Complex planes, one per channel, row-major.
///
/// Forward transforms are unnormalized; the inverse carries the 1/N factor.
struct Spectrum {
    int channels = 1;
    int height = 0;
    int width = 0;
    std::vector<Complex> data;

    Spectrum() = default;
    Spectrum(int c, int h, int w, Complex fill = {})
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height) * width; }
    Complex& at(int c, int i, int j) noexcept { return data[(c * plane_size()) + static_cast<std::size_t>(i) * width + j]; }
    const Complex& at(int c, int i, int j) const noexcept {
        return data[(c * plane_size()) + static_cast<std::size_t>(i) * width + j];
    }
    bool same_shape(const Spectrum& o) const noexcept {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

inline void fft2_inplace(std::vector<Complex>& buf, std::size_t offset, int h, int w, int sign) {
    auto* p = reinterpret_cast<fftw_complex*>(buf.data() + offset);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_2d(h, w, p, p, sign, FFTW_ESTIMATE);
    }
    if (!plan) throw InvalidArgument("FFTW failed to create a plan");
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

} // namespace detail

inline Spectrum fft2(const Image& img) {
    Spectrum s(img.channels(), img.height(), img.width());
    auto src = img.data();
    for (std::size_t n = 0; n < src.size(); ++n) s.data[n] = Complex(src[n], 0.0);
    for (int c = 0; c < s.channels; ++c) detail::fft2_inplace(s.data, c * s.plane_size(), s.height, s.width, FFTW_FORWARD);
    return s;
}

inline Spectrum fft2(Spectrum s) {
    for (int c = 0; c < s.channels; ++c) detail::fft2_inplace(s.data, c * s.plane_size(), s.height, s.width, FFTW_FORWARD);
    return s;
}

inline Spectrum ifft2(Spectrum s) {
    for (int c = 0; c < s.channels; ++c) detail::fft2_inplace(s.data, c * s.plane_size(), s.height, s.width, FFTW_BACKWARD);
    const double inv = 1.0 / static_cast<double>(s.plane_size());
    for (auto& v : s.data) v *= inv;
    return s;
}

/// Inverse transform keeping the real part. The imaginary residue of a
/// Hermitian spectrum is rounding noise and is dropped.
inline Image ifft2_real(const Spectrum& s) {
    Spectrum t = ifft2(s);
    Image out(s.channels, s.height, s.width);
    auto dst = out.data();
    for (std::size_t n = 0; n < dst.size(); ++n) dst[n] = t.data[n].real();
    return out;
}

/// Optical transfer function of `k` on a height x width grid: the kernel is
/// zero-padded and circularly shifted so its center tap sits at (0,0).
inline Spectrum psf2otf(const BlurKernel& k, int height, int width) {
    if (k.height() > height || k.width() > width)
        throw InvalidArgument("psf2otf: kernel larger than image");
    Spectrum s(1, height, width);
    for (int i = 0; i < k.height(); ++i) {
        for (int j = 0; j < k.width(); ++j) {
            const int ii = ((i - k.center_row()) % height + height) % height;
            const int jj = ((j - k.center_col()) % width + width) % width;
            s.at(0, ii, jj) += k(i, j);
        }
    }
    return fft2(std::move(s));
}

/// Per-channel circular convolution with the kernel centered at its middle tap.
inline Image circular_convolve(const Image& img, const BlurKernel& k) {
    const Spectrum otf = psf2otf(k, img.height(), img.width());
    Spectrum f = fft2(img);
    const std::size_t n = f.plane_size();
    for (int c = 0; c < f.channels; ++c)
        for (std::size_t p = 0; p < n; ++p) f.data[c * n + p] *= otf.data[p];
    return ifft2_real(f);
}

/// Mean over the factor x factor distinct blocks: entry (i,j) of the result
/// averages entries (i + a*H/factor, j + b*W/factor).
inline Spectrum block_downsample_spectrum(const Spectrum& s, int factor) {
    if (factor < 1 || s.height % factor != 0 || s.width % factor != 0)
        throw InvalidArgument("block_downsample_spectrum: dimensions not divisible by factor");
    const int bh = s.height / factor, bw = s.width / factor;
    Spectrum out(s.channels, bh, bw);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int c = 0; c < s.channels; ++c)
        for (int a = 0; a < factor; ++a)
            for (int i = 0; i < bh; ++i)
                for (int b = 0; b < factor; ++b)
                    for (int j = 0; j < bw; ++j) out.at(c, i, j) += s.at(c, a * bh + i, b * bw + j);
    for (auto& v : out.data) v *= inv;
    return out;
}

/// Multiplies each of the factor x factor distinct blocks of `a` by `b`.
/// Either operand may have a single channel, broadcast over the other's.
inline Spectrum block_multiply_spectrum(const Spectrum& a, const Spectrum& b, int factor) {
    if (factor < 1 || a.height != b.height * factor || a.width != b.width * factor ||
        (a.channels != b.channels && a.channels != 1 && b.channels != 1))
        throw InvalidArgument("block_multiply_spectrum: shape mismatch");
    Spectrum out(std::max(a.channels, b.channels), a.height, a.width);
    for (int c = 0; c < out.channels; ++c) {
        const int ca = a.channels == 1 ? 0 : c;
        const int cb = b.channels == 1 ? 0 : c;
        for (int i = 0; i < a.height; ++i)
            for (int j = 0; j < a.width; ++j)
                out.at(c, i, j) = a.at(ca, i, j) * b.at(cb, i % b.height, j % b.width);
    }
    return out;
}

} // namespace pnpir
