#pragma once

#include <optional>

#include "pnpir/degrade.hpp"
#include "pnpir/errors.hpp"
#include "pnpir/fft.hpp"
#include "pnpir/image.hpp"
#include "pnpir/kernel.hpp"

namespace pnpir {

/// Everything the x-update needs that does not depend on alpha or z.
///
/// For blur-based tasks (deblur, classical SR, and bicubic SR through its
/// equivalent kernel) this holds the OTF on the high-resolution grid, its
/// squared magnitude (block-averaged for s > 1) and conj(OTF) * F(y up s).
/// For demosaicing it holds the CFA mask.
class DataProxContext {
public:
    DataProxContext(const DegradationSpec& spec, const Image& y) : spec_(spec), y_(y) {
        switch (spec.task) {
        case Task::deblur:
            build_spectral(spec.kernel, 1);
            break;
        case Task::sisr_classical:
            build_spectral(spec.kernel, spec.scale);
            break;
        case Task::sisr_bicubic:
            build_spectral(bicubic_equivalent_kernel(spec.scale), spec.scale);
            break;
        case Task::demosaic:
            if (y.channels() != 3) throw InvalidArgument("demosaic observation must have 3 channels");
            mask_ = cfa_mask(spec.cfa, y.height(), y.width());
            break;
        }
    }

    const DegradationSpec& spec() const noexcept { return spec_; }
    const Image& observation() const noexcept { return y_; }
    int scale() const noexcept { return scale_; }
    int hr_height() const noexcept { return y_.height() * scale_; }
    int hr_width() const noexcept { return y_.width() * scale_; }
    const Spectrum& otf() const { return otf_; }
    const Spectrum& otf_power_blocks() const { return power_blocks_; }
    const Spectrum& back_projected_observation() const { return fbfy_; }
    const Image& mask() const { return *mask_; }

    /// True when the cached spectra were built for an observation of this shape.
    bool matches(const Image& y) const noexcept { return y.same_shape(y_); }

private:
    void build_spectral(const BlurKernel& k, int s) {
        scale_ = s;
        const int h = y_.height() * s;
        const int w = y_.width() * s;
        otf_ = psf2otf(k, h, w);
        Spectrum power(1, h, w);
        for (std::size_t p = 0; p < power.data.size(); ++p) power.data[p] = std::norm(otf_.data[p]);
        power_blocks_ = block_downsample_spectrum(power, s);
        fbfy_ = fft2(s == 1 ? y_ : zerofill_upsample(y_, s));
        const std::size_t n = fbfy_.plane_size();
        for (int c = 0; c < fbfy_.channels; ++c)
            for (std::size_t p = 0; p < n; ++p) fbfy_.data[c * n + p] *= std::conj(otf_.data[p]);
    }

    DegradationSpec spec_;
    Image y_;
    int scale_ = 1;
    Spectrum otf_;
    Spectrum power_blocks_;
    Spectrum fbfy_;
    std::optional<Image> mask_;
};

namespace detail {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be finite and > 0");
}

} // namespace detail

/// argmin_x |y - x conv k|^2 + alpha |x - z|^2 under circular boundaries.
inline Image deblur_prox(const DataProxContext& ctx, const Image& z, double alpha) {
    detail::check_alpha(alpha);
    if (ctx.scale() != 1 || !ctx.observation().same_shape(z))
        throw InvalidArgument("deblur_prox: z must match the observation");
    Spectrum f = fft2(z);
    const auto& fbfy = ctx.back_projected_observation();
    const auto& otf = ctx.otf();
    const std::size_t n = f.plane_size();
    for (int c = 0; c < f.channels; ++c)
        for (std::size_t p = 0; p < n; ++p) {
            const std::size_t q = c * n + p;
            f.data[q] = (fbfy.data[q] + alpha * f.data[q]) / (std::norm(otf.data[p]) + alpha);
        }
    return ifft2_real(f);
}

inline Image deblur_prox(const BlurKernel& k, const Image& y, const Image& z, double alpha) {
    return deblur_prox(DataProxContext(DegradationSpec::deblur(k, 0.0), y), z, alpha);
}

/// argmin_x |y - (x conv k) down s|^2 + alpha |x - z|^2, solved exactly in
/// the Fourier domain through the distinct-block operators.
inline Image sisr_prox_closed(const DataProxContext& ctx, const Image& z, double alpha) {
    detail::check_alpha(alpha);
    const int s = ctx.scale();
    if (z.channels() != ctx.observation().channels() || z.height() != ctx.hr_height() ||
        z.width() != ctx.hr_width())
        throw InvalidArgument("sisr_prox_closed: z must be the observation size times the scale");

    const auto& otf = ctx.otf();
    Spectrum d = fft2(z);
    const std::size_t n = d.plane_size();
    const auto& fbfy = ctx.back_projected_observation();
    for (std::size_t q = 0; q < d.data.size(); ++q) d.data[q] = fbfy.data[q] + alpha * d.data[q];

    Spectrum fkd = d;
    for (int c = 0; c < d.channels; ++c)
        for (std::size_t p = 0; p < n; ++p) fkd.data[c * n + p] *= otf.data[p];
    Spectrum ratio = block_downsample_spectrum(fkd, s);
    const auto& power = ctx.otf_power_blocks();
    const std::size_t nb = ratio.plane_size();
    for (int c = 0; c < ratio.channels; ++c)
        for (std::size_t p = 0; p < nb; ++p) ratio.data[c * nb + p] /= power.data[p] + alpha;

    Spectrum conj_otf = otf;
    for (auto& v : conj_otf.data) v = std::conj(v);
    const Spectrum correction = block_multiply_spectrum(conj_otf, ratio, s);
    for (std::size_t q = 0; q < d.data.size(); ++q) d.data[q] = (d.data[q] - correction.data[q]) / alpha;
    return ifft2_real(d);
}

inline Image sisr_prox_closed(const BlurKernel& k, int s, const Image& y, const Image& z, double alpha) {
    return sisr_prox_closed(DataProxContext(DegradationSpec::classical_sr(s, k, 0.0), y), z, alpha);
}

struct IbpOptions {
    double step = 1.75;
    int inner_iterations = 5;
};

/// Iterative back-projection from z: each step adds step * T^T (y - T x).
/// Classical degradations use the zero-filled residual convolved with the
/// adjoint kernel; bicubic degradations upscale the residual bicubically.
inline Image sisr_prox_ibp(const DegradationSpec& spec, const Image& y, const Image& z, const IbpOptions& opt = {}) {
    if (!(opt.step >= 0.0)) throw InvalidArgument("sisr_prox_ibp: step must be >= 0");
    if (opt.inner_iterations < 1) throw InvalidArgument("sisr_prox_ibp: need at least one inner iteration");
    const int s = spec.scale;
    if (z.channels() != y.channels() || z.height() != y.height() * s || z.width() != y.width() * s)
        throw InvalidArgument("sisr_prox_ibp: z must be the observation size times the scale");

    Image x = z;
    if (opt.step == 0.0) return x;
    if (spec.task == Task::sisr_bicubic) {
        for (int it = 0; it < opt.inner_iterations; ++it) {
            const Image residual = y - bicubic_resize(x, 1.0 / s);
            x += opt.step * bicubic_resize(residual, static_cast<double>(s));
        }
        return x;
    }
    if (spec.task != Task::sisr_classical && spec.task != Task::deblur)
        throw InvalidArgument("sisr_prox_ibp: task has no back-projection form");
    const Spectrum otf = psf2otf(spec.kernel, x.height(), x.width());
    for (int it = 0; it < opt.inner_iterations; ++it) {
        const Image residual = y - sfold_downsample(circular_convolve(x, spec.kernel), s);
        Spectrum r = fft2(zerofill_upsample(residual, s));
        const std::size_t n = r.plane_size();
        for (int c = 0; c < r.channels; ++c)
            for (std::size_t p = 0; p < n; ++p) r.data[c * n + p] *= std::conj(otf.data[p]);
        x += opt.step * ifft2_real(r);
    }
    return x;
}

/// Per-sample minimizer of |M (y - x)|^2 + alpha |x - z|^2 for a binary mask.
inline Image demosaic_prox(const Image& mask, const Image& y, const Image& z, double alpha) {
    detail::check_alpha(alpha);
    mask.require_same_shape(y, "demosaic_prox");
    mask.require_same_shape(z, "demosaic_prox");
    Image x = z;
    auto m = mask.data();
    auto yd = y.data();
    auto xd = x.data();
    for (std::size_t n = 0; n < xd.size(); ++n) {
        if (m[n] == 0.0) continue;
        xd[n] = (m[n] * yd[n] + alpha * xd[n]) / (m[n] + alpha);
    }
    return x;
}

inline Image demosaic_prox(const DataProxContext& ctx, const Image& z, double alpha) {
    return demosaic_prox(ctx.mask(), ctx.observation(), z, alpha);
}

} // namespace pnpir
