#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pnpir/errors.hpp"

namespace pnpir {

/// Small 2-D convolution kernel, row-major, summing to 1.
///
/// The kernel origin for convolution is tap (kh/2, kw/2) (integer division).
/// Weights are nonnegative except for kernels built with `signed_taps`, which
/// exist for the bicubic-equivalent kernel only.
class BlurKernel {
public:
    /// Validates nonnegativity and renormalizes when the sum is within 1e-3 of 1.
    /// Sums already within rounding of 1 are kept as is, so text round trips
    /// are exact.
    BlurKernel(int kh, int kw, std::vector<double> weights) : kh_(kh), kw_(kw), w_(std::move(weights)) {
        check_dims();
        for (double v : w_)
            if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("kernel weights must be finite and >= 0");
        const double sum = std::accumulate(w_.begin(), w_.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-3)
            throw InvalidArgument("kernel weights sum to " + std::to_string(sum) + ", expected 1");
        if (std::abs(sum - 1.0) > 1e-12)
            for (auto& v : w_) v /= sum;
    }

    /// Scales any nonnegative kernel with positive mass to unit sum.
    static BlurKernel normalized(int kh, int kw, std::vector<double> weights) {
        const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (!(sum > 0.0)) throw InvalidArgument("kernel must have positive mass");
        for (auto& v : weights) v /= sum;
        return BlurKernel(kh, kw, std::move(weights));
    }

    /// Kernel that may carry negative taps; still normalized to unit sum.
    static BlurKernel signed_taps(int kh, int kw, std::vector<double> weights) {
        BlurKernel k;
        k.kh_ = kh;
        k.kw_ = kw;
        k.w_ = std::move(weights);
        k.check_dims();
        const double sum = std::accumulate(k.w_.begin(), k.w_.end(), 0.0);
        if (!(std::abs(sum) > 0.0)) throw InvalidArgument("kernel must have nonzero sum");
        for (auto& v : k.w_) v /= sum;
        return k;
    }

    static BlurKernel delta() { return BlurKernel(1, 1, {1.0}); }

    int height() const noexcept { return kh_; }
    int width() const noexcept { return kw_; }
    int center_row() const noexcept { return kh_ / 2; }
    int center_col() const noexcept { return kw_ / 2; }
    double operator()(int i, int j) const noexcept { return w_[static_cast<std::size_t>(i) * kw_ + j]; }
    const std::vector<double>& weights() const noexcept { return w_; }

    /// Kernel rotated by 180 degrees about its array center.
    BlurKernel flipped() const {
        std::vector<double> r(w_.rbegin(), w_.rend());
        BlurKernel k = *this;
        k.w_ = std::move(r);
        return k;
    }

    bool operator==(const BlurKernel&) const = default;

private:
    BlurKernel() = default;

    void check_dims() const {
        if (kh_ < 1 || kw_ < 1) throw InvalidArgument("kernel dimensions must be >= 1");
        if (w_.size() != static_cast<std::size_t>(kh_) * kw_)
            throw InvalidArgument("kernel weight count does not match kh*kw");
    }

    int kh_ = 1;
    int kw_ = 1;
    std::vector<double> w_{1.0};
};

/// Anisotropic Gaussian sampled at integer offsets from the center tap.
/// `theta` rotates the sigma_x axis counter-clockwise from the column axis.
inline BlurKernel gaussian_kernel(double sigma_x, double sigma_y, double theta, int size) {
    if (size < 1 || size % 2 == 0) throw InvalidArgument("gaussian kernel size must be odd");
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw InvalidArgument("gaussian sigmas must be > 0");
    const double c = std::cos(theta), s = std::sin(theta);
    // inverse covariance of R diag(sx^2, sy^2) R^T
    const double ix = 1.0 / (sigma_x * sigma_x), iy = 1.0 / (sigma_y * sigma_y);
    const double a = c * c * ix + s * s * iy;
    const double b = c * s * (ix - iy);
    const double d = s * s * ix + c * c * iy;
    const int r = size / 2;
    std::vector<double> w(static_cast<std::size_t>(size) * size);
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            const double y = i - r, x = j - r;
            w[static_cast<std::size_t>(i) * size + j] = std::exp(-0.5 * (a * x * x + 2.0 * b * x * y + d * y * y));
        }
    }
    return BlurKernel::normalized(size, size, std::move(w));
}

// Kernel text format: first line "kh kw", then kh lines of kw decimal floats.

inline BlurKernel parse_kernel_text(const std::string& text) {
    std::istringstream in(text);
    int kh = 0, kw = 0;
    if (!(in >> kh >> kw) || kh < 1 || kw < 1) throw InvalidArgument("kernel text: bad header");
    std::vector<double> w(static_cast<std::size_t>(kh) * kw);
    for (auto& v : w)
        if (!(in >> v)) throw InvalidArgument("kernel text: expected " + std::to_string(kh * kw) + " weights");
    std::string extra;
    if (in >> extra) throw InvalidArgument("kernel text: trailing data");
    return BlurKernel(kh, kw, std::move(w));
}

inline std::string format_kernel_text(const BlurKernel& k) {
    std::ostringstream out;
    out << k.height() << ' ' << k.width() << '\n' << std::setprecision(17);
    for (int i = 0; i < k.height(); ++i) {
        for (int j = 0; j < k.width(); ++j) out << (j ? " " : "") << k(i, j);
        out << '\n';
    }
    return out.str();
}

inline BlurKernel load_kernel(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open kernel file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_kernel_text(ss.str());
}

inline void save_kernel(const std::filesystem::path& path, const BlurKernel& k) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write kernel file " + path.string());
    out << format_kernel_text(k);
}

/// FNV-1a 64 over the dimensions and the IEEE-754 bytes of the weights, as hex.
inline std::string kernel_hash(const BlurKernel& k) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::int32_t dims[2] = {k.height(), k.width()};
    mix(dims, sizeof(dims));
    mix(k.weights().data(), k.weights().size() * sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace pnpir
