#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pnpir/errors.hpp"

namespace pnpir {

/// Planar, channel-major image with double samples nominally in [0,1].
///
/// Samples outside [0,1] are legal; clamping only happens at 8-bit export.
/// Shape is fixed at construction: 1 or 3 channels, height and width >= 1.
class Image {
public:
    Image(int channels, int height, int width, double fill = 0.0)
        : channels_(channels), height_(height), width_(width) {
        check_shape();
        data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
    }

    Image(int channels, int height, int width, std::vector<double> data)
        : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
        check_shape();
        if (data_.size() != static_cast<std::size_t>(channels) * height * width)
            throw InvalidArgument("image data length does not match channels*height*width");
    }

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(int c, int i, int j) noexcept { return data_[index(c, i, j)]; }
    double operator()(int c, int i, int j) const noexcept { return data_[index(c, i, j)]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    std::span<double> plane(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const double> plane(int c) const noexcept {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    /// Copy of one channel as a single-channel image.
    Image channel(int c) const {
        auto p = plane(c);
        return Image(1, height_, width_, std::vector<double>(p.begin(), p.end()));
    }

    void set_channel(int c, const Image& src) {
        if (src.channels() != 1 || src.height() != height_ || src.width() != width_)
            throw InvalidArgument("set_channel: shape mismatch");
        std::copy(src.data().begin(), src.data().end(), plane(c).begin());
    }

    bool same_shape(const Image& o) const noexcept {
        return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    Image& operator+=(const Image& o) {
        require_same_shape(o, "operator+=");
        for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += o.data_[n];
        return *this;
    }
    Image& operator-=(const Image& o) {
        require_same_shape(o, "operator-=");
        for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= o.data_[n];
        return *this;
    }
    Image& operator*=(double s) noexcept {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Image operator+(Image a, const Image& b) { return a += b; }
    friend Image operator-(Image a, const Image& b) { return a -= b; }
    friend Image operator*(Image a, double s) { return a *= s; }
    friend Image operator*(double s, Image a) { return a *= s; }

    friend bool operator==(const Image& a, const Image& b) noexcept {
        return a.same_shape(b) && a.data_ == b.data_;
    }

    void require_same_shape(const Image& o, const char* where) const {
        if (!same_shape(o)) throw InvalidArgument(std::string(where) + ": image shape mismatch");
    }

private:
    std::size_t index(int c, int i, int j) const noexcept {
        return (static_cast<std::size_t>(c) * height_ + i) * width_ + j;
    }

    void check_shape() const {
        if (channels_ != 1 && channels_ != 3) throw InvalidArgument("image must have 1 or 3 channels");
        if (height_ < 1 || width_ < 1) throw InvalidArgument("image height and width must be >= 1");
    }

    int channels_;
    int height_;
    int width_;
    std::vector<double> data_;
};

inline double dot(const Image& a, const Image& b) {
    a.require_same_shape(b, "dot");
    double s = 0.0;
    auto x = a.data();
    auto y = b.data();
    for (std::size_t n = 0; n < x.size(); ++n) s += x[n] * y[n];
    return s;
}

inline double squared_norm(const Image& a) { return dot(a, a); }

inline double max_abs_diff(const Image& a, const Image& b) {
    a.require_same_shape(b, "max_abs_diff");
    double m = 0.0;
    auto x = a.data();
    auto y = b.data();
    for (std::size_t n = 0; n < x.size(); ++n) m = std::max(m, std::abs(x[n] - y[n]));
    return m;
}

/// Element of the dihedral group D4 acting on images.
///
/// Index r + 4*f encodes "rotate counter-clockwise by r*90 degrees, then
/// mirror left-right if f". Index order is identity, rot90, rot180, rot270,
/// flip, flip*rot90, flip*rot180, flip*rot270.
class Dihedral8 {
public:
    constexpr Dihedral8() = default;
    constexpr explicit Dihedral8(int index) : index_(index) {
        if (index < 0 || index >= 8) throw InvalidArgument("Dihedral8 index out of range");
    }
    static constexpr Dihedral8 from_parts(int quarter_turns, bool flip) {
        return Dihedral8(((quarter_turns % 4) + 4) % 4 + (flip ? 4 : 0));
    }
    static constexpr Dihedral8 identity() { return Dihedral8(0); }

    constexpr int index() const noexcept { return index_; }
    constexpr int quarter_turns() const noexcept { return index_ % 4; }
    constexpr bool flips() const noexcept { return index_ >= 4; }

    /// this * other: apply `other` first, then `this`.
    constexpr Dihedral8 compose(Dihedral8 other) const {
        // F^fa R^ra F^fb R^rb = F^(fa+fb) R^(ra*(-1)^fb + rb)
        int r = other.flips() ? (other.quarter_turns() - quarter_turns())
                              : (other.quarter_turns() + quarter_turns());
        return from_parts(r, flips() != other.flips());
    }

    constexpr Dihedral8 inverse() const {
        return flips() ? *this : from_parts(-quarter_turns(), false);
    }

    friend constexpr bool operator==(Dihedral8, Dihedral8) = default;

private:
    int index_ = 0;
};

inline Image apply_dihedral(const Image& img, Dihedral8 t) {
    const int turns = t.quarter_turns();
    const int h = img.height();
    const int w = img.width();
    const bool swap = turns % 2 == 1;
    const int oh = swap ? w : h;
    const int ow = swap ? h : w;
    Image out(img.channels(), oh, ow);
    for (int c = 0; c < img.channels(); ++c) {
        for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) {
                // mirror is applied last, so undo it first when pulling
                const int jj = t.flips() ? ow - 1 - j : j;
                int si = i, sj = jj;
                switch (turns) {
                case 1: si = jj; sj = w - 1 - i; break;
                case 2: si = h - 1 - i; sj = w - 1 - jj; break;
                case 3: si = h - 1 - jj; sj = i; break;
                default: break;
                }
                out(c, i, j) = img(c, si, sj);
            }
        }
    }
    return out;
}

/// Peak signal-to-noise ratio for unit peak, pooling the MSE over all
/// channels and excluding `border` pixels on each side. Identical inputs give
/// +infinity.
inline double psnr(const Image& a, const Image& b, int border = 0) {
    a.require_same_shape(b, "psnr");
    if (border < 0 || 2 * border >= std::min(a.height(), a.width()))
        throw InvalidArgument("psnr: border too large for image");
    double sse = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < a.channels(); ++c)
        for (int i = border; i < a.height() - border; ++i)
            for (int j = border; j < a.width() - border; ++j) {
                const double d = a(c, i, j) - b(c, i, j);
                sse += d * d;
                ++count;
            }
    const double mse = sse / static_cast<double>(count);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace pnpir
