#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "pnpir/errors.hpp"
#include "pnpir/image.hpp"
#include "pnpir/ppdn.hpp"

namespace pnpir {

struct TvOptions {
    double step = 0.25;
    double tolerance = 1e-6; // relative change of the dual field
    int max_iterations = 200;
    /// Regularize 3-channel images in an orthonormal opponent basis
    /// (luma, red-blue, green-magenta) instead of R, G, B.
    bool opponent = false;
};

namespace detail {

// Chambolle's dual projection for min_z 0.5*|z - x|^2 + weight*TV(z) on one
// plane, with forward differences and Neumann boundary.
inline void tv_prox_plane(std::span<const double> x, std::span<double> z, int h, int w, double weight,
                          const TvOptions& opt) {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> px(n, 0.0), py(n, 0.0), div(n, 0.0), u(n);
    auto at = [w](int i, int j) { return static_cast<std::size_t>(i) * w + j; };

    for (int it = 0; it < opt.max_iterations; ++it) {
        // div p
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const std::size_t k = at(i, j);
                double d = 0.0;
                d += (j < w - 1 ? px[k] : 0.0) - (j > 0 ? px[at(i, j - 1)] : 0.0);
                d += (i < h - 1 ? py[k] : 0.0) - (i > 0 ? py[at(i - 1, j)] : 0.0);
                div[k] = d;
            }
        for (std::size_t k = 0; k < n; ++k) u[k] = div[k] - x[k] / weight;

        double change = 0.0, norm = 0.0;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const std::size_t k = at(i, j);
                const double gx = j < w - 1 ? u[at(i, j + 1)] - u[k] : 0.0;
                const double gy = i < h - 1 ? u[at(i + 1, j)] - u[k] : 0.0;
                const double mag = std::sqrt(gx * gx + gy * gy);
                const double nx = (px[k] + opt.step * gx) / (1.0 + opt.step * mag);
                const double ny = (py[k] + opt.step * gy) / (1.0 + opt.step * mag);
                change += (nx - px[k]) * (nx - px[k]) + (ny - py[k]) * (ny - py[k]);
                norm += nx * nx + ny * ny;
                px[k] = nx;
                py[k] = ny;
            }
        if (norm > 0.0 && std::sqrt(change / norm) < opt.tolerance) break;
        if (norm == 0.0) break; // x is constant: p stays zero
    }
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const std::size_t k = at(i, j);
            double d = (j < w - 1 ? px[k] : 0.0) - (j > 0 ? px[at(i, j - 1)] : 0.0);
            d += (i < h - 1 ? py[k] : 0.0) - (i > 0 ? py[at(i - 1, j)] : 0.0);
            z[k] = x[k] - weight * d;
        }
}

// Rows form an orthonormal basis, so the inverse is the transpose.
inline constexpr std::array<std::array<double, 3>, 3> kOpponentBasis = {{
    {0.57735026918962573, 0.57735026918962573, 0.57735026918962573},
    {0.70710678118654757, 0.0, -0.70710678118654757},
    {0.40824829046386302, -0.81649658092772603, 0.40824829046386302},
}};

inline Image mix_channels(const Image& img, bool inverse) {
    Image out(3, img.height(), img.width());
    const auto& q = kOpponentBasis;
    for (int r = 0; r < 3; ++r) {
        auto dst = out.plane(r);
        for (int c = 0; c < 3; ++c) {
            const double m = inverse ? q[c][r] : q[r][c];
            auto src = img.plane(c);
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += m * src[k];
        }
    }
    return out;
}

} // namespace detail

/// Opponent-color transform and its inverse (orthonormal, 3 channels).
inline Image to_opponent(const Image& rgb) {
    if (rgb.channels() != 3) throw InvalidArgument("to_opponent: need 3 channels");
    return detail::mix_channels(rgb, false);
}

inline Image from_opponent(const Image& opp) {
    if (opp.channels() != 3) throw InvalidArgument("from_opponent: need 3 channels");
    return detail::mix_channels(opp, true);
}

/// Isotropic total-variation proximal map, applied channel by channel
/// (in the opponent basis when requested for 3-channel input). Large
/// multi-channel images solve their planes on separate threads.
inline Image tv_prox(const Image& img, double weight, const TvOptions& opt = {}) {
    if (!(weight >= 0.0)) throw InvalidArgument("tv_prox: weight must be >= 0");
    if (weight == 0.0) return img;
    const bool mixed = opt.opponent && img.channels() == 3;
    const Image in = mixed ? to_opponent(img) : img;
    Image out(in.channels(), in.height(), in.width());
    auto solve = [&](int c) {
        detail::tv_prox_plane(in.plane(c), out.plane(c), in.height(), in.width(), weight, opt);
    };
    if (in.channels() > 1 && static_cast<std::size_t>(in.height()) * in.width() >= 4096) {
        std::vector<std::thread> pool;
        for (int c = 1; c < in.channels(); ++c) pool.emplace_back(solve, c);
        solve(0);
        for (auto& t : pool) t.join();
    } else {
        for (int c = 0; c < in.channels(); ++c) solve(c);
    }
    return mixed ? from_opponent(out) : out;
}

namespace detail {

// Orthonormal DCT-II basis, row k = frequency.
inline std::vector<double> dct_matrix(int n) {
    std::vector<double> m(static_cast<std::size_t>(n) * n);
    for (int k = 0; k < n; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
        for (int t = 0; t < n; ++t)
            m[static_cast<std::size_t>(k) * n + t] = scale * std::cos(std::numbers::pi * (2 * t + 1) * k / (2.0 * n));
    }
    return m;
}

inline std::vector<int> patch_origins(int len, int patch, int stride) {
    std::vector<int> o;
    for (int p = 0; p + patch < len; p += stride) o.push_back(p);
    o.push_back(len - patch);
    return o;
}

} // namespace detail

/// Sliding-window DCT hard thresholding: 8x8 orthonormal DCT-II patches at
/// stride 4, AC coefficients below 3*sigma zeroed, overlapping estimates averaged.
inline Image dct_threshold_denoise(const Image& img, double sigma_norm) {
    if (!(sigma_norm >= 0.0)) throw InvalidArgument("dct_threshold_denoise: sigma must be >= 0");
    const int ph = std::min(8, img.height());
    const int pw = std::min(8, img.width());
    const auto ch = detail::dct_matrix(ph);
    const auto cw = detail::dct_matrix(pw);
    const auto rows = detail::patch_origins(img.height(), ph, 4);
    const auto cols = detail::patch_origins(img.width(), pw, 4);
    const double thr = 3.0 * sigma_norm;

    Image out(img.channels(), img.height(), img.width());
    std::vector<double> count(img.plane_size(), 0.0);
    std::vector<double> patch(static_cast<std::size_t>(ph) * pw), tmp(patch.size()), coef(patch.size());
    for (int c = 0; c < img.channels(); ++c) {
        std::fill(count.begin(), count.end(), 0.0);
        for (int r0 : rows)
            for (int c0 : cols) {
                for (int i = 0; i < ph; ++i)
                    for (int j = 0; j < pw; ++j) patch[i * pw + j] = img(c, r0 + i, c0 + j);
                // coef = Ch * patch * Cw^T
                for (int k = 0; k < ph; ++k)
                    for (int j = 0; j < pw; ++j) {
                        double s = 0.0;
                        for (int i = 0; i < ph; ++i) s += ch[k * ph + i] * patch[i * pw + j];
                        tmp[k * pw + j] = s;
                    }
                for (int k = 0; k < ph; ++k)
                    for (int l = 0; l < pw; ++l) {
                        double s = 0.0;
                        for (int j = 0; j < pw; ++j) s += tmp[k * pw + j] * cw[l * pw + j];
                        coef[k * pw + l] = (k == 0 && l == 0) || std::abs(s) >= thr ? s : 0.0;
                    }
                // patch = Ch^T * coef * Cw
                for (int i = 0; i < ph; ++i)
                    for (int l = 0; l < pw; ++l) {
                        double s = 0.0;
                        for (int k = 0; k < ph; ++k) s += ch[k * ph + i] * coef[k * pw + l];
                        tmp[i * pw + l] = s;
                    }
                for (int i = 0; i < ph; ++i)
                    for (int j = 0; j < pw; ++j) {
                        double s = 0.0;
                        for (int l = 0; l < pw; ++l) s += tmp[i * pw + l] * cw[l * pw + j];
                        out(c, r0 + i, c0 + j) += s;
                        count[static_cast<std::size_t>(r0 + i) * img.width() + c0 + j] += 1.0;
                    }
            }
        auto p = out.plane(c);
        for (std::size_t k = 0; k < p.size(); ++k) p[k] /= count[k];
    }
    return out;
}

/// 3x3 median per channel, edges replicated.
inline Image median3x3(const Image& img) {
    Image out(img.channels(), img.height(), img.width());
    std::array<double, 9> win{};
    for (int c = 0; c < img.channels(); ++c)
        for (int i = 0; i < img.height(); ++i)
            for (int j = 0; j < img.width(); ++j) {
                int n = 0;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const int ii = std::clamp(i + di, 0, img.height() - 1);
                        const int jj = std::clamp(j + dj, 0, img.width() - 1);
                        win[n++] = img(c, ii, jj);
                    }
                std::nth_element(win.begin(), win.begin() + 4, win.end());
                out(c, i, j) = win[4];
            }
    return out;
}

enum class DenoiserKind { identity, tv, dct, median, external };

/// Uniform `denoise(image, sigma)` over the built-in priors and an external
/// PPDN/1 process. Sigma is always given on the 0-255 scale.
///
/// Copies of an external handle share one child process; calls on it must be
/// serialized by the caller.
class DenoiserHandle {
public:
    static DenoiserHandle identity() { return DenoiserHandle(DenoiserKind::identity); }

    /// TV prox with weight = kappa * (sigma/255)^2.
    static DenoiserHandle tv(double kappa = 1.0, TvOptions opt = {}) {
        DenoiserHandle d(DenoiserKind::tv);
        d.kappa_ = kappa;
        d.tv_ = opt;
        return d;
    }

    /// TV prox in the opponent color basis; same weight rule as tv().
    static DenoiserHandle tv_opponent(double kappa = 1.0, TvOptions opt = {}) {
        opt.opponent = true;
        return tv(kappa, opt);
    }

    /// DCT thresholding at kappa * sigma/255.
    static DenoiserHandle dct(double kappa = 1.0) {
        DenoiserHandle d(DenoiserKind::dct);
        d.kappa_ = kappa;
        return d;
    }

    /// 3x3 median whenever sigma > 0.
    static DenoiserHandle median() { return DenoiserHandle(DenoiserKind::median); }

    static DenoiserHandle external(const std::string& command,
                                   std::chrono::milliseconds timeout = std::chrono::seconds(60)) {
        DenoiserHandle d(DenoiserKind::external);
        d.command_ = command;
        d.process_ = std::make_shared<ppdn::Process>(command, timeout);
        return d;
    }

    /// Parses "identity", "tv[:kappa]", "tv-opponent[:kappa]", "dct[:kappa]",
    /// "median" or "extern:<command line>".
    static DenoiserHandle from_name(const std::string& spec,
                                    std::chrono::milliseconds timeout = std::chrono::seconds(60)) {
        auto kappa_of = [&spec](std::size_t prefix) {
            if (spec.size() <= prefix) return 1.0;
            try {
                std::size_t used = 0;
                const double k = std::stod(spec.substr(prefix + 1), &used);
                if (used != spec.size() - prefix - 1 || !(k > 0.0)) throw InvalidArgument("");
                return k;
            } catch (const std::exception&) {
                throw InvalidArgument("bad denoiser strength in '" + spec + "'");
            }
        };
        if (spec == "identity") return identity();
        if (spec == "median") return median();
        if (spec == "tv" || spec.rfind("tv:", 0) == 0) return tv(kappa_of(2));
        if (spec == "tv-opponent" || spec.rfind("tv-opponent:", 0) == 0) return tv_opponent(kappa_of(11));
        if (spec == "dct" || spec.rfind("dct:", 0) == 0) return dct(kappa_of(3));
        if (spec.rfind("extern:", 0) == 0 && spec.size() > 7) return external(spec.substr(7), timeout);
        throw InvalidArgument("unknown denoiser '" + spec + "'");
    }

    DenoiserKind kind() const noexcept { return kind_; }
    double kappa() const noexcept { return kappa_; }

    std::string name() const {
        switch (kind_) {
        case DenoiserKind::identity: return "identity";
        case DenoiserKind::tv: return (tv_.opponent ? "tv-opponent:" : "tv:") + format_kappa();
        case DenoiserKind::dct: return "dct:" + format_kappa();
        case DenoiserKind::median: return "median";
        case DenoiserKind::external: return "extern:" + command_;
        }
        return "?";
    }

    bool deterministic() const noexcept { return kind_ != DenoiserKind::external; }

    Image denoise(const Image& img, double sigma255) const {
        if (!(sigma255 >= 0.0)) throw InvalidArgument("denoise: sigma must be >= 0");
        const double s = sigma255 / 255.0;
        switch (kind_) {
        case DenoiserKind::identity: return img;
        case DenoiserKind::tv: return tv_prox(img, kappa_ * s * s, tv_);
        case DenoiserKind::dct: return s == 0.0 ? img : dct_threshold_denoise(img, kappa_ * s);
        case DenoiserKind::median: return s == 0.0 ? img : median3x3(img);
        case DenoiserKind::external: return process_->denoise(img, s);
        }
        throw InvalidArgument("unknown denoiser kind");
    }

private:
    explicit DenoiserHandle(DenoiserKind k) : kind_(k) {}

    std::string format_kappa() const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", kappa_);
        return buf;
    }

    DenoiserKind kind_;
    double kappa_ = 1.0;
    TvOptions tv_{};
    std::string command_;
    std::shared_ptr<ppdn::Process> process_;
};

/// Free-function form of DenoiserHandle::denoise.
inline Image denoise(const DenoiserHandle& handle, const Image& img, double sigma255) {
    return handle.denoise(img, sigma255);
}

} // namespace pnpir
