#pragma once

#include <array>

#include "pnpir/degrade.hpp"
#include "pnpir/errors.hpp"
#include "pnpir/image.hpp"

namespace pnpir {

namespace detail {

// 5x5 gradient-corrected filters of Malvar, He and Cutler, in units of 1/8.
using Filter5 = std::array<std::array<double, 5>, 5>;

inline constexpr Filter5 kGreenAtRedBlue = {{
    {0, 0, -1, 0, 0},
    {0, 0, 2, 0, 0},
    {-1, 2, 4, 2, -1},
    {0, 0, 2, 0, 0},
    {0, 0, -1, 0, 0},
}};

// Chroma at a green site whose row neighbours carry that chroma.
inline constexpr Filter5 kChromaAtGreenRow = {{
    {0, 0, 0.5, 0, 0},
    {0, -1, 0, -1, 0},
    {-1, 4, 5, 4, -1},
    {0, -1, 0, -1, 0},
    {0, 0, 0.5, 0, 0},
}};

inline constexpr Filter5 kChromaAtGreenColumn = {{
    {0, 0, -1, 0, 0},
    {0, -1, 4, -1, 0},
    {0.5, 0, 5, 0, 0.5},
    {0, -1, 4, -1, 0},
    {0, 0, -1, 0, 0},
}};

// Red at blue sites and blue at red sites.
inline constexpr Filter5 kChromaAtOppositeChroma = {{
    {0, 0, -1.5, 0, 0},
    {0, 2, 0, 2, 0},
    {-1.5, 0, 6, 0, -1.5},
    {0, 2, 0, 2, 0},
    {0, 0, -1.5, 0, 0},
}};

// Mirror without repeating the edge sample, which keeps the CFA parity.
inline int reflect101(int v, int n) {
    if (n == 1) return 0;
    while (v < 0 || v >= n) v = v < 0 ? -v : 2 * (n - 1) - v;
    return v;
}

inline double apply5(const Image& raw, int i, int j, const Filter5& f) {
    double acc = 0.0;
    for (int di = -2; di <= 2; ++di)
        for (int dj = -2; dj <= 2; ++dj) {
            const double w = f[di + 2][dj + 2];
            if (w != 0.0)
                acc += w * raw(0, reflect101(i + di, raw.height()), reflect101(j + dj, raw.width()));
        }
    return acc / 8.0;
}

inline bool is_bayer(const CfaPattern& p) { return p.channel_at(0, 0) != 1 && p.channel_at(1, 1) != 1; }
inline bool is_bayer_shifted(const CfaPattern& p) { return p.channel_at(0, 1) != 1 && p.channel_at(1, 0) != 1; }

// Normalized 3x3 box interpolation of each channel's observed samples.
inline Image normalized_box_demosaic(const Image& mosaiced, const Image& mask) {
    Image out(3, mosaiced.height(), mosaiced.width());
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < out.height(); ++i)
            for (int j = 0; j < out.width(); ++j) {
                if (mask(c, i, j) != 0.0) {
                    out(c, i, j) = mosaiced(c, i, j);
                    continue;
                }
                double num = 0.0, den = 0.0;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const int ii = i + di, jj = j + dj;
                        if (ii < 0 || jj < 0 || ii >= out.height() || jj >= out.width()) continue;
                        num += mask(c, ii, jj) * mosaiced(c, ii, jj);
                        den += mask(c, ii, jj);
                    }
                out(c, i, j) = den > 0.0 ? num / den : 0.0;
            }
    return out;
}

} // namespace detail

/// Gradient-corrected linear demosaicing (Malvar-He-Cutler) of a 3-channel
/// masked mosaic. Patterns whose green samples are not on a diagonal fall
/// back to normalized 3x3 interpolation.
inline Image malvar_demosaic(const Image& mosaiced, const CfaPattern& pattern) {
    if (mosaiced.channels() != 3) throw InvalidArgument("malvar_demosaic: input must have 3 channels");
    const int h = mosaiced.height(), w = mosaiced.width();
    if (!detail::is_bayer(pattern) && !detail::is_bayer_shifted(pattern))
        return detail::normalized_box_demosaic(mosaiced, cfa_mask(pattern, h, w));

    Image raw(1, h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) raw(0, i, j) = mosaiced(pattern.channel_at(i, j), i, j);

    Image out(3, h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const int site = pattern.channel_at(i, j);
            out(site, i, j) = raw(0, i, j);
            if (site != 1) {
                out(1, i, j) = detail::apply5(raw, i, j, detail::kGreenAtRedBlue);
                out(2 - site, i, j) = detail::apply5(raw, i, j, detail::kChromaAtOppositeChroma);
            } else {
                const int row_chroma = pattern.channel_at(i, j + 1);
                out(row_chroma, i, j) = detail::apply5(raw, i, j, detail::kChromaAtGreenRow);
                out(2 - row_chroma, i, j) = detail::apply5(raw, i, j, detail::kChromaAtGreenColumn);
            }
        }
    return out;
}

} // namespace pnpir
