#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace pnpir;
using testutil::random_image;

TEST(Rng, FrozenXoshiroOutputs) {
    // independent Python implementation, seed 42
    Xoshiro256StarStar rng(42);
    EXPECT_EQ(rng.next(), 0x15780b2e0c2ec716ULL);
    EXPECT_EQ(rng.next(), 0x6104d9866d113a7eULL);
    EXPECT_EQ(rng.next(), 0xae17533239e499a1ULL);
}

TEST(Rng, FrozenBoxMuller) {
    GaussianSampler g(7);
    EXPECT_NEAR(g(), -0.15157274547711355, 1e-15);
    EXPECT_NEAR(g(), 0.82989708796925687, 1e-15);
}

TEST(Sfold, SelectsUpperLeft) {
    const Image a(1, 2, 2, std::vector<double>{0.1, 0.2, 0.3, 0.4});
    const Image d = sfold_downsample(a, 2);
    ASSERT_EQ(d.height(), 1);
    EXPECT_EQ(d(0, 0, 0), 0.1);
    const Image r = random_image(3, 4, 6, 1);
    EXPECT_EQ(sfold_downsample(r, 1), r);
}

TEST(Sfold, RampIndexFormula) {
    Image ramp(1, 6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) ramp(0, i, j) = 6 * i + j;
    const Image d = sfold_downsample(ramp, 3);
    ASSERT_EQ(d.height(), 2);
    ASSERT_EQ(d.width(), 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_EQ(d(0, i, j), 18 * i + 3 * j);
}

TEST(Zerofill, PlacesSamples) {
    const Image u = zerofill_upsample(Image(1, 1, 1, 0.7), 2);
    EXPECT_EQ(u, Image(1, 2, 2, std::vector<double>{0.7, 0, 0, 0}));
    const Image r = random_image(1, 3, 2, 2);
    EXPECT_EQ(zerofill_upsample(r, 1), r);
}

TEST(Zerofill, AdjointOfSfold) {
    for (int s : {2, 3, 4}) {
        const Image x = random_image(3, 4 * s, 3 * s, 10 + s);
        const Image y = random_image(3, 4, 3, 20 + s);
        EXPECT_NEAR(dot(sfold_downsample(x, s), y), dot(x, zerofill_upsample(y, s)), 1e-12) << s;
    }
}

TEST(Bicubic, IdentityAndConstants) {
    const Image r = random_image(3, 7, 9, 3);
    EXPECT_LE(max_abs_diff(bicubic_resize(r, 1.0), r), 1e-12);
    const Image c(1, 12, 10, 0.42);
    for (double s : {0.5, 1.0 / 3.0, 2.0, 3.0}) {
        const Image out = bicubic_resize(c, s);
        for (double v : out.data()) EXPECT_NEAR(v, 0.42, 1e-12) << s;
    }
    EXPECT_THROW(bicubic_resize(c, 0.0), InvalidArgument);
    EXPECT_THROW(bicubic_resize(Image(1, 2, 2), 0.1), InvalidArgument);
}

TEST(Bicubic, RampHalfFrozen) {
    // direct kernel-sum evaluation (numpy), antialiased kernel, clamped taps
    const double want[4][4] = {
        {0.07254464285714285, 0.10398065476190477, 0.1360987103174603, 0.16753472222222218},
        {0.32403273809523814, 0.35546875, 0.3875868055555555, 0.4190228174603174},
        {0.5809771825396824, 0.6124131944444445, 0.64453125, 0.6759672619047619},
        {0.8324652777777778, 0.8639012896825397, 0.8960193452380953, 0.927455357142857},
    };
    Image ramp(1, 8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) ramp(0, i, j) = (8 * i + j) / 63.0;
    const Image d = bicubic_resize(ramp, 0.5);
    ASSERT_EQ(d.height(), 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_NEAR(d(0, i, j), want[i][j], 1e-14);
}

TEST(Bicubic, UpscaleReproducesInteriorRampAndPartition) {
    // cubic convolution reproduces linear functions away from the edges
    Image ramp(1, 10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) ramp(0, i, j) = 0.03 * i + 0.05 * j;
    const Image u = bicubic_resize(ramp, 2.0);
    for (int i = 6; i < 14; ++i)
        for (int j = 6; j < 14; ++j)
            EXPECT_NEAR(u(0, i, j), 0.03 * ((i + 0.5) / 2 - 0.5) + 0.05 * ((j + 0.5) / 2 - 0.5), 1e-12);
}

TEST(Bicubic, EquivalentKernelMatchesInterior) {
    for (int s : {2, 3, 4}) {
        const BlurKernel k = bicubic_equivalent_kernel(s);
        double sum = 0.0;
        for (double w : k.weights()) sum += w;
        EXPECT_NEAR(sum, 1.0, 1e-12);
        const int n = 12 * s;
        const Image x = random_image(1, n, n, 30 + s);
        const Image a = bicubic_resize(x, 1.0 / s);
        const Image b = sfold_downsample(circular_convolve(x, k), s);
        const int margin = 3;
        for (int i = margin; i < 12 - margin; ++i)
            for (int j = margin; j < 12 - margin; ++j) EXPECT_NEAR(a(0, i, j), b(0, i, j), 1e-12) << s;
    }
}

TEST(Cfa, PatternAndMask) {
    const CfaPattern p("RGGB");
    EXPECT_EQ(p.channel_at(0, 0), 0);
    EXPECT_EQ(p.channel_at(0, 1), 1);
    EXPECT_EQ(p.channel_at(1, 1), 2);
    const Image m = cfa_mask(p, 6, 8);
    EXPECT_EQ(m(0, 0, 0), 1.0);
    EXPECT_EQ(m(1, 0, 0), 0.0);
    EXPECT_EQ(m(1, 0, 1), 1.0);
    double dens[3] = {0, 0, 0};
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 8; ++j) dens[c] += m(c, i, j);
    EXPECT_EQ(dens[0], 12);
    EXPECT_EQ(dens[1], 24);
    EXPECT_EQ(dens[2], 12);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 8; ++j) EXPECT_EQ(m(0, i, j) + m(1, i, j) + m(2, i, j), 1.0);
    EXPECT_THROW(CfaPattern("RGBB"), InvalidArgument);
    EXPECT_THROW(CfaPattern("RGG"), InvalidArgument);
    EXPECT_THROW(CfaPattern("RGGX"), InvalidArgument);
}

TEST(Cfa, MosaicIdempotentAndComplementary) {
    for (const char* name : {"RGGB", "BGGR", "GRBG", "GBRG"}) {
        const CfaPattern p(name);
        const Image x = random_image(3, 6, 6, 5);
        const Image m = cfa_mask(p, 6, 6);
        const Image y = mosaic(x, p);
        EXPECT_EQ(mosaic(y, p), y);
        EXPECT_EQ(mosaic(Image(3, 6, 6, 1.0), p), m);
        Image rest = x;
        for (std::size_t n = 0; n < rest.size(); ++n) rest.data()[n] *= 1.0 - m.data()[n];
        EXPECT_LE(max_abs_diff(y + rest, x), 0.0);
    }
    EXPECT_THROW(mosaic(Image(1, 4, 4), CfaPattern()), InvalidArgument);
}

TEST(Awgn, ZeroSigmaAndDeterminism) {
    const Image x = random_image(1, 16, 16, 6);
    EXPECT_EQ(add_awgn(x, 0.0, 9), x);
    EXPECT_EQ(add_awgn(x, 10.0, 9), add_awgn(x, 10.0, 9));
    EXPECT_NE(add_awgn(x, 10.0, 9), add_awgn(x, 10.0, 10));
    EXPECT_THROW(add_awgn(x, -1.0, 9), InvalidArgument);
}

TEST(Awgn, SampleMoments) {
    const Image zero(1, 256, 256);
    const Image n = add_awgn(zero, 25.5, 1234);
    double mean = 0.0;
    for (double v : n.data()) mean += v;
    mean /= n.size();
    double var = 0.0;
    for (double v : n.data()) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n.size());
    EXPECT_LT(std::abs(mean), 3.0 * 0.1 / 256.0);
    EXPECT_LT(std::abs(sd - 0.1), 0.01 * 0.1);
}

TEST(Degradation, Compositions) {
    const Image x = random_image(1, 8, 8, 7);
    EXPECT_LE(max_abs_diff(apply_degradation(x, DegradationSpec::deblur(BlurKernel::delta(), 0), 1), x), 1e-14);

    const Image x4 = random_image(1, 4, 4, 8);
    EXPECT_LE(max_abs_diff(apply_degradation(x4, DegradationSpec::classical_sr(2, BlurKernel::delta(), 0), 1),
                           sfold_downsample(x4, 2)),
              1e-14);

    const BlurKernel k = testutil::random_kernel(3, 3, 4);
    const auto spec = DegradationSpec::classical_sr(2, k, 5.1);
    const Image manual = add_awgn(sfold_downsample(testutil::brute_convolve(x, k), 2), 5.1, 77);
    EXPECT_LE(max_abs_diff(apply_degradation(x, spec, 77), manual), 1e-12);

    const Image c = random_image(3, 8, 8, 9);
    const auto dm = DegradationSpec::demosaic(CfaPattern("GRBG"), 2.55);
    const Image y = apply_degradation(c, dm, 3);
    const Image m = cfa_mask(dm.cfa, 8, 8);
    for (std::size_t n = 0; n < y.size(); ++n) {
        if (m.data()[n] == 0.0) {
            EXPECT_EQ(y.data()[n], 0.0);
        }
    }
    EXPECT_EQ(apply_degradation(x, DegradationSpec::deblur(k, 0), 1), apply_degradation(x, DegradationSpec::deblur(k, 0), 2));
}

TEST(Degradation, BicubicShape) {
    const Image x = random_image(3, 12, 9, 10);
    const Image y = apply_degradation(x, DegradationSpec::bicubic_sr(3, 0), 0);
    EXPECT_EQ(y.height(), 4);
    EXPECT_EQ(y.width(), 3);
}
