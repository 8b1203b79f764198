#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace pnpir;
using testutil::random_image;

namespace {

Spectrum random_spectrum(int c, int h, int w, std::uint64_t seed) {
    Xoshiro256StarStar rng(seed);
    Spectrum s(c, h, w);
    for (auto& v : s.data) v = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
    return s;
}

} // namespace

TEST(Fft, RoundTrip) {
    const Image x = random_image(3, 7, 10, 1);
    const Image back = ifft2_real(fft2(x));
    EXPECT_LE(max_abs_diff(back, x), 1e-12 * std::sqrt(squared_norm(x)));
}

TEST(Fft, UnnormalizedForward) {
    const Image x(1, 4, 4, 0.25);
    const Spectrum s = fft2(x);
    EXPECT_NEAR(s.at(0, 0, 0).real(), 4.0, 1e-14);
    EXPECT_NEAR(std::abs(s.at(0, 1, 2)), 0.0, 1e-14);
}

TEST(Otf, DeltaIsAllOnes) {
    const Spectrum o = psf2otf(BlurKernel::delta(), 5, 6);
    for (const auto& v : o.data) EXPECT_NEAR(std::abs(v - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Otf, FrozenEntries) {
    // numpy: pad to 4x4, roll center to origin, fft2
    const BlurKernel k = BlurKernel::normalized(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Spectrum o = psf2otf(k, 4, 4);
    EXPECT_NEAR(o.at(0, 0, 1).real(), 0.33333333333333337, 1e-14);
    EXPECT_NEAR(o.at(0, 0, 1).imag(), -0.13333333333333333, 1e-14);
    EXPECT_NEAR(o.at(0, 1, 2).real(), -0.1111111111111111, 1e-14);
    EXPECT_NEAR(o.at(0, 1, 2).imag(), 0.13333333333333333, 1e-14);
    EXPECT_NEAR(o.at(0, 3, 3).real(), 0.11111111111111109, 1e-14);
    EXPECT_NEAR(o.at(0, 3, 3).imag(), 0.17777777777777776, 1e-14);
}

TEST(Otf, DcIsOneForNormalizedKernels) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Spectrum o = psf2otf(testutil::random_kernel(5, 3, seed), 9, 8);
        EXPECT_NEAR(o.at(0, 0, 0).real(), 1.0, 1e-14);
        EXPECT_NEAR(o.at(0, 0, 0).imag(), 0.0, 1e-14);
    }
    EXPECT_THROW(psf2otf(testutil::random_kernel(5, 5, 1), 4, 8), InvalidArgument);
}

TEST(Convolve, MatchesBruteForce) {
    const Image x8 = random_image(1, 8, 8, 2);
    const BlurKernel k3 = testutil::random_kernel(3, 3, 3);
    EXPECT_LE(max_abs_diff(circular_convolve(x8, k3), testutil::brute_convolve(x8, k3)), 1e-12);
    const Image x5 = random_image(3, 5, 5, 4);
    EXPECT_LE(max_abs_diff(circular_convolve(x5, k3), testutil::brute_convolve(x5, k3)), 1e-12);
    // even-sized kernel: origin at (kh/2, kw/2)
    const BlurKernel k4 = testutil::random_kernel(4, 2, 5);
    EXPECT_LE(max_abs_diff(circular_convolve(x8, k4), testutil::brute_convolve(x8, k4)), 1e-12);
}

TEST(Convolve, DeltaAndConstant) {
    const Image x = random_image(3, 6, 7, 6);
    EXPECT_LE(max_abs_diff(circular_convolve(x, BlurKernel::delta()), x), 1e-14);
    const Image c(1, 6, 7, 0.37);
    EXPECT_LE(max_abs_diff(circular_convolve(c, testutil::random_kernel(5, 5, 7)), c), 1e-14);
}

TEST(BlockSpectrum, DownsampleSingleBlock) {
    Spectrum s(1, 2, 2);
    s.at(0, 0, 0) = {1, 2};
    s.at(0, 0, 1) = {3, -1};
    s.at(0, 1, 0) = {-2, 0};
    s.at(0, 1, 1) = {6, 3};
    const Spectrum d = block_downsample_spectrum(s, 2);
    ASSERT_EQ(d.height, 1);
    EXPECT_NEAR(std::abs(d.at(0, 0, 0) - Complex(2.0, 1.0)), 0.0, 1e-15);
}

TEST(BlockSpectrum, DownsampleMatchesGather) {
    const Spectrum s = random_spectrum(2, 4, 6, 8);
    EXPECT_EQ(block_downsample_spectrum(s, 1).data, s.data);
    const Spectrum d = block_downsample_spectrum(s, 2);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j) {
                const Complex want = (s.at(c, i, j) + s.at(c, i + 2, j) + s.at(c, i, j + 3) + s.at(c, i + 2, j + 3)) / 4.0;
                EXPECT_NEAR(std::abs(d.at(c, i, j) - want), 0.0, 1e-15);
            }
    EXPECT_THROW(block_downsample_spectrum(s, 4), InvalidArgument);
}

TEST(BlockSpectrum, MultiplyTiles) {
    const Spectrum a = random_spectrum(1, 4, 4, 9);
    const Spectrum b = random_spectrum(1, 2, 2, 10);
    const Spectrum m = block_multiply_spectrum(a, b, 2);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            EXPECT_NEAR(std::abs(m.at(0, i, j) - a.at(0, i, j) * b.at(0, i % 2, j % 2)), 0.0, 1e-15);

    Spectrum ones(1, 2, 2);
    for (auto& v : ones.data) v = 1.0;
    EXPECT_EQ(block_multiply_spectrum(a, ones, 2).data, a.data);

    const Spectrum a1 = random_spectrum(1, 3, 3, 11);
    const Spectrum b1 = random_spectrum(1, 3, 3, 12);
    const Spectrum p = block_multiply_spectrum(a1, b1, 1);
    for (std::size_t n = 0; n < p.data.size(); ++n) EXPECT_EQ(p.data[n], a1.data[n] * b1.data[n]);
}

TEST(BlockSpectrum, MultiplyBroadcastsChannels) {
    const Spectrum a = random_spectrum(3, 4, 4, 13);
    const Spectrum b = random_spectrum(1, 2, 2, 14);
    const Spectrum m = block_multiply_spectrum(a, b, 2);
    ASSERT_EQ(m.channels, 3);
    EXPECT_EQ(m.at(2, 3, 1), a.at(2, 3, 1) * b.at(0, 1, 1));
    EXPECT_THROW(block_multiply_spectrum(a, random_spectrum(2, 2, 2, 1), 2), InvalidArgument);
}
