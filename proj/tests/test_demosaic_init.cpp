#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace pnpir;

namespace {

const int kBytes[3][6][6] = {
    {{217, 163, 130, 69, 78, 10},
     {19, 4, 44, 208, 166, 233},
     {128, 155, 248, 186, 161, 139},
     {143, 239, 71, 208, 171, 0},
     {100, 219, 141, 8, 195, 186},
     {216, 44, 22, 220, 5, 138}},
    {{20, 76, 123, 108, 103, 7},
     {1, 31, 2, 171, 134, 165},
     {65, 157, 195, 98, 117, 255},
     {206, 251, 97, 175, 243, 166},
     {215, 176, 180, 99, 224, 34},
     {148, 184, 216, 134, 96, 79}},
    {{108, 124, 184, 227, 18, 239},
     {136, 91, 172, 146, 65, 82},
     {184, 152, 129, 86, 194, 100},
     {84, 227, 67, 58, 182, 159},
     {12, 21, 96, 213, 102, 201},
     {81, 61, 202, 224, 20, 14}},
};

Image oracle_input() {
    Image x(3, 6, 6);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) x(c, i, j) = kBytes[c][i][j] / 255.0;
    return x;
}

} // namespace

TEST(Malvar, FrozenRggbOracle) {
    // independent numpy implementation with reflect-101 padding
    const Image out = malvar_demosaic(mosaic(oracle_input(), CfaPattern("RGGB")), CfaPattern("RGGB"));
    const double r0[6] = {0.8509803921568627, 0.8504901960784313, 0.5098039215686274,
                          0.5465686274509804, 0.3058823529411765, 0.07941176470588235};
    const double r1[6] = {0.35, 0.5683823529411764, 0.5154411764705882,
                          0.7571078431372549, 0.41617647058823526, 0.3178921568627451};
    const double g0[6] = {0.3235294117647059, 0.2980392156862745, 0.05147058823529414,
                          0.4235294117647059, 0.26862745098039215, 0.02745098039215686};
    const double b0[6] = {0.615686274509804, 0.4313725490196079, 0.2654411764705882,
                          0.6281862745098039, 0.2867647058823529, -0.12107843137254899};
    for (int j = 0; j < 6; ++j) {
        EXPECT_NEAR(out(0, 0, j), r0[j], 1e-14) << j;
        EXPECT_NEAR(out(0, 1, j), r1[j], 1e-14) << j;
        EXPECT_NEAR(out(1, 0, j), g0[j], 1e-14) << j;
        EXPECT_NEAR(out(2, 0, j), b0[j], 1e-14) << j;
    }
    EXPECT_NEAR(out(1, 5, 5), -0.09313725490196079, 1e-14);
    EXPECT_NEAR(out(2, 3, 0), 1.010049019607843, 1e-14);
    EXPECT_NEAR(out(2, 1, 2), 0.2125, 1e-14);
    EXPECT_NEAR(out(0, 3, 4), 1.0259803921568627, 1e-14);
}

TEST(Malvar, KeepsObservedSamples) {
    const Image x = testutil::random_image(3, 8, 10, 1);
    for (const char* name : {"RGGB", "BGGR", "GRBG", "GBRG"}) {
        const CfaPattern p(name);
        const Image y = mosaic(x, p);
        const Image out = malvar_demosaic(y, p);
        const Image m = cfa_mask(p, 8, 10);
        for (std::size_t n = 0; n < out.size(); ++n) {
            if (m.data()[n] == 1.0) {
                EXPECT_EQ(out.data()[n], y.data()[n]) << name;
            }
        }
    }
}

TEST(Malvar, ConstantGrayPreserved) {
    for (const char* name : {"RGGB", "BGGR", "GRBG", "GBRG"}) {
        const CfaPattern p(name);
        const Image out = malvar_demosaic(mosaic(Image(3, 7, 9, 0.4), p), p);
        for (double v : out.data()) EXPECT_NEAR(v, 0.4, 1e-15) << name;
    }
    EXPECT_THROW(malvar_demosaic(Image(1, 4, 4), CfaPattern()), InvalidArgument);
}

TEST(Malvar, NonBayerFallsBack) {
    const CfaPattern p("GGRB");
    const Image c(3, 6, 6, 0.25);
    const Image out = malvar_demosaic(mosaic(c, p), p);
    for (double v : out.data()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(Initialize, PerTask) {
    const Image y = testutil::random_image(3, 6, 6, 2);
    EXPECT_EQ(initialize(DegradationSpec::deblur(BlurKernel::delta(), 0), y), y);
    const Image b = initialize(DegradationSpec::bicubic_sr(2, 0), y);
    EXPECT_EQ(b, bicubic_resize(y, 2.0));
    const Image c = initialize(DegradationSpec::classical_sr(3, BlurKernel::delta(), 0), y);
    EXPECT_EQ(c.height(), 18);
    EXPECT_EQ(c.width(), 18);
    // a constant stays constant under the shifted resampling
    const Image k = initialize(DegradationSpec::classical_sr(2, BlurKernel::delta(), 0), Image(1, 5, 5, 0.7));
    for (double v : k.data()) EXPECT_NEAR(v, 0.7, 1e-12);
    const CfaPattern p("RGGB");
    EXPECT_EQ(initialize(DegradationSpec::demosaic(p), mosaic(y, p)), malvar_demosaic(mosaic(y, p), p));
}
