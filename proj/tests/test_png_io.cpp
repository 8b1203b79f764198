#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace pnpir;
using testutil::fixture;

TEST(PngDecode, SinglePixelGray) {
    const Image black = read_png(fixture("gray_1x1_0.png"));
    const Image white = read_png(fixture("gray_1x1_255.png"));
    ASSERT_EQ(black.channels(), 1);
    EXPECT_EQ(black(0, 0, 0), 0.0);
    EXPECT_EQ(white(0, 0, 0), 1.0);
}

TEST(PngDecode, TinyRgbIsPlanar) {
    // bytes as written by the reference encoder, row-major RGB
    const int px[2][2][3] = {{{255, 0, 0}, {0, 255, 0}}, {{0, 0, 255}, {10, 20, 30}}};
    const Image img = read_png(fixture("tiny_rgb_2x2.png"));
    ASSERT_EQ(img.channels(), 3);
    ASSERT_EQ(img.height(), 2);
    ASSERT_EQ(img.width(), 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int c = 0; c < 3; ++c) EXPECT_EQ(img(c, i, j), px[i][j][c] / 255.0);
}

TEST(PngDecode, SixteenBitGray) {
    const Image img = read_png(fixture("gray16_2x2.png"));
    ASSERT_EQ(img.channels(), 1);
    EXPECT_EQ(img(0, 0, 0), 0.0);
    EXPECT_EQ(img(0, 0, 1), 1.0);
    EXPECT_EQ(img(0, 1, 0), 32768.0 / 65535.0);
    EXPECT_EQ(img(0, 1, 1), 1000.0 / 65535.0);
}

TEST(PngDecode, RejectsAlphaAndGarbage) {
    EXPECT_THROW(read_png(fixture("rgba_2x2.png")), IoError);
    const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
    EXPECT_THROW(decode_png(junk), IoError);
    auto bytes = read_file_bytes(fixture("tiny_rgb_2x2.png"));
    bytes.resize(bytes.size() / 2);
    EXPECT_THROW(decode_png(bytes), IoError);
    EXPECT_THROW(read_png(fixture("does_not_exist.png")), IoError);
}

TEST(PngEncode, QuantizationRule) {
    EXPECT_EQ(quantize8(0.5), 128);
    EXPECT_EQ(quantize8(-0.2), 0);
    EXPECT_EQ(quantize8(1.7), 255);
    EXPECT_EQ(quantize8(1.0 / 255.0), 1);
    EXPECT_EQ(quantize8(0.0), 0);
}

TEST(PngEncode, RoundTripIsExactOnQuantizedImages) {
    for (int ch : {1, 3}) {
        const Image q = quantized(testutil::random_image(ch, 9, 13, 11 + ch));
        const Image back = decode_png(encode_png(q));
        EXPECT_EQ(back, q);
    }
}

TEST(PngEncode, FileRoundTrip) {
    const auto dir = testutil::scratch_dir("png");
    const Image a = quantized(testutil::random_image(3, 4, 5, 3));
    write_png(dir / "a.png", a);
    EXPECT_EQ(read_png(dir / "a.png"), a);
    EXPECT_THROW(write_png(dir / "missing" / "a.png", a), IoError);
    std::filesystem::remove_all(dir);
}
