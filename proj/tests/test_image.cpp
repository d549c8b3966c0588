#include <gtest/gtest.h>

#include <string>

#include "irisvd/image.hpp"
#include "irisvd/rng.hpp"

using namespace irisvd;

namespace {

GrayImage random_image(SplitMix64& rng) {
  const int w = 1 + static_cast<int>(rng.below(40));
  const int h = 1 + static_cast<int>(rng.below(40));
  GrayImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<Intensity>(rng.below(256));
  return img;
}

PgmErrorKind parse_error_kind(std::string_view bytes) {
  try {
    read_pgm(bytes);
  } catch (const PgmParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no parse error";
  return PgmErrorKind::bad_magic;
}

}  // namespace

TEST(Pgm, ReadsAsciiLiteral) {
  const GrayImage img = read_pgm("P2 2 2 255 0 128 255 64");
  EXPECT_EQ(img.width, 2);
  EXPECT_EQ(img.height, 2);
  EXPECT_EQ(img.pixels, (std::vector<Intensity>{0, 128, 255, 64}));
}

TEST(Pgm, ReadsBinaryCasiaSizedImage) {
  std::string bytes = "P5\n320 280\n255\n";
  bytes.append(89600, '\x7f');
  const GrayImage img = read_pgm(bytes);
  EXPECT_EQ(img.width, 320);
  EXPECT_EQ(img.height, 280);
  EXPECT_EQ(img.pixels.size(), 89600u);
}

TEST(Pgm, HeaderCommentsAreSkipped) {
  const GrayImage img = read_pgm("P2\n# made by hand\n2 # width\n1\n255\n7 9\n");
  EXPECT_EQ(img.pixels, (std::vector<Intensity>{7, 9}));
}

TEST(Pgm, TruncatedBinaryPayload) {
  std::string bytes = "P5\n4 4\n255\n";
  bytes.append(10, '\0');
  try {
    read_pgm(bytes);
    FAIL() << "expected truncation error";
  } catch (const PgmParseError& e) {
    EXPECT_EQ(e.kind(), PgmErrorKind::truncated_data);
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
}

TEST(Pgm, DistinctErrorKinds) {
  EXPECT_EQ(parse_error_kind("P6 1 1 255 0"), PgmErrorKind::bad_magic);
  EXPECT_EQ(parse_error_kind("P2 1 x 255 0"), PgmErrorKind::malformed_header);
  EXPECT_EQ(parse_error_kind("P2 1 1 256 0"), PgmErrorKind::maxval_out_of_range);
  EXPECT_EQ(parse_error_kind("P2 2 1 255 0"), PgmErrorKind::truncated_data);
  EXPECT_EQ(parse_error_kind("P2 1 1 100 101"), PgmErrorKind::bad_pixel);
}

TEST(Pgm, ErrorOffsetPointsAtMaxval) {
  try {
    read_pgm("P5 1 1 300\n");
    FAIL();
  } catch (const PgmParseError& e) {
    EXPECT_EQ(e.offset(), 7u);
  }
}

TEST(Pgm, SmallMaxvalIsRescaled) {
  const GrayImage img = read_pgm("P2 3 1 15 0 15 7");
  EXPECT_EQ(img.pixels, (std::vector<Intensity>{0, 255, 119}));
}

TEST(Pgm, WritesMinimalBinaryImage) {
  const std::string bytes = write_pgm(GrayImage(1, 1, Intensity{0}));
  EXPECT_EQ(bytes, std::string("P5\n1 1\n255\n") + '\0');
}

TEST(Pgm, AsciiWriteReparses) {
  const GrayImage img(2, 2, std::vector<Intensity>{0, 128, 255, 64});
  const std::string text = write_pgm(img, true);
  EXPECT_EQ(text.substr(0, 2), "P2");
  EXPECT_EQ(read_pgm(text), img);
}

TEST(Pgm, AsciiLinesStayShort) {
  GrayImage img(100, 2, Intensity{255});
  const std::string text = write_pgm(img, true);
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    EXPECT_LE(end - start, 70u);
    start = end + 1;
  }
}

TEST(PgmProperty, RoundTripIsIdentity) {
  SplitMix64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const GrayImage img = random_image(rng);
    ASSERT_EQ(read_pgm(write_pgm(img, false)), img);
    ASSERT_EQ(read_pgm(write_pgm(img, true)), img);
  }
}

TEST(ContrastStretch, EndpointsAndMidpoint) {
  const GrayImage img(3, 1, std::vector<Intensity>{70, 200, 135});
  const GrayImage out = contrast_stretch(img, 70, 200);
  EXPECT_EQ(out.at(0, 0), 0);
  EXPECT_EQ(out.at(1, 0), 255);
  // (135 - 70) * 255 / 130 = 127.5, rounded half away from zero.
  EXPECT_EQ(out.at(2, 0), 128);
}

TEST(ContrastStretch, ClampsOutsideRange) {
  const GrayImage img(2, 1, std::vector<Intensity>{10, 250});
  const GrayImage out = contrast_stretch(img, 70, 200);
  EXPECT_EQ(out.at(0, 0), 0);
  EXPECT_EQ(out.at(1, 0), 255);
}

TEST(ContrastStretch, RejectsEmptyRange) {
  const GrayImage img(1, 1, Intensity{5});
  EXPECT_THROW(contrast_stretch(img, 100, 100), InvalidArgument);
  EXPECT_THROW(contrast_stretch(img, 120, 100), InvalidArgument);
}

TEST(ContrastStretchProperty, Monotone) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = static_cast<Intensity>(rng.below(255));
    const auto b = static_cast<Intensity>(a + 1 + rng.below(255 - a));
    for (int p = 0; p < 255; ++p)
      ASSERT_LE(stretch_value(static_cast<Intensity>(p), a, b), stretch_value(static_cast<Intensity>(p + 1), a, b));
  }
}

TEST(BlockDownsample, ConstantTile) {
  EXPECT_EQ(block_downsample(GrayImage(3, 3, Intensity{90}), 3).pixels, (std::vector<Intensity>{90}));
}

TEST(BlockDownsample, MeanOfRamp) {
  const GrayImage img(3, 3, std::vector<Intensity>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_EQ(block_downsample(img, 3).pixels, (std::vector<Intensity>{4}));
}

TEST(BlockDownsample, TemplateSize) {
  const GrayImage out = block_downsample(GrayImage(120, 120, Intensity{1}), 3);
  EXPECT_EQ(out.width, 40);
  EXPECT_EQ(out.height, 40);
}

TEST(BlockDownsample, DropsPartialTiles) {
  const GrayImage out = block_downsample(GrayImage(8, 7, Intensity{1}), 3);
  EXPECT_EQ(out.width, 2);
  EXPECT_EQ(out.height, 2);
}

TEST(BlockDownsample, RoundsHalfAwayFromZero) {
  // Tile mean 0.5 rounds to 1.
  EXPECT_EQ(block_downsample(GrayImage(2, 2, std::vector<Intensity>{0, 1, 0, 1}), 2).pixels,
            (std::vector<Intensity>{1}));
}

TEST(BlockDownsample, RejectsBadBlock) {
  EXPECT_THROW(block_downsample(GrayImage(3, 3), 0), InvalidArgument);
  EXPECT_THROW(block_downsample(GrayImage(2, 3), 3), InvalidArgument);
}

TEST(BlockDownsampleProperty, OutputWithinTileRange) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const GrayImage img = random_image(rng);
    const int block = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(img.width, img.height))));
    const GrayImage out = block_downsample(img, block);
    for (int oy = 0; oy < out.height; ++oy)
      for (int ox = 0; ox < out.width; ++ox) {
        int lo = 255, hi = 0;
        for (int dy = 0; dy < block; ++dy)
          for (int dx = 0; dx < block; ++dx) {
            lo = std::min<int>(lo, img.at(ox * block + dx, oy * block + dy));
            hi = std::max<int>(hi, img.at(ox * block + dx, oy * block + dy));
          }
        ASSERT_GE(out.at(ox, oy), lo);
        ASSERT_LE(out.at(ox, oy), hi);
      }
  }
}
