#include <gtest/gtest.h>
#include <png.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "irsr/model_runner.hpp"
#include "irsr/png_io.hpp"
#include "oracles/oracles.hpp"

namespace irsr {
namespace {

namespace fs = std::filesystem;

// Writes a PNG with an arbitrary layout straight through libpng so the
// loader's rejection paths can be exercised.
void write_raw_png(const fs::path& path, int w, int h, int color_type, int bit_depth,
                   int interlace = PNG_INTERLACE_NONE) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  ASSERT_NE(fp, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, bit_depth, color_type, interlace, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_color palette[2] = {{0, 0, 0}, {255, 255, 255}};
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_PLTE(png, info, palette, 2);
  png_write_info(png, info);
  int channels = 1;
  if (color_type == PNG_COLOR_TYPE_RGB) channels = 3;
  if (color_type == PNG_COLOR_TYPE_RGBA) channels = 4;
  if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) channels = 2;
  std::vector<png_byte> row(static_cast<std::size_t>(w) * channels * (bit_depth == 16 ? 2 : 1));
  const int passes = png_set_interlace_handling(png);
  for (int p = 0; p < passes; ++p)
    for (int y = 0; y < h; ++y) png_write_row(png, row.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

class PngIoTest : public ::testing::Test {
protected:
  TempDir dir_{"irsr-png-test"};
  fs::path file(const std::string& name) const { return dir_.path() / name; }
};

TEST_F(PngIoTest, Gray8Example) {
  const Image img(2, 2, 1, 8, std::vector<std::uint16_t>{0, 64, 128, 255});
  save_image(img, file("a.png"));
  EXPECT_EQ(load_image(file("a.png")), img);
}

TEST_F(PngIoTest, Gray16KeepsFullRange) {
  const Image img(2, 1, 1, 16, std::vector<std::uint16_t>{65535, 258});
  save_image(img, file("b.png"));
  const Image back = load_image(file("b.png"));
  EXPECT_EQ(back.bit_depth(), 16);
  EXPECT_EQ(back.at(0, 0), 65535);
  EXPECT_EQ(back, img);
}

TEST_F(PngIoTest, SinglePixelZero) {
  save_image(Image(1, 1, 1, 8), file("c.png"));
  EXPECT_EQ(load_image(file("c.png")).at(0, 0), 0);
}

TEST_F(PngIoTest, ChallengeResolution) {
  std::mt19937 rng(5);
  const Image img = oracle::random_image(rng, 320, 256);
  save_image(img, file("d.png"));
  const Image back = load_image(file("d.png"));
  EXPECT_EQ(back.width(), 320);
  EXPECT_EQ(back.height(), 256);
}

TEST_F(PngIoTest, RoundTripProperty) {
  std::mt19937 rng(6);
  std::uniform_int_distribution<int> size(1, 40);
  for (int trial = 0; trial < 30; ++trial) {
    const int layout = trial % 3;  // gray8, gray16, rgb8
    const Image img = oracle::random_image(rng, size(rng), size(rng), layout == 2 ? 3 : 1,
                                           layout == 1 ? 16 : 8);
    const auto path = file("rt" + std::to_string(trial) + ".png");
    save_image(img, path);
    EXPECT_EQ(load_image(path), img) << "trial " << trial;
  }
}

TEST_F(PngIoTest, RejectsAlpha) {
  write_raw_png(file("rgba.png"), 3, 3, PNG_COLOR_TYPE_RGBA, 8);
  try {
    load_image(file("rgba.png"));
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported format: alpha channel"), std::string::npos)
        << e.what();
  }
  write_raw_png(file("ga.png"), 3, 3, PNG_COLOR_TYPE_GRAY_ALPHA, 8);
  EXPECT_THROW(load_image(file("ga.png")), IoError);
}

TEST_F(PngIoTest, RejectsPaletteAndInterlace) {
  write_raw_png(file("pal.png"), 4, 4, PNG_COLOR_TYPE_PALETTE, 8);
  try {
    load_image(file("pal.png"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported format: palette"), std::string::npos);
  }
  write_raw_png(file("int.png"), 4, 4, PNG_COLOR_TYPE_GRAY, 8, PNG_INTERLACE_ADAM7);
  try {
    load_image(file("int.png"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported format: interlaced"), std::string::npos);
  }
  write_raw_png(file("rgb16.png"), 2, 2, PNG_COLOR_TYPE_RGB, 16);
  EXPECT_THROW(load_image(file("rgb16.png")), IoError);
}

TEST_F(PngIoTest, ErrorsOnBadPaths) {
  EXPECT_THROW(load_image(file("missing.png")), IoError);
  {
    std::FILE* f = std::fopen(file("junk.png").c_str(), "wb");
    std::fputs("not a png at all", f);
    std::fclose(f);
  }
  EXPECT_THROW(load_image(file("junk.png")), IoError);
  EXPECT_THROW(save_image(Image(1, 1, 1, 8), dir_.path() / "no" / "such" / "dir.png"), IoError);
}

}  // namespace
}  // namespace irsr
