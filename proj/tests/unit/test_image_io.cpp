#include "layersplit/image_io.hpp"
#include "support/random.hpp"

#include <jpeglib.h>

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

using namespace layersplit;
using layersplit::testing::Gen;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "layersplit_io_test";
  fs::create_directories(dir);
  return dir / name;
}

Tensor quantized(Gen& gen, const Dims& d, std::optional<int> ch, int maxval) {
  Tensor t = gen.tensor(d, ch, 0, 1);
  for (Index i = 0; i < t.size(); ++i) t.values()[i] = std::round(t.values()[i] * maxval) / maxval;
  return t;
}

void write_test_jpeg(const fs::path& path, int w, int h, int comps) {
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  jpeg_stdio_dest(&cinfo, f);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = comps;
  cinfo.in_color_space = comps == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 90, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<unsigned char> row(static_cast<std::size_t>(w * comps));
  while (cinfo.next_scanline < cinfo.image_height) {
    for (int i = 0; i < w * comps; ++i) row[static_cast<std::size_t>(i)] = static_cast<unsigned char>((i * 7 + cinfo.next_scanline * 3) % 256);
    JSAMPROW rp = row.data();
    jpeg_write_scanlines(&cinfo, &rp, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(f);
}

}  // namespace

TEST(ImageIo, Png8RoundTripGrayAndColor) {
  Gen gen(81);
  const Tensor g = quantized(gen, {13, 17}, std::nullopt, 255);
  write_png(scratch("g8.png"), g, 8);
  const Tensor g2 = read_image(scratch("g8.png"));
  ASSERT_EQ(g2.dims(), g.dims());
  EXPECT_LE((g2.values() - g.values()).cwiseAbs().maxCoeff(), 1e-15);

  const Tensor c = quantized(gen, {9, 11, 3}, 2, 255);
  write_png(scratch("c8.png"), c, 8);
  const Tensor c2 = read_image(scratch("c8.png"));
  ASSERT_EQ(c2.dims(), c.dims());
  EXPECT_EQ(c2.channel_axis(), 2);
  EXPECT_LE((c2.values() - c.values()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ImageIo, Png16RoundTrip) {
  Gen gen(82);
  const Tensor g = quantized(gen, {10, 12}, std::nullopt, 65535);
  write_png(scratch("g16.png"), g, 16);
  EXPECT_LE((read_image(scratch("g16.png")).values() - g.values()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ImageIo, ClampingIsCounted) {
  const Tensor t(Dims{2, 2}, Eigen::Vector4d(-0.5, 0.2, 1.5, 1.0));
  EXPECT_EQ(write_png(scratch("clamp.png"), t, 8), 2);
}

TEST(ImageIo, PnmRoundTrip) {
  Gen gen(83);
  const Tensor g = quantized(gen, {7, 5}, std::nullopt, 255);
  write_pnm(scratch("g.pgm"), g);
  EXPECT_LE((read_image(scratch("g.pgm")).values() - g.values()).cwiseAbs().maxCoeff(), 1e-15);
  const Tensor c = quantized(gen, {6, 4, 3}, 2, 255);
  write_pnm(scratch("c.ppm"), c);
  EXPECT_LE((read_image(scratch("c.ppm")).values() - c.values()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ImageIo, PnmHeaderWithComment) {
  std::ofstream(scratch("comment.pgm"), std::ios::binary) << "P5\n# made by hand\n2 1\n255\n" << '\x00' << '\xff';
  const Tensor t = read_image(scratch("comment.pgm"));
  ASSERT_EQ(t.dims(), (Dims{1, 2}));
  EXPECT_EQ(t.values()[1], 1.0);
}

TEST(ImageIo, JpegDecodes) {
  write_test_jpeg(scratch("g.jpg"), 24, 16, 1);
  const Tensor g = read_image(scratch("g.jpg"));
  EXPECT_EQ(g.dims(), (Dims{16, 24}));
  write_test_jpeg(scratch("c.jpg"), 16, 8, 3);
  const Tensor c = read_image(scratch("c.jpg"));
  EXPECT_EQ(c.dims(), (Dims{8, 16, 3}));
}

TEST(ImageIo, FramesRoundTrip) {
  Gen gen(84);
  const Tensor video = quantized(gen, {8, 6, 1, 5}, 2, 255);
  const fs::path dir = scratch("frames");
  fs::remove_all(dir);
  const auto files = write_frames(dir, video);
  EXPECT_EQ(files.size(), 5u);
  const Tensor back = read_input(dir);
  ASSERT_EQ(back.dims(), video.dims());
  EXPECT_LE((back.values() - video.values()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(frame(video, 2).dims(), (Dims{8, 6}));
  EXPECT_TRUE((stack_frames({frame(video, 0), frame(video, 1)}).values().array() == video.values().head(96).array()).all());
}

TEST(ImageIo, Errors) {
  EXPECT_THROW(read_image(scratch("missing.png")), ImageIoError);
  std::ofstream(scratch("junk.png"), std::ios::binary) << "definitely not an image";
  EXPECT_THROW(read_image(scratch("junk.png")), ImageIoError);
  std::ofstream(scratch("trunc.pgm"), std::ios::binary) << "P5\n4 4\n255\nabc";
  EXPECT_THROW(read_image(scratch("trunc.pgm")), ImageIoError);
  std::ofstream out(scratch("bad.png"), std::ios::binary);
  out << "\x89PNG\r\n\x1a\n garbage";
  out.close();
  EXPECT_THROW(read_image(scratch("bad.png")), ImageIoError);
  EXPECT_THROW(write_png(scratch("x.png"), Tensor(Dims{4, 4, 2}, 2)), ImageIoError);
  EXPECT_THROW(write_png(scratch("x.png"), Tensor(Dims{4, 4}), 12), ImageIoError);
  EXPECT_THROW(stack_frames({Tensor(Dims{4, 4}), Tensor(Dims{4, 5})}), DimensionError);
}
