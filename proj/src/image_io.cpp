#include "layersplit/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace layersplit {

namespace fs = std::filesystem;

namespace {

// Row-major interleaved samples, as stored by every codec here.
struct Raster {
  Index height = 0, width = 0, channels = 1;
  int maxval = 255;
  std::vector<std::uint16_t> samples;
};

Tensor to_tensor(const Raster& r) {
  if (r.channels != 1 && r.channels != 3) throw ImageIoError("unsupported channel count");
  Tensor::Vector v(r.height * r.width * r.channels);
  const double scale = 1.0 / r.maxval;
  for (Index y = 0; y < r.height; ++y)
    for (Index x = 0; x < r.width; ++x)
      for (Index c = 0; c < r.channels; ++c)
        v[y + r.height * (x + r.width * c)] = r.samples[static_cast<std::size_t>((y * r.width + x) * r.channels + c)] * scale;
  if (r.channels == 1) return Tensor({r.height, r.width}, std::move(v));
  return Tensor({r.height, r.width, 3}, std::move(v), 2);
}

Raster from_tensor(const Tensor& t, int maxval, long& clamped) {
  Raster r;
  r.height = t.extent(0);
  r.width = t.extent(1);
  r.maxval = maxval;
  if (t.order() == 2) {
    r.channels = 1;
  } else if (t.order() == 3 && t.channel_axis() == 2 && (t.extent(2) == 1 || t.extent(2) == 3)) {
    r.channels = t.extent(2);
  } else {
    throw ImageIoError("cannot encode tensor of dims " + to_string(t.dims()) + " as an image");
  }
  r.samples.resize(static_cast<std::size_t>(r.height * r.width * r.channels));
  clamped = 0;
  for (Index y = 0; y < r.height; ++y)
    for (Index x = 0; x < r.width; ++x)
      for (Index c = 0; c < r.channels; ++c) {
        double s = std::round(t.values()[y + r.height * (x + r.width * c)] * maxval);
        if (s < 0.0 || s > maxval) ++clamped;
        s = std::clamp(s, 0.0, static_cast<double>(maxval));
        r.samples[static_cast<std::size_t>((y * r.width + x) * r.channels + c)] = static_cast<std::uint16_t>(s);
      }
  return r;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw ImageIoError("cannot open '" + path.string() + "'");
  return f;
}

// ---- PNG ----

void png_fail(png_structp, png_const_charp msg) { throw ImageIoError(std::string("png: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

Raster read_png(const fs::path& path) {
  auto f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw ImageIoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  depth = png_get_bit_depth(png, info);
  Raster r;
  r.height = png_get_image_height(png, info);
  r.width = png_get_image_width(png, info);
  r.channels = png_get_channels(png, info);
  r.maxval = depth == 16 ? 65535 : 255;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> buf(rowbytes * static_cast<std::size_t>(r.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(r.height));
  for (Index y = 0; y < r.height; ++y) rows[static_cast<std::size_t>(y)] = buf.data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());

  r.samples.resize(static_cast<std::size_t>(r.height * r.width * r.channels));
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    if (depth == 16) {
      std::uint16_t s;
      std::memcpy(&s, buf.data() + 2 * i, 2);
      r.samples[i] = s;
    } else {
      r.samples[i] = buf[i];
    }
  }
  return r;
}

void write_png_raster(const fs::path& path, const Raster& r, int depth) {
  auto f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw ImageIoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height), depth,
               r.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t bps = depth == 16 ? 2 : 1;
  const std::size_t rowbytes = static_cast<std::size_t>(r.width * r.channels) * bps;
  std::vector<unsigned char> row(rowbytes);
  for (Index y = 0; y < r.height; ++y) {
    for (Index i = 0; i < r.width * r.channels; ++i) {
      const std::uint16_t s = r.samples[static_cast<std::size_t>(y * r.width * r.channels + i)];
      if (depth == 16) {
        row[2 * static_cast<std::size_t>(i)] = static_cast<unsigned char>(s >> 8);
        row[2 * static_cast<std::size_t>(i) + 1] = static_cast<unsigned char>(s & 0xff);
      } else {
        row[static_cast<std::size_t>(i)] = static_cast<unsigned char>(s);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

// ---- JPEG ----

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_fail(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Raster read_jpeg(const fs::path& path) {
  auto f = open_file(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_fail;
  Raster r;
  std::vector<unsigned char> row;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageIoError(std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  r.height = cinfo.output_height;
  r.width = cinfo.output_width;
  r.channels = cinfo.output_components;
  r.samples.resize(static_cast<std::size_t>(r.height * r.width * r.channels));
  row.resize(static_cast<std::size_t>(r.width * r.channels));
  while (cinfo.output_scanline < cinfo.output_height) {
    const Index y = cinfo.output_scanline;
    JSAMPROW rp = row.data();
    jpeg_read_scanlines(&cinfo, &rp, 1);
    std::copy(row.begin(), row.end(), r.samples.begin() + y * r.width * r.channels);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return r;
}

// ---- PNM ----

Raster read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open '" + path.string() + "'");
  auto token = [&]() {
    std::string t;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!t.empty()) break;
        continue;
      }
      t += ch;
    }
    if (t.empty()) throw ImageIoError("pnm: truncated header in '" + path.string() + "'");
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P6") throw ImageIoError("pnm: only binary P5/P6 supported");
  Raster r;
  try {
    r.width = std::stol(token());
    r.height = std::stol(token());
    r.maxval = std::stoi(token());
  } catch (const std::logic_error&) {
    throw ImageIoError("pnm: malformed header in '" + path.string() + "'");
  }
  if (r.width < 1 || r.height < 1 || r.maxval < 1 || r.maxval > 65535) throw ImageIoError("pnm: bad header values");
  r.channels = magic == "P6" ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(r.width * r.height * r.channels);
  const std::size_t bps = r.maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(n * bps);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw ImageIoError("pnm: truncated data in '" + path.string() + "'");
  r.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    r.samples[i] = bps == 2 ? static_cast<std::uint16_t>(buf[2 * i] << 8 | buf[2 * i + 1]) : buf[i];
  return r;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm" || ext == ".ppm";
}

}  // namespace

Tensor read_image(const fs::path& path) {
  std::array<unsigned char, 8> sig{};
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open '" + path.string() + "'");
    in.read(reinterpret_cast<char*>(sig.data()), sig.size());
    if (in.gcount() < 2) throw ImageIoError("'" + path.string() + "' is too short to be an image");
  }
  if (png_sig_cmp(sig.data(), 0, 8) == 0) return to_tensor(read_png(path));
  if (sig[0] == 0xFF && sig[1] == 0xD8) return to_tensor(read_jpeg(path));
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return to_tensor(read_pnm(path));
  throw ImageIoError("unrecognized image format: '" + path.string() + "'");
}

long write_png(const fs::path& path, const Tensor& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ImageIoError("png bit depth must be 8 or 16");
  long clamped = 0;
  const Raster r = from_tensor(image, bit_depth == 16 ? 65535 : 255, clamped);
  write_png_raster(path, r, bit_depth);
  return clamped;
}

long write_pnm(const fs::path& path, const Tensor& image) {
  long clamped = 0;
  const Raster r = from_tensor(image, 255, clamped);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot open '" + path.string() + "' for writing");
  out << (r.channels == 3 ? "P6" : "P5") << '\n' << r.width << ' ' << r.height << "\n255\n";
  std::vector<char> bytes(r.samples.begin(), r.samples.end());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("write failed for '" + path.string() + "'");
  return clamped;
}

Tensor frame(const Tensor& video, Index t) {
  if (video.order() != 4 || video.channel_axis() != 2) throw DimensionError("frame: expected {H, W, C, T}");
  if (t < 0 || t >= video.extent(3)) throw DimensionError("frame index out of range");
  const Index h = video.extent(0), w = video.extent(1), c = video.extent(2);
  const Index n = h * w * c;
  Tensor::Vector v = video.values().segment(t * n, n);
  if (c == 1) return Tensor({h, w}, std::move(v));
  return Tensor({h, w, c}, std::move(v), 2);
}

Tensor stack_frames(const std::vector<Tensor>& frames) {
  if (frames.empty()) throw DimensionError("stack_frames: no frames");
  const Tensor& f0 = frames.front();
  const Index h = f0.extent(0), w = f0.extent(1);
  const Index c = f0.order() == 3 ? f0.extent(2) : 1;
  const Index n = h * w * c;
  Tensor::Vector v(n * static_cast<Index>(frames.size()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].same_shape(f0))
      throw DimensionError("frame " + std::to_string(i) + " has dims " + to_string(frames[i].dims()) +
                           ", expected " + to_string(f0.dims()));
    v.segment(static_cast<Index>(i) * n, n) = frames[i].values();
  }
  return Tensor({h, w, c, static_cast<Index>(frames.size())}, std::move(v), 2);
}

Tensor read_frames(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ImageIoError("no frames found in '" + dir.string() + "'");
  std::vector<Tensor> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(read_image(f));
  return stack_frames(frames);
}

std::vector<fs::path> write_frames(const fs::path& dir, const Tensor& video, int bit_depth,
                                   const std::string& prefix) {
  fs::create_directories(dir);
  std::vector<fs::path> out;
  for (Index t = 0; t < video.extent(3); ++t) {
    std::ostringstream name;
    name << prefix << std::setw(4) << std::setfill('0') << t << ".png";
    out.push_back(dir / name.str());
    write_png(out.back(), frame(video, t), bit_depth);
  }
  return out;
}

Tensor read_input(const fs::path& path) {
  if (fs::is_directory(path)) return read_frames(path);
  return read_image(path);
}

}  // namespace layersplit
