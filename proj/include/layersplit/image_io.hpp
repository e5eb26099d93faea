#pragma once

// Image and frame-directory codecs. Samples are mapped to [0, 1].
//   gray   -> {H, W}
//   color  -> {H, W, 3}      channel axis 2
//   frames -> {H, W, C, T}   channel axis 2

#include "layersplit/tensor.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace layersplit {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decodes PNG (8/16-bit), JPEG, or binary PGM/PPM, chosen by file signature.
/// Alpha is dropped; gray+alpha becomes gray.
Tensor read_image(const std::filesystem::path& path);

/// Writes a gray or RGB tensor as PNG. Samples are round(v * maxval), clamped.
/// Returns the number of samples that had to be clamped.
long write_png(const std::filesystem::path& path, const Tensor& image, int bit_depth = 8);

/// Binary P5/P6, 8-bit.
long write_pnm(const std::filesystem::path& path, const Tensor& image);

/// Image files in `dir` sorted by name, stacked into {H, W, C, T}.
Tensor read_frames(const std::filesystem::path& dir);

/// Writes frame_0000.png ... into `dir` (created if missing). Returns paths.
std::vector<std::filesystem::path> write_frames(const std::filesystem::path& dir, const Tensor& video,
                                                int bit_depth = 8, const std::string& prefix = "frame_");

/// Reads an image file or, when `path` is a directory, a frame sequence.
Tensor read_input(const std::filesystem::path& path);

/// Frame t of a {H, W, C, T} tensor as {H, W} (C = 1) or {H, W, 3}.
Tensor frame(const Tensor& video, Index t);

/// Inverse of frame(): stacks equally sized frames into {H, W, C, T}.
Tensor stack_frames(const std::vector<Tensor>& frames);

}  // namespace layersplit
