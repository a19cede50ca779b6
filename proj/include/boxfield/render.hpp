#pragma once
// Deterministic rasterization of sampled box fields: filled black boxes on a
// white ground, axis-aligned or rotated, as PNG (zlib-deflated 8-bit gray)
// or SVG (one rectangle element per box, exact coordinates).

#include <cstdint>
#include <string>
#include <vector>

#include "boxfield/process.hpp"

namespace boxfield {

enum class FillMode { binary, alpha };
enum class ImageFormat { png, svg };

struct RasterSpec {
  // Viewport in model coordinates; y grows upward in the model and downward
  // in the image, rows are emitted top-first.
  double x_lo = -1.0, y_lo = -1.0, x_hi = 1.0, y_hi = 1.0;
  int width = 512, height = 512;
  FillMode fill = FillMode::binary;
  ImageFormat format = ImageFormat::png;
  double alpha_opacity = 0.35;  // per-box coverage in alpha mode
};

// Deterministic bytes for the rendered image.  Throws std::invalid_argument
// for degenerate geometry and std::runtime_error ("raster budget") when the
// pixel count exceeds the budget below.
std::vector<std::uint8_t> render_field(const BoxField& field, const RasterSpec& spec);

inline constexpr std::int64_t kMaxRasterPixels = 1 << 26;  // 64M pixels

// Grayscale coverage grid (row-major, top row first, 0 = black .. 255 =
// white): the PNG path serializes exactly this buffer, and tests use it for
// run-length statistics.
std::vector<std::uint8_t> rasterize(const BoxField& field, const RasterSpec& spec);

// Re-rasterize an SVG produced by render_field by parsing its rectangle
// elements: the round-trip check that serialized coordinates carry the same
// picture.  Accepts only the subset this module emits.
std::vector<std::uint8_t> rasterize_svg(const std::string& svg, int width, int height);

// Length-biased mean horizontal over vertical black-run length (pixels
// darker than 128; each black pixel reports the length of the run through
// it, so the ratio reduces to sum(len^2) row-wise over column-wise).  The
// testable proxy for "the sample shows elongated horizontal components":
// sub-pixel clutter scores 1 on both axes and cancels.
double anisotropy_ratio(const std::vector<std::uint8_t>& gray, int width, int height);

// FNV-1a over the byte stream: stable fingerprint for golden-image checks.
std::uint64_t image_hash(const std::vector<std::uint8_t>& bytes);

}  // namespace boxfield
