// Rasterization is a per-box bounding-rectangle sweep with an exact
// pixel-centre membership test (rotation handled by rotating the pixel
// centre back), so PNG and SVG draw from one definition of "covered".
// Rows are independent in binary mode; output bytes never depend on box
// order there, and alpha mode composites in stored (deterministic) order.

#include "boxfield/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include <zlib.h>

namespace boxfield {

namespace {

struct Frame {
  double x_lo, y_lo, x_hi, y_hi;
  int w, h;
  double dx, dy;

  double px_x(int j) const { return x_lo + (j + 0.5) * dx; }
  double px_y(int i) const { return y_hi - (i + 0.5) * dy; }
  // Inverse maps, clamped to the grid.
  int col_lo(double x) const {
    return std::max(0, static_cast<int>(std::floor((x - x_lo) / dx - 0.5)));
  }
  int col_hi(double x) const {
    return std::min(w - 1, static_cast<int>(std::ceil((x - x_lo) / dx - 0.5)));
  }
  int row_lo(double y) const {
    return std::max(0, static_cast<int>(std::floor((y_hi - y) / dy - 0.5)));
  }
  int row_hi(double y) const {
    return std::min(h - 1, static_cast<int>(std::ceil((y_hi - y) / dy - 0.5)));
  }
};

Frame make_frame(const RasterSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) {
    throw std::invalid_argument("render: pixel dimensions must be positive");
  }
  if (!(spec.x_hi > spec.x_lo) || !(spec.y_hi > spec.y_lo)) {
    throw std::invalid_argument("render: viewport must have positive extent");
  }
  if (static_cast<std::int64_t>(spec.width) * spec.height > kMaxRasterPixels) {
    char msg[128];
    std::snprintf(msg, sizeof(msg),
                  "render: raster budget exceeded (%d x %d > %lld pixels)",
                  spec.width, spec.height,
                  static_cast<long long>(kMaxRasterPixels));
    throw std::runtime_error(msg);
  }
  if (!(spec.alpha_opacity > 0.0 && spec.alpha_opacity <= 1.0)) {
    throw std::invalid_argument("render: alpha_opacity must lie in (0, 1]");
  }
  Frame f{spec.x_lo, spec.y_lo, spec.x_hi, spec.y_hi, spec.width, spec.height,
          (spec.x_hi - spec.x_lo) / spec.width,
          (spec.y_hi - spec.y_lo) / spec.height};
  return f;
}

bool box_contains(const Box& b, double x, double y) {
  double rx = x - b.centre.x();
  double ry = y - b.centre.y();
  if (b.rotated && b.theta != 0.0) {
    const double c = std::cos(b.theta), s = std::sin(b.theta);
    const double qx = c * rx + s * ry;
    const double qy = -s * rx + c * ry;
    rx = qx;
    ry = qy;
  }
  return std::abs(rx) <= 0.5 * b.edge.x() && std::abs(ry) <= 0.5 * b.edge.y();
}

// Half-extents of the box's axis-aligned bounding rectangle.
void box_bbox(const Box& b, double& hx, double& hy) {
  if (b.rotated && b.theta != 0.0) {
    const double c = std::abs(std::cos(b.theta)), s = std::abs(std::sin(b.theta));
    hx = 0.5 * (b.edge.x() * c + b.edge.y() * s);
    hy = 0.5 * (b.edge.x() * s + b.edge.y() * c);
  } else {
    hx = 0.5 * b.edge.x();
    hy = 0.5 * b.edge.y();
  }
}

void check_viewport(const BoxField& field, const RasterSpec& spec) {
  const double lx = field.trunc.window_half.x();
  const double ly = field.trunc.window_half.y();
  if (lx > 0.0 && ly > 0.0) {
    if (spec.x_lo < -lx - 1e-12 || spec.x_hi > lx + 1e-12 ||
        spec.y_lo < -ly - 1e-12 || spec.y_hi > ly + 1e-12) {
      throw std::invalid_argument(
          "render: viewport exceeds the sampled window; boxes outside it were "
          "never drawn from the field");
    }
  }
}

std::vector<std::uint8_t> raster_impl(const BoxField& field, const RasterSpec& spec) {
  const Frame f = make_frame(spec);
  check_viewport(field, spec);
  const std::size_t n = static_cast<std::size_t>(f.w) * static_cast<std::size_t>(f.h);
  if (spec.fill == FillMode::binary) {
    std::vector<std::uint8_t> gray(n, 255);
    for (const Box& b : field.boxes) {
      double hx, hy;
      box_bbox(b, hx, hy);
      const int j0 = f.col_lo(b.centre.x() - hx), j1 = f.col_hi(b.centre.x() + hx);
      const int i0 = f.row_lo(b.centre.y() + hy), i1 = f.row_hi(b.centre.y() - hy);
      for (int i = i0; i <= i1; ++i) {
        const double y = f.px_y(i);
        for (int j = j0; j <= j1; ++j) {
          if (box_contains(b, f.px_x(j), y)) {
            gray[static_cast<std::size_t>(i) * f.w + j] = 0;
          }
        }
      }
    }
    return gray;
  }
  // Alpha mode: transmittance product, composited in stored box order.
  std::vector<double> trans(n, 1.0);
  const double keep = 1.0 - spec.alpha_opacity;
  for (const Box& b : field.boxes) {
    double hx, hy;
    box_bbox(b, hx, hy);
    const int j0 = f.col_lo(b.centre.x() - hx), j1 = f.col_hi(b.centre.x() + hx);
    const int i0 = f.row_lo(b.centre.y() + hy), i1 = f.row_hi(b.centre.y() - hy);
    for (int i = i0; i <= i1; ++i) {
      const double y = f.px_y(i);
      for (int j = j0; j <= j1; ++j) {
        if (box_contains(b, f.px_x(j), y)) {
          trans[static_cast<std::size_t>(i) * f.w + j] *= keep;
        }
      }
    }
  }
  std::vector<std::uint8_t> gray(n);
  for (std::size_t k = 0; k < n; ++k) {
    gray[k] = static_cast<std::uint8_t>(std::lround(255.0 * trans[k]));
  }
  return gray;
}

// ---------------------------------------------------------------------------
// PNG serialization (8-bit grayscale, filter 0 rows, single IDAT).

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::uint8_t* data, std::size_t len) {
  push_u32(out, static_cast<std::uint32_t>(len));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  if (len) out.insert(out.end(), data, data + len);
  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, out.data() + start, static_cast<uInt>(4 + len)));
  push_u32(out, crc);
}

std::vector<std::uint8_t> encode_png(const std::vector<std::uint8_t>& gray, int w, int h) {
  // Filter byte 0 before every row.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(h) * (static_cast<std::size_t>(w) + 1));
  for (int i = 0; i < h; ++i) {
    raw.push_back(0);
    const std::uint8_t* row = gray.data() + static_cast<std::size_t>(i) * w;
    raw.insert(raw.end(), row, row + w);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(bound);
  if (compress2(z.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw std::runtime_error("render: deflate failed");
  }
  z.resize(bound);

  std::vector<std::uint8_t> out;
  const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.insert(out.end(), sig, sig + 8);
  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(w >> 24);
  ihdr[1] = static_cast<std::uint8_t>(w >> 16);
  ihdr[2] = static_cast<std::uint8_t>(w >> 8);
  ihdr[3] = static_cast<std::uint8_t>(w);
  ihdr[4] = static_cast<std::uint8_t>(h >> 24);
  ihdr[5] = static_cast<std::uint8_t>(h >> 16);
  ihdr[6] = static_cast<std::uint8_t>(h >> 8);
  ihdr[7] = static_cast<std::uint8_t>(h);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 0;   // grayscale
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter
  ihdr[12] = 0;  // no interlace
  push_chunk(out, "IHDR", ihdr, sizeof(ihdr));
  push_chunk(out, "IDAT", z.data(), z.size());
  push_chunk(out, "IEND", nullptr, 0);
  return out;
}

// ---------------------------------------------------------------------------
// SVG serialization.

std::string svg_impl(const BoxField& field, const RasterSpec& spec) {
  const Frame f = make_frame(spec);
  check_viewport(field, spec);
  const double sx = f.w / (f.x_hi - f.x_lo);
  const double sy = f.h / (f.y_hi - f.y_lo);
  std::string svg;
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                "height=\"%d\" viewBox=\"0 0 %d %d\">\n"
                "<rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n",
                f.w, f.h, f.w, f.h, f.w, f.h);
  svg += buf;
  for (const Box& b : field.boxes) {
    if (b.rotated && b.theta != 0.0 && std::abs(sx / sy - 1.0) > 1e-9) {
      throw std::invalid_argument(
          "render: rotated boxes require square pixels in SVG output");
    }
    const double cx = (b.centre.x() - f.x_lo) * sx;
    const double cy = (f.y_hi - b.centre.y()) * sy;
    const double wpx = b.edge.x() * sx;
    const double hpx = b.edge.y() * sy;
    if (b.rotated && b.theta != 0.0) {
      // Model rotation is counterclockwise with y up; the screen's y points
      // down, so the same box appears rotated clockwise.
      const double deg = -b.theta * 180.0 / 3.14159265358979323846;
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.6f\" y=\"%.6f\" width=\"%.6f\" height=\"%.6f\" "
                    "fill=\"#000000\"%s transform=\"rotate(%.6f %.6f %.6f)\"/>\n",
                    cx - 0.5 * wpx, cy - 0.5 * hpx, wpx, hpx,
                    spec.fill == FillMode::alpha ? " fill-opacity=\"0.35\"" : "",
                    deg, cx, cy);
    } else {
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.6f\" y=\"%.6f\" width=\"%.6f\" height=\"%.6f\" "
                    "fill=\"#000000\"%s/>\n",
                    cx - 0.5 * wpx, cy - 0.5 * hpx, wpx, hpx,
                    spec.fill == FillMode::alpha ? " fill-opacity=\"0.35\"" : "");
    }
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

std::vector<std::uint8_t> rasterize(const BoxField& field, const RasterSpec& spec) {
  return raster_impl(field, spec);
}

std::vector<std::uint8_t> render_field(const BoxField& field, const RasterSpec& spec) {
  if (spec.format == ImageFormat::svg) {
    const std::string svg = svg_impl(field, spec);
    return std::vector<std::uint8_t>(svg.begin(), svg.end());
  }
  return encode_png(raster_impl(field, spec), spec.width, spec.height);
}

std::vector<std::uint8_t> rasterize_svg(const std::string& svg, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("rasterize_svg: pixel dimensions must be positive");
  }
  std::vector<std::uint8_t> gray(
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 255);
  std::size_t pos = 0;
  while ((pos = svg.find("<rect ", pos)) != std::string::npos) {
    const std::size_t end = svg.find("/>", pos);
    if (end == std::string::npos) break;
    const std::string rect = svg.substr(pos, end - pos);
    pos = end + 2;
    if (rect.find("fill=\"#000000\"") == std::string::npos) continue;  // background
    double x = 0, y = 0, w = 0, h = 0;
    const auto grab = [&rect](const char* key, double& out) {
      const std::size_t at = rect.find(key);
      if (at == std::string::npos) return false;
      out = std::atof(rect.c_str() + at + std::strlen(key));
      return true;
    };
    if (!grab("x=\"", x) || !grab("y=\"", y) || !grab("width=\"", w) ||
        !grab("height=\"", h)) {
      throw std::invalid_argument("rasterize_svg: malformed rectangle element");
    }
    double deg = 0, rcx = 0, rcy = 0;
    const std::size_t rot = rect.find("rotate(");
    const bool rotated =
        rot != std::string::npos &&
        std::sscanf(rect.c_str() + rot, "rotate(%lf %lf %lf", &deg, &rcx, &rcy) == 3;

    // Pixel-centre membership, mirroring the direct rasterizer.
    const double cx = x + 0.5 * w, cy = y + 0.5 * h;
    const double th = rotated ? deg * 3.14159265358979323846 / 180.0 : 0.0;
    const double hx =
        rotated ? 0.5 * (w * std::abs(std::cos(th)) + h * std::abs(std::sin(th)))
                : 0.5 * w;
    const double hy =
        rotated ? 0.5 * (w * std::abs(std::sin(th)) + h * std::abs(std::cos(th)))
                : 0.5 * h;
    const int j0 = std::max(0, static_cast<int>(std::floor(cx - hx - 0.5)));
    const int j1 = std::min(width - 1, static_cast<int>(std::ceil(cx + hx - 0.5)));
    const int i0 = std::max(0, static_cast<int>(std::floor(cy - hy - 0.5)));
    const int i1 = std::min(height - 1, static_cast<int>(std::ceil(cy + hy - 0.5)));
    const double c = std::cos(th), s = std::sin(th);
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        double rx = (j + 0.5) - cx, ry = (i + 0.5) - cy;
        if (rotated) {
          // Screen-coordinate clockwise rotation by deg; undo it.
          const double qx = c * rx + s * ry;
          const double qy = -s * rx + c * ry;
          rx = qx;
          ry = qy;
        }
        if (std::abs(rx) <= 0.5 * w && std::abs(ry) <= 0.5 * h) {
          gray[static_cast<std::size_t>(i) * width + j] = 0;
        }
      }
    }
  }
  return gray;
}

double anisotropy_ratio(const std::vector<std::uint8_t>& gray, int width, int height) {
  if (width <= 0 || height <= 0 ||
      gray.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("anisotropy_ratio: buffer does not match dimensions");
  }
  const auto dark = [&](int i, int j) {
    return gray[static_cast<std::size_t>(i) * width + j] < 128;
  };
  // Length-biased: every black pixel votes with its run length, so the two
  // totals share the same denominator (the black count) and the ratio is
  // sum(len^2) horizontal over vertical.
  double h_sq = 0.0;
  for (int i = 0; i < height; ++i) {
    std::int64_t run = 0;
    for (int j = 0; j <= width; ++j) {
      if (j < width && dark(i, j)) {
        ++run;
      } else if (run) {
        h_sq += static_cast<double>(run) * static_cast<double>(run);
        run = 0;
      }
    }
  }
  double v_sq = 0.0;
  for (int j = 0; j < width; ++j) {
    std::int64_t run = 0;
    for (int i = 0; i <= height; ++i) {
      if (i < height && dark(i, j)) {
        ++run;
      } else if (run) {
        v_sq += static_cast<double>(run) * static_cast<double>(run);
        run = 0;
      }
    }
  }
  if (h_sq == 0.0 || v_sq == 0.0) return 1.0;  // blank image: no anisotropy
  return h_sq / v_sq;
}

std::uint64_t image_hash(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace boxfield
