#ifndef TIGRANET_DATA_HPP
#define TIGRANET_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tigranet/graph.hpp"
#include "tigranet/rng.hpp"

namespace tigranet {

// ---------------------------------------------------------------------------
// IDX files
// ---------------------------------------------------------------------------
//
// The MNIST distribution format: big-endian magic + dimension fields, then
// raw unsigned bytes. Images use magic 0x00000803 (count, rows, cols),
// labels 0x00000801 (count). Pixels are normalized to [0, 1] on read by
// dividing by 255.

class IdxError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, truncated, count_mismatch };

  IdxError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ImageDataset {
  int height = 0;
  int width = 0;
  std::vector<GraphSignal> images;  // row-major, values in [0, 1]
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
};

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) {
    throw IdxError(IdxError::Kind::truncated, "truncated IDX header: " + path);
  }
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
}

inline void write_be_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

// Reads an IDX image file without labels (used by the inspect tool).
inline std::pair<std::vector<GraphSignal>, std::pair<int, int>> read_idx_images(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::io, "cannot open IDX file: " + path);
  if (detail::read_be_u32(in, path) != 0x00000803u) {
    throw IdxError(IdxError::Kind::bad_magic,
                   "bad IDX image magic in " + path);
  }
  const std::uint32_t count = detail::read_be_u32(in, path);
  const std::uint32_t rows = detail::read_be_u32(in, path);
  const std::uint32_t cols = detail::read_be_u32(in, path);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
    throw IdxError(IdxError::Kind::bad_magic,
                   "implausible IDX image dimensions in " + path);
  }
  std::vector<GraphSignal> images;
  images.reserve(count);
  std::vector<unsigned char> buffer(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size())) {
      throw IdxError(IdxError::Kind::truncated,
                     "truncated IDX image payload: " + path);
    }
    GraphSignal img(buffer.size());
    for (std::size_t p = 0; p < buffer.size(); ++p) {
      img[p] = static_cast<double>(buffer[p]) / 255.0;
    }
    images.push_back(std::move(img));
  }
  return {std::move(images), {static_cast<int>(rows), static_cast<int>(cols)}};
}

inline std::vector<int> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::io, "cannot open IDX file: " + path);
  if (detail::read_be_u32(in, path) != 0x00000801u) {
    throw IdxError(IdxError::Kind::bad_magic,
                   "bad IDX label magic in " + path);
  }
  const std::uint32_t count = detail::read_be_u32(in, path);
  std::vector<unsigned char> buffer(count);
  in.read(reinterpret_cast<char*>(buffer.data()),
          static_cast<std::streamsize>(buffer.size()));
  if (in.gcount() != static_cast<std::streamsize>(buffer.size())) {
    throw IdxError(IdxError::Kind::truncated,
                   "truncated IDX label payload: " + path);
  }
  return std::vector<int>(buffer.begin(), buffer.end());
}

inline ImageDataset read_idx(const std::string& images_path,
                             const std::string& labels_path) {
  auto [images, dims] = read_idx_images(images_path);
  std::vector<int> labels = read_idx_labels(labels_path);
  if (images.size() != labels.size()) {
    throw IdxError(IdxError::Kind::count_mismatch,
                   "image count " + std::to_string(images.size()) +
                       " does not match label count " +
                       std::to_string(labels.size()));
  }
  ImageDataset ds;
  ds.height = dims.first;
  ds.width = dims.second;
  ds.images = std::move(images);
  ds.labels = std::move(labels);
  return ds;
}

// Fixture writer emitting the exact same format. Pixels are quantized back
// to bytes as round(v * 255), so a dataset produced by read_idx round-trips
// bitwise.
inline void write_idx(const ImageDataset& ds, const std::string& images_path,
                      const std::string& labels_path) {
  std::ofstream img_out(images_path, std::ios::binary | std::ios::trunc);
  if (!img_out) {
    throw IdxError(IdxError::Kind::io, "cannot write IDX file: " + images_path);
  }
  detail::write_be_u32(img_out, 0x00000803u);
  detail::write_be_u32(img_out, static_cast<std::uint32_t>(ds.size()));
  detail::write_be_u32(img_out, static_cast<std::uint32_t>(ds.height));
  detail::write_be_u32(img_out, static_cast<std::uint32_t>(ds.width));
  std::vector<unsigned char> buffer;
  for (const GraphSignal& img : ds.images) {
    buffer.assign(img.size(), 0);
    for (std::size_t p = 0; p < img.size(); ++p) {
      const double clamped = std::clamp(img[p], 0.0, 1.0);
      buffer[p] = static_cast<unsigned char>(std::lround(clamped * 255.0));
    }
    img_out.write(reinterpret_cast<const char*>(buffer.data()),
                  static_cast<std::streamsize>(buffer.size()));
  }
  if (!img_out) {
    throw IdxError(IdxError::Kind::io, "write failed: " + images_path);
  }

  std::ofstream lab_out(labels_path, std::ios::binary | std::ios::trunc);
  if (!lab_out) {
    throw IdxError(IdxError::Kind::io, "cannot write IDX file: " + labels_path);
  }
  detail::write_be_u32(lab_out, 0x00000801u);
  detail::write_be_u32(lab_out, static_cast<std::uint32_t>(ds.size()));
  for (int label : ds.labels) {
    const unsigned char b = static_cast<unsigned char>(label);
    lab_out.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!lab_out) {
    throw IdxError(IdxError::Kind::io, "write failed: " + labels_path);
  }
}

// ---------------------------------------------------------------------------
// Image transforms
// ---------------------------------------------------------------------------

// Counter-clockwise rotation about the canvas center. Multiples of 90 degrees
// are exact index permutations; other angles use inverse-mapping bilinear
// interpolation with zero fill outside the canvas. Square canvases only.
inline GraphSignal rotate_image(const GraphSignal& img, int height, int width,
                                double angle_degrees) {
  if (height != width) {
    throw std::invalid_argument("rotate_image: canvas must be square");
  }
  if (static_cast<int>(img.size()) != height * width) {
    throw std::invalid_argument("rotate_image: image size mismatch");
  }
  const int n = height;
  double angle = std::fmod(angle_degrees, 360.0);
  if (angle < 0.0) angle += 360.0;

  const double quarter = angle / 90.0;
  const int q = static_cast<int>(std::lround(quarter));
  if (std::abs(quarter - q) < 1e-12) {
    GraphSignal out(img.size(), 0.0);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        int sr = r;
        int sc = c;
        switch (q % 4) {
          case 0: break;
          case 1: sr = c; sc = n - 1 - r; break;           // 90 ccw
          case 2: sr = n - 1 - r; sc = n - 1 - c; break;   // 180
          case 3: sr = n - 1 - c; sc = r; break;           // 270 ccw
        }
        out[static_cast<std::size_t>(vertex_index(r, c, n))] =
            img[static_cast<std::size_t>(vertex_index(sr, sc, n))];
      }
    }
    return out;
  }

  const double theta = angle * 3.14159265358979323846 / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double ctr = (n - 1) / 2.0;
  GraphSignal out(img.size(), 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double dx = c - ctr;
      const double dy = r - ctr;
      const double sx = cos_t * dx - sin_t * dy + ctr;
      const double sy = sin_t * dx + cos_t * dy + ctr;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      double value = 0.0;
      for (int oy = 0; oy <= 1; ++oy) {
        for (int ox = 0; ox <= 1; ++ox) {
          const int xi = x0 + ox;
          const int yi = y0 + oy;
          if (xi < 0 || xi >= n || yi < 0 || yi >= n) continue;
          const double weight = (ox ? fx : 1.0 - fx) * (oy ? fy : 1.0 - fy);
          value += weight * img[static_cast<std::size_t>(vertex_index(yi, xi, n))];
        }
      }
      out[static_cast<std::size_t>(vertex_index(r, c, n))] = value;
    }
  }
  return out;
}

// Integer shift by dx columns (right) and dy rows (down), zero fill; content
// leaving the canvas is clipped. Shifts are bounded by +-6.
inline GraphSignal translate_image(const GraphSignal& img, int height,
                                   int width, int dx, int dy) {
  if (std::abs(dx) > 6 || std::abs(dy) > 6) {
    throw std::invalid_argument("translate_image: shift bound (+-6) exceeded");
  }
  if (static_cast<int>(img.size()) != height * width) {
    throw std::invalid_argument("translate_image: image size mismatch");
  }
  GraphSignal out(img.size(), 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int sr = r - dy;
      const int sc = c - dx;
      if (sr < 0 || sr >= height || sc < 0 || sc >= width) continue;
      out[static_cast<std::size_t>(vertex_index(r, c, width))] =
          img[static_cast<std::size_t>(vertex_index(sr, sc, width))];
    }
  }
  return out;
}

// Whole-canvas bilinear resize (used to shrink digits so rotations keep the
// content in frame).
inline GraphSignal resize_bilinear(const GraphSignal& img, int height,
                                   int width, int new_height, int new_width) {
  if (static_cast<int>(img.size()) != height * width) {
    throw std::invalid_argument("resize_bilinear: image size mismatch");
  }
  GraphSignal out(static_cast<std::size_t>(new_height) * new_width, 0.0);
  const double sy = static_cast<double>(height) / new_height;
  const double sx = static_cast<double>(width) / new_width;
  for (int r = 0; r < new_height; ++r) {
    for (int c = 0; c < new_width; ++c) {
      const double src_y = std::clamp((r + 0.5) * sy - 0.5, 0.0, height - 1.0);
      const double src_x = std::clamp((c + 0.5) * sx - 0.5, 0.0, width - 1.0);
      const int y0 = static_cast<int>(std::floor(src_y));
      const int x0 = static_cast<int>(std::floor(src_x));
      const int y1 = std::min(y0 + 1, height - 1);
      const int x1 = std::min(x0 + 1, width - 1);
      const double fy = src_y - y0;
      const double fx = src_x - x0;
      const double top = (1.0 - fx) * img[static_cast<std::size_t>(vertex_index(y0, x0, width))] +
                         fx * img[static_cast<std::size_t>(vertex_index(y0, x1, width))];
      const double bottom = (1.0 - fx) * img[static_cast<std::size_t>(vertex_index(y1, x0, width))] +
                            fx * img[static_cast<std::size_t>(vertex_index(y1, x1, width))];
      out[static_cast<std::size_t>(vertex_index(r, c, new_width))] =
          (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

// Centers an image on a larger zero canvas.
inline GraphSignal center_pad(const GraphSignal& img, int height, int width,
                              int new_height, int new_width) {
  if (new_height < height || new_width < width) {
    throw std::invalid_argument("center_pad: target canvas too small");
  }
  GraphSignal out(static_cast<std::size_t>(new_height) * new_width, 0.0);
  const int off_r = (new_height - height) / 2;
  const int off_c = (new_width - width) / 2;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      out[static_cast<std::size_t>(vertex_index(r + off_r, c + off_c, new_width))] =
          img[static_cast<std::size_t>(vertex_index(r, c, width))];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset construction
// ---------------------------------------------------------------------------

enum class TransformKind { none, rotate, translate };

inline const char* to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::none: return "none";
    case TransformKind::rotate: return "rotate";
    case TransformKind::translate: return "translate";
  }
  return "none";
}

// One audit row per example: the source index it was drawn from, its label,
// and the transform applied to it.
struct ManifestEntry {
  int source_index = 0;
  int label = 0;
  TransformKind kind = TransformKind::none;
  double param1 = 0.0;
  double param2 = 0.0;
};

struct DatasetSplits {
  ImageDataset train;
  ImageDataset val;
  ImageDataset test;
  // The test images before their transform, on the same canvas; lets
  // evaluation re-sample transforms without reloading the source.
  ImageDataset plain_test;
  std::vector<ManifestEntry> train_manifest;
  std::vector<ManifestEntry> val_manifest;
  std::vector<ManifestEntry> test_manifest;
  TransformKind test_transform = TransformKind::none;
};

namespace detail {

inline std::vector<std::size_t> shuffled_indices(std::size_t count,
                                                 SplitMix64& rng) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  for (std::size_t i = count; i-- > 1;) {
    const std::size_t j = rng.below(i + 1);
    std::swap(order[i], order[j]);
  }
  return order;
}

}  // namespace detail

// 500 train / 100 validation / 100 test images with labels 0, 1 and 2,
// sampled without replacement; splits are pairwise disjoint and the test
// split is untransformed (evaluation rotates on the fly).
inline DatasetSplits make_mnist012(const ImageDataset& source,
                                   std::uint64_t seed) {
  constexpr std::size_t kTrain = 500;
  constexpr std::size_t kVal = 100;
  constexpr std::size_t kTest = 100;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source.labels[i] >= 0 && source.labels[i] <= 2) candidates.push_back(i);
  }
  if (candidates.size() < kTrain + kVal + kTest) {
    throw std::invalid_argument(
        "make_mnist012: need at least 700 images labeled 0/1/2, found " +
        std::to_string(candidates.size()));
  }
  SplitMix64 rng(seed);
  const std::vector<std::size_t> order =
      detail::shuffled_indices(candidates.size(), rng);

  DatasetSplits splits;
  splits.test_transform = TransformKind::rotate;
  auto emit = [&](ImageDataset& ds, std::vector<ManifestEntry>& manifest,
                  std::size_t begin, std::size_t count) {
    ds.height = source.height;
    ds.width = source.width;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t src = candidates[order[begin + k]];
      ds.images.push_back(source.images[src]);
      ds.labels.push_back(source.labels[src]);
      manifest.push_back(ManifestEntry{static_cast<int>(src),
                                       source.labels[src],
                                       TransformKind::none, 0.0, 0.0});
    }
  };
  emit(splits.train, splits.train_manifest, 0, kTrain);
  emit(splits.val, splits.val_manifest, kTrain, kVal);
  emit(splits.test, splits.test_manifest, kTrain + kVal, kTest);
  splits.plain_test = splits.test;
  return splits;
}

enum class VariantKind { rot, trans };

struct SubsampleCaps {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

// Adapts one example to the variant canvas: rot shrinks by 26/28 so rotated
// corners stay in frame, trans pads by 3 pixels on each side.
inline GraphSignal variant_canvas(const GraphSignal& img, int height,
                                  int width, VariantKind kind, int& out_height,
                                  int& out_width) {
  if (kind == VariantKind::rot) {
    out_height = (height * 26 + 14) / 28;
    out_width = (width * 26 + 14) / 28;
    return resize_bilinear(img, height, width, out_height, out_width);
  }
  out_height = height + 6;
  out_width = width + 6;
  return center_pad(img, height, width, out_height, out_width);
}

// Builds the rotation / translation variants: label 9 is dropped (its
// rotated form resembles 6), train and validation stay untransformed, and
// each test image receives a random transform drawn from the seed. Default
// split sizes are 50000/3000/9000; subsample caps shrink them for small runs.
inline DatasetSplits make_variant(const ImageDataset& source, VariantKind kind,
                                  std::uint64_t seed,
                                  std::optional<SubsampleCaps> subsample = {}) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source.labels[i] != 9) candidates.push_back(i);
  }
  std::size_t want_train = 50000;
  std::size_t want_val = 3000;
  std::size_t want_test = 9000;
  if (subsample) {
    want_train = std::min(want_train, subsample->train);
    want_val = std::min(want_val, subsample->val);
    want_test = std::min(want_test, subsample->test);
  }
  if (want_train == 0 || want_val == 0 || want_test == 0) {
    throw std::invalid_argument("make_variant: split sizes must be nonzero");
  }
  if (candidates.size() < want_train + want_val + want_test) {
    throw std::invalid_argument(
        "make_variant: source has only " + std::to_string(candidates.size()) +
        " usable images; need " +
        std::to_string(want_train + want_val + want_test) +
        " (use subsample caps)");
  }
  SplitMix64 rng(seed);
  const std::vector<std::size_t> order =
      detail::shuffled_indices(candidates.size(), rng);

  DatasetSplits splits;
  splits.test_transform =
      kind == VariantKind::rot ? TransformKind::rotate : TransformKind::translate;

  int canvas_h = 0;
  int canvas_w = 0;
  auto emit_plain = [&](ImageDataset& ds, std::vector<ManifestEntry>& manifest,
                        std::size_t begin, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t src = candidates[order[begin + k]];
      ds.images.push_back(variant_canvas(source.images[src], source.height,
                                         source.width, kind, canvas_h,
                                         canvas_w));
      ds.labels.push_back(source.labels[src]);
      manifest.push_back(ManifestEntry{static_cast<int>(src),
                                       source.labels[src],
                                       TransformKind::none, 0.0, 0.0});
    }
    ds.height = canvas_h;
    ds.width = canvas_w;
  };
  emit_plain(splits.train, splits.train_manifest, 0, want_train);
  emit_plain(splits.val, splits.val_manifest, want_train, want_val);
  emit_plain(splits.plain_test, splits.test_manifest, want_train + want_val,
             want_test);

  splits.test.height = splits.plain_test.height;
  splits.test.width = splits.plain_test.width;
  splits.test.labels = splits.plain_test.labels;
  for (std::size_t i = 0; i < splits.plain_test.size(); ++i) {
    SplitMix64 img_rng(SplitMix64::derive(seed, 10000 + i));
    ManifestEntry& entry = splits.test_manifest[i];
    if (kind == VariantKind::rot) {
      const double angle = img_rng.uniform(0.0, 360.0);
      entry.kind = TransformKind::rotate;
      entry.param1 = angle;
      splits.test.images.push_back(rotate_image(splits.plain_test.images[i],
                                                splits.test.height,
                                                splits.test.width, angle));
    } else {
      const int dx = static_cast<int>(img_rng.below(13)) - 6;
      const int dy = static_cast<int>(img_rng.below(13)) - 6;
      entry.kind = TransformKind::translate;
      entry.param1 = dx;
      entry.param2 = dy;
      splits.test.images.push_back(translate_image(splits.plain_test.images[i],
                                                   splits.test.height,
                                                   splits.test.width, dx, dy));
    }
  }
  return splits;
}

}  // namespace tigranet

#endif  // TIGRANET_DATA_HPP
