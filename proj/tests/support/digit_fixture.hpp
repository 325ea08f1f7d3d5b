#ifndef TIGRANET_TESTS_SUPPORT_DIGIT_FIXTURE_HPP
#define TIGRANET_TESTS_SUPPORT_DIGIT_FIXTURE_HPP

// Procedural stand-in for the MNIST corpus: digits 0-9 rendered from stroke
// skeletons with per-sample jitter in position, scale, pen width and control
// points, rasterized at 28x28 with a one-pixel feather. Deterministic per
// seed, emitted through the same IDX writer the library ships.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "tigranet/data.hpp"
#include "tigranet/graph.hpp"
#include "tigranet/rng.hpp"

namespace tigranet::testing {

namespace digit_detail {

struct Point {
  double x;
  double y;
};

using Polyline = std::vector<Point>;

inline Polyline ring(double cx, double cy, double rx, double ry,
                     int segments = 14) {
  Polyline p;
  for (int i = 0; i <= segments; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * i / segments;
    p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return p;
}

// Stroke skeletons in a unit box, x right, y down.
inline std::vector<Polyline> strokes_for_digit(int digit) {
  switch (digit) {
    case 0:
      return {ring(0.5, 0.5, 0.24, 0.34)};
    case 1:
      return {{{0.52, 0.14}, {0.52, 0.86}}, {{0.36, 0.3}, {0.52, 0.14}}};
    case 2:
      return {{{0.3, 0.3},
               {0.36, 0.18},
               {0.53, 0.14},
               {0.67, 0.21},
               {0.69, 0.34},
               {0.55, 0.52},
               {0.3, 0.85}},
              {{0.3, 0.85}, {0.72, 0.85}}};
    case 3:
      return {{{0.32, 0.2}, {0.5, 0.14}, {0.65, 0.24}, {0.62, 0.4}, {0.47, 0.48}},
              {{0.47, 0.48},
               {0.66, 0.56},
               {0.68, 0.72},
               {0.52, 0.86},
               {0.32, 0.79}}};
    case 4:
      return {{{0.63, 0.86}, {0.63, 0.14}},
              {{0.63, 0.14}, {0.3, 0.62}},
              {{0.3, 0.62}, {0.76, 0.62}}};
    case 5:
      return {{{0.68, 0.15}, {0.36, 0.15}},
              {{0.36, 0.15}, {0.34, 0.46}},
              {{0.34, 0.46},
               {0.55, 0.42},
               {0.68, 0.55},
               {0.66, 0.72},
               {0.5, 0.85},
               {0.33, 0.78}}};
    case 6:
      return {{{0.6, 0.14}, {0.45, 0.22}, {0.36, 0.42}, {0.33, 0.62}},
              ring(0.49, 0.66, 0.17, 0.19)};
    case 7:
      return {{{0.3, 0.15}, {0.71, 0.15}}, {{0.71, 0.15}, {0.44, 0.86}}};
    case 8:
      return {ring(0.5, 0.32, 0.16, 0.17), ring(0.5, 0.66, 0.19, 0.19)};
    case 9:
      return {ring(0.51, 0.34, 0.17, 0.19),
              {{0.67, 0.38}, {0.64, 0.62}, {0.55, 0.86}}};
    default:
      return {};
  }
}

inline double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len_sq = vx * vx + vy * vy;
  double t = len_sq > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx);
  const double dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace digit_detail

// One jittered 28x28 rendering of the digit. Pen width and feather are tuned
// to MNIST-like thick, anti-aliased strokes; thin sharp strokes lose too much
// intensity under bilinear rotation for rotated-test evaluation to be
// meaningful.
inline GraphSignal render_digit(int digit, SplitMix64& rng, int side = 28) {
  using digit_detail::Point;
  const double scale = rng.uniform(0.75, 0.95);
  const double shift_x = rng.uniform(-0.04, 0.04);
  const double shift_y = rng.uniform(-0.04, 0.04);
  const double pen = rng.uniform(0.09, 0.12);

  std::vector<digit_detail::Polyline> strokes =
      digit_detail::strokes_for_digit(digit);
  for (auto& stroke : strokes) {
    for (Point& p : stroke) {
      p.x = 0.5 + scale * (p.x - 0.5 + rng.uniform(-0.018, 0.018)) + shift_x;
      p.y = 0.5 + scale * (p.y - 0.5 + rng.uniform(-0.018, 0.018)) + shift_y;
    }
  }

  GraphSignal img(static_cast<std::size_t>(side) * side, 0.0);
  const double feather = 2.5 / side;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const Point pixel{(c + 0.5) / side, (r + 0.5) / side};
      double dist = 1e9;
      for (const auto& stroke : strokes) {
        for (std::size_t s = 0; s + 1 < stroke.size(); ++s) {
          dist = std::min(dist, digit_detail::segment_distance(
                                    pixel, stroke[s], stroke[s + 1]));
        }
      }
      const double v = std::clamp((pen + feather - dist) / feather, 0.0, 1.0);
      img[static_cast<std::size_t>(vertex_index(r, c, side))] = v;
    }
  }
  return img;
}

// A labeled corpus in MNIST shape: `per_digit` renderings of every digit in
// `digits`, shuffled, 28x28.
inline ImageDataset render_digit_corpus(const std::vector<int>& digits,
                                        int per_digit, std::uint64_t seed) {
  ImageDataset ds;
  ds.height = 28;
  ds.width = 28;
  SplitMix64 rng(seed);
  for (int digit : digits) {
    for (int i = 0; i < per_digit; ++i) {
      ds.images.push_back(render_digit(digit, rng));
      ds.labels.push_back(digit);
    }
  }
  // Shuffle so splits draw a class mix.
  for (std::size_t i = ds.images.size(); i-- > 1;) {
    const std::size_t j = rng.below(i + 1);
    std::swap(ds.images[i], ds.images[j]);
    std::swap(ds.labels[i], ds.labels[j]);
  }
  return ds;
}

}  // namespace tigranet::testing

#endif  // TIGRANET_TESTS_SUPPORT_DIGIT_FIXTURE_HPP
