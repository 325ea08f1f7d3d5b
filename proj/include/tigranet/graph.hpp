#ifndef TIGRANET_GRAPH_HPP
#define TIGRANET_GRAPH_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tigranet {

// A per-vertex real value; the universal datum flowing between layers.
using GraphSignal = std::vector<double>;

// Compressed-row sparse matrix with sorted column indices per row.
// Rows are immutable after construction; matvec is allocation-free.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;   // size rows + 1
  std::vector<int> col_idx;   // sorted within each row
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  void matvec(const double* x, double* y) const {
    for (int r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
        acc += values[p] * x[col_idx[p]];
      }
      y[r] = acc;
    }
  }

  GraphSignal matvec(const GraphSignal& x) const {
    if (static_cast<int>(x.size()) != cols) {
      throw std::invalid_argument("SparseMatrix::matvec: length mismatch");
    }
    GraphSignal y(static_cast<std::size_t>(rows));
    matvec(x.data(), y.data());
    return y;
  }

  double at(int r, int c) const {
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      if (col_idx[p] == c) return values[p];
      if (col_idx[p] > c) break;
    }
    return 0.0;
  }
};

// Image grid graph: one vertex per pixel, 8-neighbor connectivity with unit
// edge weights. Vertex index of pixel (r, c) is r * width + c.
struct GridGraph {
  int height = 0;
  int width = 0;
  int num_vertices = 0;
  SparseMatrix adjacency;
  std::vector<double> degrees;
};

inline int vertex_index(int r, int c, int width) { return r * width + c; }

inline std::pair<int, int> vertex_coords(int v, int width) {
  return {v / width, v % width};
}

inline GridGraph build_grid_graph(int height, int width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("build_grid_graph: dimensions must be >= 1");
  }
  if (height * width < 2) {
    throw std::invalid_argument("build_grid_graph: need at least 2 vertices");
  }
  GridGraph g;
  g.height = height;
  g.width = width;
  g.num_vertices = height * width;

  SparseMatrix& a = g.adjacency;
  a.rows = a.cols = g.num_vertices;
  a.row_ptr.assign(static_cast<std::size_t>(g.num_vertices) + 1, 0);
  g.degrees.assign(static_cast<std::size_t>(g.num_vertices), 0.0);

  // Offsets in row-major order so column indices come out sorted.
  constexpr int kOffsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                  {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int v = vertex_index(r, c, width);
      for (const auto& off : kOffsets) {
        const int nr = r + off[0];
        const int nc = c + off[1];
        if (nr < 0 || nr >= height || nc < 0 || nc >= width) continue;
        a.col_idx.push_back(vertex_index(nr, nc, width));
        a.values.push_back(1.0);
        a.row_ptr[static_cast<std::size_t>(v) + 1]++;
        g.degrees[static_cast<std::size_t>(v)] += 1.0;
      }
    }
  }
  for (std::size_t i = 1; i < a.row_ptr.size(); ++i) {
    a.row_ptr[i] += a.row_ptr[i - 1];
  }
  return g;
}

// Symmetric normalized Laplacian L = I - D^{-1/2} A D^{-1/2}.
// Positive semidefinite with spectrum contained in [0, 2].
struct NormalizedLaplacian {
  SparseMatrix matrix;
  static constexpr double spectrum_bound = 2.0;

  int size() const { return matrix.rows; }

  GraphSignal apply(const GraphSignal& x) const { return matrix.matvec(x); }
};

inline NormalizedLaplacian normalized_laplacian(const GridGraph& g) {
  const int n = g.num_vertices;
  for (int v = 0; v < n; ++v) {
    if (g.degrees[static_cast<std::size_t>(v)] <= 0.0) {
      throw std::invalid_argument(
          "normalized_laplacian: isolated vertex (degree 0) at index " +
          std::to_string(v));
    }
  }
  std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    inv_sqrt_deg[static_cast<std::size_t>(v)] =
        1.0 / std::sqrt(g.degrees[static_cast<std::size_t>(v)]);
  }

  NormalizedLaplacian lap;
  SparseMatrix& l = lap.matrix;
  const SparseMatrix& a = g.adjacency;
  l.rows = l.cols = n;
  l.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  l.col_idx.reserve(a.nnz() + static_cast<std::size_t>(n));
  l.values.reserve(a.nnz() + static_cast<std::size_t>(n));

  for (int r = 0; r < n; ++r) {
    bool diag_emitted = false;
    for (int p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const int c = a.col_idx[p];
      if (!diag_emitted && c > r) {
        l.col_idx.push_back(r);
        l.values.push_back(1.0);
        diag_emitted = true;
      }
      l.col_idx.push_back(c);
      l.values.push_back(-a.values[p] * inv_sqrt_deg[static_cast<std::size_t>(r)] *
                         inv_sqrt_deg[static_cast<std::size_t>(c)]);
    }
    if (!diag_emitted) {
      l.col_idx.push_back(r);
      l.values.push_back(1.0);
    }
    l.row_ptr[static_cast<std::size_t>(r) + 1] =
        static_cast<int>(l.col_idx.size());
  }
  return lap;
}

// Vertex permutations of the grid used by the isometry tests and tools.
// Dihedral kinds are graph automorphisms of the square grid; shifts are
// partial maps valid only where the shifted position stays in-bounds.
enum class AutomorphismKind {
  identity,
  rot90,
  rot180,
  rot270,
  flip_h,
  flip_v,
  transpose,
  anti_transpose,
  shift,
};

struct GridAutomorphism {
  AutomorphismKind kind = AutomorphismKind::identity;
  int height = 0;
  int width = 0;
  int dr = 0;  // shift only
  int dc = 0;  // shift only
  // perm[i] = image vertex of i; -1 for out-of-bounds shift targets.
  std::vector<int> perm;
};

inline GridAutomorphism make_automorphism(AutomorphismKind kind, int height,
                                          int width) {
  const bool needs_square = kind == AutomorphismKind::rot90 ||
                            kind == AutomorphismKind::rot270 ||
                            kind == AutomorphismKind::transpose ||
                            kind == AutomorphismKind::anti_transpose;
  if (needs_square && height != width) {
    throw std::invalid_argument(
        "make_automorphism: this kind requires a square grid");
  }
  if (kind == AutomorphismKind::shift) {
    throw std::invalid_argument("make_automorphism: use make_shift");
  }
  GridAutomorphism p;
  p.kind = kind;
  p.height = height;
  p.width = width;
  p.perm.resize(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      int tr = r;
      int tc = c;
      switch (kind) {
        case AutomorphismKind::identity: break;
        // rot90 sends (r, c) to (c, h-1-r): a quarter turn of the image.
        case AutomorphismKind::rot90: tr = c; tc = height - 1 - r; break;
        case AutomorphismKind::rot180: tr = height - 1 - r; tc = width - 1 - c; break;
        case AutomorphismKind::rot270: tr = width - 1 - c; tc = r; break;
        case AutomorphismKind::flip_h: tr = r; tc = width - 1 - c; break;
        case AutomorphismKind::flip_v: tr = height - 1 - r; tc = c; break;
        case AutomorphismKind::transpose: tr = c; tc = r; break;
        case AutomorphismKind::anti_transpose:
          tr = width - 1 - c; tc = height - 1 - r; break;
        case AutomorphismKind::shift: break;
      }
      p.perm[static_cast<std::size_t>(vertex_index(r, c, width))] =
          vertex_index(tr, tc, width);
    }
  }
  return p;
}

inline GridAutomorphism make_shift(int height, int width, int dr, int dc) {
  GridAutomorphism p;
  p.kind = AutomorphismKind::shift;
  p.height = height;
  p.width = width;
  p.dr = dr;
  p.dc = dc;
  p.perm.resize(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int tr = r + dr;
      const int tc = c + dc;
      const bool in = tr >= 0 && tr < height && tc >= 0 && tc < width;
      p.perm[static_cast<std::size_t>(vertex_index(r, c, width))] =
          in ? vertex_index(tr, tc, width) : -1;
    }
  }
  return p;
}

// All eight dihedral automorphisms of a square grid, identity included.
inline std::vector<GridAutomorphism> all_dihedral(int side) {
  std::vector<GridAutomorphism> out;
  for (AutomorphismKind k :
       {AutomorphismKind::identity, AutomorphismKind::rot90,
        AutomorphismKind::rot180, AutomorphismKind::rot270,
        AutomorphismKind::flip_h, AutomorphismKind::flip_v,
        AutomorphismKind::transpose, AutomorphismKind::anti_transpose}) {
    out.push_back(make_automorphism(k, side, side));
  }
  return out;
}

// output(p(i)) = input(i). Shift kinds drop vertices whose image leaves the
// grid; a nonzero value falling off the grid is an error.
inline GraphSignal apply_automorphism(const GridAutomorphism& p,
                                      const GraphSignal& y) {
  if (y.size() != p.perm.size()) {
    throw std::invalid_argument("apply_automorphism: signal length mismatch");
  }
  GraphSignal out(y.size(), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int target = p.perm[i];
    if (target < 0) {
      if (y[i] != 0.0) {
        throw std::out_of_range(
            "apply_automorphism: shift moves nonzero support out of bounds");
      }
      continue;
    }
    out[static_cast<std::size_t>(target)] = y[i];
  }
  return out;
}

}  // namespace tigranet

#endif  // TIGRANET_GRAPH_HPP
