#ifndef TIGRANET_SPECTRAL_ORACLE_HPP
#define TIGRANET_SPECTRAL_ORACLE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tigranet/graph.hpp"
#include "tigranet/spectral.hpp"

namespace tigranet {

// Dense eigendecomposition of the Laplacian. Validation-scale only: it is
// the independent route against which the sparse polynomial path is checked,
// and it backs the generalized translation utility.
//
// Eigenvalues ascend; each eigenvector is normalized with its first
// component of magnitude > 1e-12 made positive so decompositions are
// reproducible.
class SpectralOracle {
 public:
  static constexpr int kMaxVertices = 4096;

  explicit SpectralOracle(const NormalizedLaplacian& lap) {
    const int n = lap.size();
    if (n > kMaxVertices) {
      throw std::invalid_argument(
          "SpectralOracle: dense oracle is limited to test-scale graphs "
          "(N <= 4096)");
    }
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    const SparseMatrix& m = lap.matrix;
    for (int r = 0; r < n; ++r) {
      for (int p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) {
        dense(r, m.col_idx[p]) = m.values[p];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("SpectralOracle: eigendecomposition failed");
    }
    n_ = n;
    eigenvalues_.assign(solver.eigenvalues().data(),
                        solver.eigenvalues().data() + n);
    eigenvectors_.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v = solver.eigenvectors().col(i);
      for (int r = 0; r < n; ++r) {
        if (std::abs(v(r)) > 1e-12) {
          if (v(r) < 0.0) v = -v;
          break;
        }
      }
      for (int r = 0; r < n; ++r) {
        eigenvectors_[static_cast<std::size_t>(i) * n + r] = v(r);
      }
    }
  }

  int size() const { return n_; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

  // Component v of eigenvector i.
  double eigenvector(int i, int v) const {
    return eigenvectors_[static_cast<std::size_t>(i) * n_ + v];
  }

  // Graph Fourier transform: coefficient of y on eigenvector i.
  double fourier_coefficient(int i, const GraphSignal& y) const {
    double acc = 0.0;
    for (int v = 0; v < n_; ++v) acc += eigenvector(i, v) * y[static_cast<std::size_t>(v)];
    return acc;
  }

  // Applies an arbitrary spectral multiplier: out = chi diag(h(lambda)) chi^T y.
  template <typename ResponseFn>
  GraphSignal apply_response(ResponseFn&& response, const GraphSignal& y) const {
    if (static_cast<int>(y.size()) != n_) {
      throw std::invalid_argument("SpectralOracle: signal length mismatch");
    }
    GraphSignal out(y.size(), 0.0);
    for (int i = 0; i < n_; ++i) {
      const double scale =
          response(eigenvalues_[static_cast<std::size_t>(i)]) *
          fourier_coefficient(i, y);
      for (int v = 0; v < n_; ++v) {
        out[static_cast<std::size_t>(v)] += scale * eigenvector(i, v);
      }
    }
    return out;
  }

 private:
  int n_ = 0;
  std::vector<double> eigenvalues_;
  std::vector<double> eigenvectors_;  // row i = eigenvector i
};

// Spectral-domain evaluation of a polynomial filter. The reference route for
// filter_matvec: identical result, computed through the eigenbasis.
inline GraphSignal oracle_filter(const SpectralOracle& oracle,
                                 const PolynomialFilter& f,
                                 const GraphSignal& y) {
  return oracle.apply_response(
      [&f](double lambda) { return f.response_at(lambda); }, y);
}

// Generalized translation of y to the given center vertex:
// sqrt(N) * sum_i yhat(lambda_i) chi_i(center) chi_i.
inline GraphSignal translate_signal(const SpectralOracle& oracle,
                                    const GraphSignal& y, int center) {
  const int n = oracle.size();
  if (center < 0 || center >= n) {
    throw std::invalid_argument("translate_signal: center index out of range");
  }
  if (static_cast<int>(y.size()) != n) {
    throw std::invalid_argument("translate_signal: signal length mismatch");
  }
  GraphSignal out(y.size(), 0.0);
  const double root_n = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    const double scale =
        root_n * oracle.fourier_coefficient(i, y) * oracle.eigenvector(i, center);
    for (int v = 0; v < n; ++v) {
      out[static_cast<std::size_t>(v)] += scale * oracle.eigenvector(i, v);
    }
  }
  return out;
}

}  // namespace tigranet

#endif  // TIGRANET_SPECTRAL_ORACLE_HPP
