#ifndef TIGRANET_SPECTRAL_HPP
#define TIGRANET_SPECTRAL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tigranet/graph.hpp"

namespace tigranet {

// Polynomial filter on the Laplacian: F = sum_m coeffs[m] * L^m.
// Spectral response h(lambda) = sum_m coeffs[m] * lambda^m on [0, 2].
struct PolynomialFilter {
  std::vector<double> coefficients;  // index m holds the L^m coefficient

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }

  double response_at(double lambda) const {
    double acc = 0.0;
    for (std::size_t m = coefficients.size(); m-- > 0;) {
      acc = acc * lambda + coefficients[m];
    }
    return acc;
  }
};

// Applies sum_m coeffs[m] L^m y by Horner iteration of sparse matvecs.
// L^m is never materialized; cost is degree() matvecs.
inline GraphSignal filter_matvec(const NormalizedLaplacian& lap,
                                 const PolynomialFilter& f,
                                 const GraphSignal& y) {
  if (f.coefficients.empty()) {
    throw std::invalid_argument("filter_matvec: empty coefficient vector");
  }
  if (static_cast<int>(y.size()) != lap.size()) {
    throw std::invalid_argument("filter_matvec: signal length mismatch");
  }
  const int m = f.degree();
  GraphSignal acc(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    acc[i] = f.coefficients[static_cast<std::size_t>(m)] * y[i];
  }
  GraphSignal tmp(y.size());
  for (int k = m - 1; k >= 0; --k) {
    lap.matrix.matvec(acc.data(), tmp.data());
    const double c = f.coefficients[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < y.size(); ++i) {
      acc[i] = tmp[i] + c * y[i];
    }
  }
  return acc;
}

// Chebyshev signals t_k on the shifted operator Lt = L - I (spectrum in
// [-1, 1]): t_0 = z, t_1 = Lt z, t_k = 2 Lt t_{k-1} - t_{k-2}.
inline std::vector<GraphSignal> chebyshev_sequence(
    const NormalizedLaplacian& lap, const GraphSignal& z, int k_max) {
  if (k_max < 0) {
    throw std::invalid_argument("chebyshev_sequence: k_max must be >= 0");
  }
  if (static_cast<int>(z.size()) != lap.size()) {
    throw std::invalid_argument("chebyshev_sequence: signal length mismatch");
  }
  std::vector<GraphSignal> t;
  t.reserve(static_cast<std::size_t>(k_max) + 1);
  t.push_back(z);
  if (k_max == 0) return t;

  auto shifted_apply = [&lap](const GraphSignal& x) {
    GraphSignal out = lap.matrix.matvec(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] -= x[i];
    return out;
  };
  t.push_back(shifted_apply(z));
  for (int k = 2; k <= k_max; ++k) {
    GraphSignal next = shifted_apply(t[static_cast<std::size_t>(k - 1)]);
    const GraphSignal& prev = t[static_cast<std::size_t>(k - 2)];
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = 2.0 * next[i] - prev[i];
    }
    t.push_back(std::move(next));
  }
  return t;
}

// Rectangular spectral window: indicator of the open interval (a, b).
struct SpectralWindow {
  double a = 0.0;
  double b = 2.0;

  double indicator(double lambda) const {
    return (lambda > a && lambda < b) ? 1.0 : 0.0;
  }
};

namespace detail {

constexpr int kWindowFitSamples = 256;

// Least-squares fit of samples (x_j, w_j) by a degree-m polynomial in the
// power basis, solved by column-pivoted QR.
inline std::vector<double> fit_polynomial(const std::vector<double>& xs,
                                          const std::vector<double>& ws,
                                          int degree) {
  const int n = static_cast<int>(xs.size());
  Eigen::MatrixXd vand(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (int j = 0; j < n; ++j) {
    double p = 1.0;
    for (int m = 0; m <= degree; ++m) {
      vand(j, m) = p;
      p *= xs[static_cast<std::size_t>(j)];
    }
    rhs(j) = ws[static_cast<std::size_t>(j)];
  }
  Eigen::VectorXd sol = vand.colPivHouseholderQr().solve(rhs);
  std::vector<double> coeffs(static_cast<std::size_t>(degree) + 1);
  for (int m = 0; m <= degree; ++m) coeffs[static_cast<std::size_t>(m)] = sol(m);
  return coeffs;
}

}  // namespace detail

// The windows used to seed a bank of num_filters filters: equal width
// 4/(Z+1), left edges at 2i/(Z+1), 50% overlap, jointly covering [0, 2].
inline std::vector<SpectralWindow> filter_bank_windows(int num_filters) {
  if (num_filters < 1) {
    throw std::invalid_argument("filter_bank_windows: need >= 1 window");
  }
  std::vector<SpectralWindow> windows;
  windows.reserve(static_cast<std::size_t>(num_filters));
  const double step = 2.0 / (num_filters + 1);
  for (int i = 0; i < num_filters; ++i) {
    windows.push_back(SpectralWindow{i * step, i * step + 2.0 * step});
  }
  return windows;
}

// Initial filter coefficients: each rectangular window is approximated by a
// degree-M polynomial via least squares over 256 uniform samples of [0, 2].
inline std::vector<PolynomialFilter> init_filter_bank(int num_filters,
                                                      int degree) {
  if (num_filters < 1) {
    throw std::invalid_argument("init_filter_bank: need >= 1 filter");
  }
  if (degree < 1) {
    throw std::invalid_argument("init_filter_bank: degree must be >= 1");
  }
  std::vector<double> xs(detail::kWindowFitSamples);
  for (int j = 0; j < detail::kWindowFitSamples; ++j) {
    xs[static_cast<std::size_t>(j)] =
        2.0 * j / (detail::kWindowFitSamples - 1);
  }
  std::vector<PolynomialFilter> bank;
  bank.reserve(static_cast<std::size_t>(num_filters));
  for (const SpectralWindow& w : filter_bank_windows(num_filters)) {
    std::vector<double> ws(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) ws[j] = w.indicator(xs[j]);
    bank.push_back(PolynomialFilter{detail::fit_polynomial(xs, ws, degree)});
  }
  return bank;
}

// Samples the spectral response on a uniform grid over [0, 2]; the CLI dumps
// this as CSV for plotting trained filters.
inline std::vector<std::pair<double, double>> spectral_response(
    const PolynomialFilter& f, int samples) {
  if (samples < 2) {
    throw std::invalid_argument("spectral_response: need >= 2 samples");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) {
    const double lambda = 2.0 * j / (samples - 1);
    out.emplace_back(lambda, f.response_at(lambda));
  }
  return out;
}

}  // namespace tigranet

#endif  // TIGRANET_SPECTRAL_HPP
