#pragma once

// Adaptive quadrature on finite and semi-infinite intervals, a Filon-type rule
// for integrands g(x) exp(i p x), and convergence-controlled series summation.
//
// Integrands may return double, std::complex<double>, or a fixed-size Eigen
// column vector of either. Vector results are converged component by component.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "chiralcp/errors.hpp"

namespace chiralcp::quad {

enum class OscillatoryMethod { filon, panel_per_half_period };

struct QuadratureConfig {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  int max_subdivisions = 400;
  OscillatoryMethod oscillatory_method = OscillatoryMethod::filon;

  void validate() const;
};

struct SeriesConfig {
  double rel_tol = 1e-10;
  int min_terms = 1;
  int max_terms = 2'000'000;
  int tail_check_window = 3;  // consecutive small terms required to stop

  void validate() const;
};

template <class V>
struct Estimate {
  V value;
  double error = 0.0;  // largest component error estimate
  int evaluations = 0;
  int subdivisions = 0;
};

template <class V>
struct SeriesSum {
  V value;
  int terms = 0;
};

namespace detail {

inline constexpr int kMaxComponents = 8;
inline constexpr double kPi = 3.14159265358979323846;

template <class V, class = void>
struct ValueTraits;

template <>
struct ValueTraits<double> {
  static constexpr int size = 1;
  static double zero() { return 0.0; }
  static double abs(double v, int) { return std::abs(v); }
  static std::complex<double> get(double v, int) { return v; }
};

template <>
struct ValueTraits<std::complex<double>> {
  static constexpr int size = 1;
  static std::complex<double> zero() { return {}; }
  static double abs(const std::complex<double>& v, int) { return std::abs(v); }
  static std::complex<double> get(const std::complex<double>& v, int) { return v; }
};

template <class V>
struct ValueTraits<V, std::enable_if_t<std::is_base_of_v<Eigen::MatrixBase<V>, V>>> {
  static_assert(V::ColsAtCompileTime == 1 && V::RowsAtCompileTime > 0, "fixed-size column vectors only");
  static constexpr int size = V::RowsAtCompileTime;
  static_assert(size <= kMaxComponents);
  static V zero() { return V::Zero(); }
  static double abs(const V& v, int i) { return std::abs(v(i)); }
  static std::complex<double> get(const V& v, int i) { return std::complex<double>(v(i)); }
};

template <class V>
struct Complexified {
  using type = std::complex<double>;
};
template <>
struct Complexified<std::complex<double>> {
  using type = std::complex<double>;
};
template <class V>
  requires std::is_base_of_v<Eigen::MatrixBase<V>, V>
struct Complexified<V> {
  using type = Eigen::Matrix<std::complex<double>, V::RowsAtCompileTime, 1>;
};

template <class V>
using ComplexOf = typename Complexified<V>::type;

template <class V>
ComplexOf<V> to_complex(const V& v) {
  if constexpr (std::is_base_of_v<Eigen::MatrixBase<V>, V>) {
    return v.template cast<std::complex<double>>();
  } else {
    return ComplexOf<V>(v);
  }
}

template <class V>
std::vector<std::complex<double>> flatten(const V& v) {
  std::vector<std::complex<double>> out;
  for (int i = 0; i < ValueTraits<V>::size; ++i) out.push_back(ValueTraits<V>::get(v, i));
  return out;
}

using Errors = std::array<double, kMaxComponents>;

// Node tables (defined in quadrature.cpp).
struct GaussKronrod21 {
  std::array<double, 21> x;   // nodes on [-1, 1]
  std::array<double, 21> wk;  // Kronrod weights
  std::array<double, 21> wg;  // embedded 10-point Gauss weights (0 at Kronrod-only nodes)
};
const GaussKronrod21& gauss_kronrod21();

inline constexpr int kFilonOrder = 20;
struct FilonTable {
  std::array<double, kFilonOrder> x;  // Gauss-Legendre nodes
  std::array<double, kFilonOrder> w;
  // projection[n][j] = (2n+1)/2 * w_j * P_n(x_j): Legendre coefficient c_n = sum_j projection[n][j] g(x_j)
  std::array<std::array<double, kFilonOrder>, kFilonOrder> projection;
};
const FilonTable& filon_table();

/// Fills out[n] = j_n(x) for n = 0 .. count-1 (spherical Bessel functions of the first kind).
void spherical_bessel_sequence(double x, int count, double* out);

template <class V>
struct Panel {
  double a = 0.0;
  double b = 0.0;
  V value;
  Errors err{};
  Errors resabs{};
};

template <class V>
Errors tolerances(const V& total, const Errors& resabs_total, const QuadratureConfig& cfg) {
  using T = ValueTraits<V>;
  Errors tol{};
  constexpr double kRoundoff = 50.0 * std::numeric_limits<double>::epsilon();
  constexpr double kSubnormal = 1e3 * std::numeric_limits<double>::min();  // below this, values are noise
  for (int i = 0; i < T::size; ++i) {
    tol[i] = std::max({cfg.abs_tol, cfg.rel_tol * T::abs(total, i), kRoundoff * resabs_total[i], kSubnormal});
  }
  return tol;
}

/// Global adaptive driver: repeatedly bisects the panel with the largest
/// tolerance-normalised error. `rule(a, b)` returns a fully evaluated Panel.
template <class V, class Rule>
Estimate<V> adaptive_driver(Rule& rule, const std::vector<double>& breakpoints, const QuadratureConfig& cfg,
                            int evals_per_panel, const char* name) {
  using T = ValueTraits<V>;
  cfg.validate();
  std::vector<Panel<V>> panels;
  panels.reserve(breakpoints.size() + static_cast<size_t>(cfg.max_subdivisions));
  for (size_t i = 0; i + 1 < breakpoints.size(); ++i) panels.push_back(rule(breakpoints[i], breakpoints[i + 1]));

  const size_t initial_panels = panels.size();
  int subdivisions = 0;
  for (;;) {
    V total = T::zero();
    Errors err_total{}, resabs_total{};
    for (const auto& p : panels) {
      total += p.value;
      for (int i = 0; i < T::size; ++i) {
        err_total[i] += p.err[i];
        resabs_total[i] += p.resabs[i];
      }
    }
    const Errors tol = tolerances(total, resabs_total, cfg);
    bool converged = true;
    double worst_err = 0.0;
    for (int i = 0; i < T::size; ++i) {
      if (err_total[i] > tol[i]) converged = false;
      worst_err = std::max(worst_err, err_total[i]);
    }
    const int evals = evals_per_panel * static_cast<int>(initial_panels + 2 * static_cast<size_t>(subdivisions));
    if (converged) return Estimate<V>{total, worst_err, evals, subdivisions};
    if (subdivisions >= cfg.max_subdivisions) {
      throw ConvergenceError(std::string(name) + ": no convergence after " + std::to_string(subdivisions) +
                                 " subdivisions",
                             flatten(total), worst_err);
    }
    size_t worst = 0;
    double worst_score = -1.0;
    for (size_t k = 0; k < panels.size(); ++k) {
      double score = 0.0;
      for (int i = 0; i < T::size; ++i) {
        const double scale = tol[i] > 0.0 ? tol[i] : std::numeric_limits<double>::min();
        score = std::max(score, panels[k].err[i] / scale);
      }
      if (score > worst_score) {
        worst_score = score;
        worst = k;
      }
    }
    const double a = panels[worst].a;
    const double b = panels[worst].b;
    const double mid = 0.5 * (a + b);
    if (!(mid > a && mid < b)) {
      throw ConvergenceError(std::string(name) + ": panel width underflow", flatten(total), worst_err);
    }
    panels[worst] = rule(a, mid);
    panels.push_back(rule(mid, b));
    ++subdivisions;
  }
}

template <class V, class F>
Panel<V> gauss_kronrod_panel(F& f, double a, double b) {
  using T = ValueTraits<V>;
  const auto& gk = gauss_kronrod21();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  V kronrod = T::zero();
  V gauss = T::zero();
  Errors resabs{};
  for (int j = 0; j < 21; ++j) {
    const V v = f(mid + half * gk.x[j]);
    kronrod += gk.wk[j] * v;
    if (gk.wg[j] != 0.0) gauss += gk.wg[j] * v;
    for (int i = 0; i < T::size; ++i) resabs[i] += gk.wk[j] * T::abs(v, i);
  }
  Panel<V> p;
  p.a = a;
  p.b = b;
  p.value = half * kronrod;
  const V diff = half * (kronrod - gauss);
  for (int i = 0; i < T::size; ++i) {
    p.err[i] = T::abs(diff, i);
    p.resabs[i] = std::abs(half) * resabs[i];
  }
  return p;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (10/21) quadrature. `upper` may be +infinity, in
/// which case x = lower + L t / (1 - t) maps the tail onto t in [0, 1) with
/// L = `tail_scale` (choose the integrand's decay length).
template <class F>
auto integrate_adaptive(F&& f, double lower, double upper, const QuadratureConfig& cfg, double tail_scale = 1.0)
    -> Estimate<std::decay_t<std::invoke_result_t<F&, double>>> {
  using V = std::decay_t<std::invoke_result_t<F&, double>>;
  using T = detail::ValueTraits<V>;
  if (std::isnan(lower) || std::isnan(upper) || std::isinf(lower)) {
    throw DomainError("integrate_adaptive: lower limit must be finite");
  }
  if (lower == upper) return Estimate<V>{T::zero(), 0.0, 0, 0};
  if (std::isinf(upper)) {
    if (upper < 0.0) throw DomainError("integrate_adaptive: upper limit -infinity not supported");
    if (!(tail_scale > 0.0) || !std::isfinite(tail_scale)) {
      throw DomainError("integrate_adaptive: tail_scale must be positive");
    }
    auto mapped = [&](double t) -> V {
      const double one_minus = 1.0 - t;
      const double x = lower + tail_scale * t / one_minus;
      const double jac = tail_scale / (one_minus * one_minus);
      const V v = f(x);
      if (!std::isfinite(jac)) return T::zero();
      return jac * v;
    };
    auto rule = [&](double a, double b) { return detail::gauss_kronrod_panel<V>(mapped, a, b); };
    return detail::adaptive_driver<V>(rule, {0.0, 1.0}, cfg, 21, "integrate_adaptive");
  }
  if (upper < lower) {
    auto r = integrate_adaptive(f, upper, lower, cfg, tail_scale);
    r.value = -r.value;
    return r;
  }
  auto rule = [&](double a, double b) { return detail::gauss_kronrod_panel<V>(f, a, b); };
  return detail::adaptive_driver<V>(rule, {lower, upper}, cfg, 21, "integrate_adaptive");
}

/// Adaptive Gauss-Kronrod over finite, increasing breakpoints with one global
/// error budget (pieces that contribute little are not refined on their own).
template <class F>
auto integrate_adaptive_pieces(F&& f, const std::vector<double>& breakpoints, const QuadratureConfig& cfg)
    -> Estimate<std::decay_t<std::invoke_result_t<F&, double>>> {
  using V = std::decay_t<std::invoke_result_t<F&, double>>;
  if (breakpoints.size() < 2) throw DomainError("integrate_adaptive_pieces: need at least two breakpoints");
  for (size_t i = 0; i < breakpoints.size(); ++i) {
    if (!std::isfinite(breakpoints[i]) || (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))) {
      throw DomainError("integrate_adaptive_pieces: breakpoints must be finite and increasing");
    }
  }
  auto rule = [&](double a, double b) { return detail::gauss_kronrod_panel<V>(f, a, b); };
  return detail::adaptive_driver<V>(rule, breakpoints, cfg, 21, "integrate_adaptive_pieces");
}

/// Integral of g(x) exp(i p x) over [lower, upper] for smooth amplitude g.
///
/// The filon method projects g onto Legendre polynomials on each panel and
/// integrates the exponential exactly (moments 2 i^n j_n(p h)), so its cost
/// depends on the smoothness of g, not on p. panel_per_half_period applies
/// Gauss-Kronrod on panels of length pi/|p|.
template <class G>
auto integrate_oscillatory(G&& g, double phase_rate, double lower, double upper, const QuadratureConfig& cfg)
    -> Estimate<detail::ComplexOf<std::decay_t<std::invoke_result_t<G&, double>>>> {
  using Raw = std::decay_t<std::invoke_result_t<G&, double>>;
  using V = detail::ComplexOf<Raw>;
  using T = detail::ValueTraits<V>;
  if (!std::isfinite(lower) || !std::isfinite(upper) || !std::isfinite(phase_rate)) {
    throw DomainError("integrate_oscillatory: limits and phase rate must be finite");
  }
  if (lower == upper) return Estimate<V>{T::zero(), 0.0, 0, 0};
  if (upper < lower) {
    auto r = integrate_oscillatory(g, phase_rate, upper, lower, cfg);
    r.value = -r.value;
    return r;
  }

  if (cfg.oscillatory_method == OscillatoryMethod::panel_per_half_period) {
    auto full = [&](double x) -> V {
      return detail::to_complex(g(x)) * std::exp(std::complex<double>(0.0, phase_rate * x));
    };
    std::vector<double> breaks{lower};
    if (phase_rate != 0.0) {
      const double width = detail::kPi / std::abs(phase_rate);  // half period
      const double count = std::ceil((upper - lower) / width);
      if (count > 5.0e6) throw DomainError("integrate_oscillatory: too many half periods for panel method");
      const int n = std::max(1, static_cast<int>(count));
      for (int k = 1; k < n; ++k) breaks.push_back(lower + (upper - lower) * k / n);
    }
    breaks.push_back(upper);
    auto rule = [&](double a, double b) { return detail::gauss_kronrod_panel<V>(full, a, b); };
    return detail::adaptive_driver<V>(rule, breaks, cfg, 21, "integrate_oscillatory");
  }

  const auto& tab = detail::filon_table();
  constexpr int N = detail::kFilonOrder;
  auto rule = [&](double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<V, N> vals;
    detail::Errors resabs{};
    for (int j = 0; j < N; ++j) {
      vals[j] = detail::to_complex(g(mid + half * tab.x[j]));
      for (int i = 0; i < T::size; ++i) resabs[i] += tab.w[j] * T::abs(vals[j], i);
    }
    std::array<double, N> jn;
    detail::spherical_bessel_sequence(phase_rate * half, N, jn.data());
    V acc = T::zero();
    V c_last = T::zero();
    V c_prev = T::zero();
    std::complex<double> i_pow(1.0, 0.0);
    for (int n = 0; n < N; ++n) {
      V cn = T::zero();
      for (int j = 0; j < N; ++j) cn += tab.projection[n][j] * vals[j];
      acc += (2.0 * jn[n]) * i_pow * cn;
      i_pow *= std::complex<double>(0.0, 1.0);
      if (n == N - 2) c_prev = cn;
      if (n == N - 1) c_last = cn;
    }
    detail::Panel<V> p;
    p.a = a;
    p.b = b;
    p.value = (half * std::exp(std::complex<double>(0.0, phase_rate * mid))) * acc;
    for (int i = 0; i < T::size; ++i) {
      p.err[i] = 2.0 * half * (T::abs(c_prev, i) + T::abs(c_last, i));
      p.resabs[i] = half * resabs[i];
    }
    return p;
  };
  return detail::adaptive_driver<V>(rule, {lower, upper}, cfg, N, "integrate_oscillatory");
}

/// Sum_{j>=0} w_j term(j) with w_0 = weight_j0 and w_j = 1 otherwise. Stops
/// once tail_check_window consecutive weighted terms are below rel_tol times
/// the partial sum (component-wise).
template <class Term>
auto sum_series(Term&& term, double weight_j0, const SeriesConfig& cfg)
    -> SeriesSum<std::decay_t<std::invoke_result_t<Term&, int>>> {
  using V = std::decay_t<std::invoke_result_t<Term&, int>>;
  using T = detail::ValueTraits<V>;
  cfg.validate();
  V sum = T::zero();
  int small_run = 0;
  for (int j = 0; j < cfg.max_terms; ++j) {
    const V t = (j == 0 ? weight_j0 : 1.0) * term(j);
    sum += t;
    bool small = true;
    for (int i = 0; i < T::size; ++i) {
      if (T::abs(t, i) > cfg.rel_tol * T::abs(sum, i)) small = false;
    }
    small_run = small ? small_run + 1 : 0;
    if (j + 1 >= cfg.min_terms && small_run >= cfg.tail_check_window) return SeriesSum<V>{sum, j + 1};
  }
  throw ConvergenceError("sum_series: max_terms exceeded", detail::flatten(sum), 0.0);
}

}  // namespace chiralcp::quad
