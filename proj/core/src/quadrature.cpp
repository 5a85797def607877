#include "chiralcp/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace chiralcp::quad {

void QuadratureConfig::validate() const {
  if (!(rel_tol > 0.0)) throw DomainError("QuadratureConfig.rel_tol must be > 0");
  if (!(abs_tol >= 0.0)) throw DomainError("QuadratureConfig.abs_tol must be >= 0");
  if (max_subdivisions < 1) throw DomainError("QuadratureConfig.max_subdivisions must be >= 1");
}

void SeriesConfig::validate() const {
  if (!(rel_tol > 0.0)) throw DomainError("SeriesConfig.rel_tol must be > 0");
  if (min_terms < 0 || max_terms < 1 || min_terms > max_terms) {
    throw DomainError("SeriesConfig: require 0 <= min_terms <= max_terms");
  }
  if (tail_check_window < 2) throw DomainError("SeriesConfig.tail_check_window must be >= 2");
}

namespace detail {

const GaussKronrod21& gauss_kronrod21() {
  static const GaussKronrod21 table = [] {
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& ax = GK::abscissa();  // 11 non-negative nodes, ax[0] = 0
    const auto& wk = GK::weights();
    const auto& wg = G::weights();    // Gauss nodes sit at odd indices of ax
    GaussKronrod21 t{};
    int k = 0;
    for (int i = static_cast<int>(ax.size()) - 1; i >= 1; --i, ++k) {
      t.x[k] = -ax[i];
      t.wk[k] = wk[i];
      t.wg[k] = (i % 2 == 1) ? wg[i / 2] : 0.0;
    }
    for (int i = 0; i < static_cast<int>(ax.size()); ++i, ++k) {
      t.x[k] = ax[i];
      t.wk[k] = wk[i];
      t.wg[k] = (i % 2 == 1) ? wg[i / 2] : 0.0;
    }
    return t;
  }();
  return table;
}

const FilonTable& filon_table() {
  static const FilonTable table = [] {
    using G = boost::math::quadrature::gauss<double, kFilonOrder>;
    const auto& ax = G::abscissa();  // kFilonOrder/2 positive nodes
    const auto& w = G::weights();
    FilonTable t{};
    const int half = kFilonOrder / 2;
    for (int i = 0; i < half; ++i) {
      t.x[half - 1 - i] = -ax[i];
      t.w[half - 1 - i] = w[i];
      t.x[half + i] = ax[i];
      t.w[half + i] = w[i];
    }
    for (int j = 0; j < kFilonOrder; ++j) {
      double p_prev = 1.0;
      double p = t.x[j];
      t.projection[0][j] = 0.5 * t.w[j];
      t.projection[1][j] = 1.5 * t.w[j] * p;
      for (int n = 1; n + 1 < kFilonOrder; ++n) {
        const double p_next = ((2.0 * n + 1.0) * t.x[j] * p - n * p_prev) / (n + 1.0);
        p_prev = p;
        p = p_next;
        t.projection[n + 1][j] = (2.0 * (n + 1) + 1.0) / 2.0 * t.w[j] * p;
      }
    }
    return t;
  }();
  return table;
}

void spherical_bessel_sequence(double x, int count, double* out) {
  if (count <= 0) return;
  if (x < 0.0) {
    spherical_bessel_sequence(-x, count, out);
    for (int n = 1; n < count; n += 2) out[n] = -out[n];
    return;
  }
  if (x < 1.0) {
    // j_n(x) = x^n sum_k (-x^2/2)^k / (k! (2n+2k+1)!!)
    double lead = 1.0;  // x^n / (2n+1)!!
    for (int n = 0; n < count; ++n) {
      if (n > 0) lead *= x / (2.0 * n + 1.0);
      double term = lead;
      double sum = lead;
      for (int k = 1; k < 40 && term != 0.0; ++k) {
        term *= -0.5 * x * x / (k * (2.0 * n + 2.0 * k + 1.0));
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      }
      out[n] = sum;
    }
    return;
  }
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double j0 = s / x;
  const double j1 = s / (x * x) - c / x;
  out[0] = j0;
  if (count == 1) return;
  out[1] = j1;
  if (x > static_cast<double>(count)) {
    // Upward recurrence is stable for n < x.
    for (int n = 1; n + 1 < count; ++n) out[n + 1] = (2.0 * n + 1.0) / x * out[n] - out[n - 1];
    return;
  }
  // Ratios r_n = j_n / j_{n-1} from a downward continued fraction.
  const int top = std::max(count, static_cast<int>(x)) + 60;
  std::vector<double> ratio(static_cast<size_t>(top) + 2, 0.0);
  for (int n = top; n >= 1; --n) ratio[n] = 1.0 / ((2.0 * n + 1.0) / x - ratio[n + 1]);
  if (std::abs(j0) >= std::abs(j1)) {
    for (int n = 1; n < count; ++n) out[n] = out[n - 1] * ratio[n];
  } else {
    for (int n = 2; n < count; ++n) out[n] = out[n - 1] * ratio[n];
  }
}

}  // namespace detail
}  // namespace chiralcp::quad
