#include "chiralcp/greens.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <tuple>

#include "chiralcp/errors.hpp"

namespace chiralcp::greens {

namespace {

using Vec4 = Eigen::Vector4d;
using Vec4c = Eigen::Vector4cd;
using cplx = std::complex<double>;

constexpr double c0 = PhysicalConstants::c;
constexpr double kInv4Pi = 1.0 / (4.0 * kPi);
constexpr int kSS = 0;
constexpr int kSP = 1;

// Mirror A terms decay with e^{-2 kappa z}, mirror B terms with e^{-2 kappa (a - z)}.
// sigma = +1 on A, -1 on B gives the sign of d/dz acting on the traveling phase.
enum class Side { A, B };
constexpr double sigma_of(Side s) { return s == Side::A ? 1.0 : -1.0; }

void check_inputs(double z, const CavitySpec& cavity) {
  cavity.validate();
  cavity.check_position(z);
}

// I_m = int_{k0}^inf kappa^m e^{-beta kappa} d kappa, m = 0..3.
std::array<double, 4> exp_moments(double beta, double k0) {
  std::array<double, 4> out{};
  const double e = std::exp(-beta * k0);
  double fact_m = 1.0;
  for (int m = 0; m < 4; ++m) {
    if (m > 0) fact_m *= m;
    double sum = 0.0;
    double fact_j = 1.0;
    double k0_pow = 1.0;
    for (int j = 0; j <= m; ++j) {
      if (j > 0) {
        fact_j *= j;
        k0_pow *= k0;
      }
      sum += fact_m / fact_j * k0_pow / std::pow(beta, m - j + 1);
    }
    out[m] = e * sum;
  }
  return out;
}

// Imaginary-frequency contribution of one mirror term with matrix X.
Vec4 imaginary_term(const Eigen::Matrix2d& X, double xi, double beta, Side side) {
  const auto I = exp_moments(beta, xi / c0);
  const double xi2 = xi * xi;
  const double c2 = c0 * c0;
  const double ss = X(kSS, kSS), pp = X(1, 1), sp = X(kSS, kSP), ps = X(1, 0);
  auto g = [&](double i0, double i2) { return kInv4Pi * (xi2 * (ss + pp) * i0 - 2.0 * c2 * pp * i2); };
  auto ch = [&](double i0, double i2) {
    return -kInv4Pi / c0 * (sp * (2.0 * c2 * i2 - xi2 * i0) + xi2 * ps * i0);
  };
  const double d = -2.0 * sigma_of(side);  // d/dz e^{-beta kappa}: A -> -2 kappa, B -> +2 kappa
  return Vec4(g(I[0], I[2]), ch(I[0], I[2]), d * g(I[1], I[3]), d * ch(I[1], I[3]));
}

// J_m = int_0^k (q/k)^m e^{i beta q} dq for m = 0..3, Filon rule (exact on cubics).
Eigen::Vector4cd traveling_moments(double beta, double k, const quad::QuadratureConfig& cfg) {
  auto amp = [k](double q) {
    const double t = q / k;
    return Vec4(1.0, t, t * t, t * t * t);
  };
  return quad::integrate_oscillatory(amp, beta, 0.0, k, cfg).value;
}

// E_m = int_0^inf (kappa/k)^m e^{-beta kappa} d kappa = m! / (k^m beta^{m+1}).
std::array<double, 4> evanescent_moments(double beta, double k) {
  std::array<double, 4> out{};
  double fact = 1.0;
  for (int m = 0; m < 4; ++m) {
    if (m > 0) fact *= m;
    out[m] = fact / (std::pow(k, m) * std::pow(beta, m + 1));
  }
  return out;
}

Vec4c real_term(const Eigen::Matrix2d& X, double k, double beta, Side side, const quad::QuadratureConfig& cfg) {
  const Eigen::Vector4cd J = traveling_moments(beta, k, cfg);
  const auto E = evanescent_moments(beta, k);
  const double ss = X(kSS, kSS), pp = X(1, 1), sp = X(kSS, kSP), ps = X(1, 0);
  const cplx I(0.0, 1.0);
  auto tg = [&](cplx j0, cplx j2) { return ss * j0 + pp * (j0 - 2.0 * j2); };
  auto tc = [&](cplx j0, cplx j2) { return sp * (j0 - 2.0 * j2) - ps * j0; };
  auto eg = [&](double e0, double e2) { return ss * e0 + pp * (e0 + 2.0 * e2); };
  auto ec = [&](double e0, double e2) { return sp * (e0 + 2.0 * e2) - ps * e0; };
  const double s = sigma_of(side);
  const cplx dj = s * 2.0 * I * k;  // traveling d/dz
  const double de = -s * 2.0 * k;   // evanescent d/dz
  const cplx pre_g = I * kInv4Pi;
  const double pre_c = k * kInv4Pi;
  Vec4c out;
  out(0) = pre_g * (tg(J(0), J(2)) - I * eg(E[0], E[2]));
  out(1) = pre_c * (tc(J(0), J(2)) - I * ec(E[0], E[2]));
  out(2) = pre_g * (dj * tg(J(1), J(3)) - I * de * eg(E[1], E[3]));
  out(3) = pre_c * (dj * tc(J(1), J(3)) - I * de * ec(E[1], E[3]));
  return out;
}

// Round-trip sum over n of per-term contributions from both mirrors. Stops when
// `window` consecutive terms are below rel_tol of the accumulated magnitude.
template <class V, class TermFn>
std::pair<V, V> round_trip_sum(TermFn&& term, const quad::SeriesConfig& cfg, bool single) {
  cfg.validate();
  V sum_a = V::Zero();
  V sum_b = V::Zero();
  Eigen::Vector4d magnitude = Eigen::Vector4d::Zero();
  int small_run = 0;
  for (int n = 0; n < cfg.max_terms; ++n) {
    const auto [ta, tb] = term(n);
    sum_a += ta;
    sum_b += tb;
    if (single) return {sum_a, sum_b};
    bool small = true;
    for (int i = 0; i < 4; ++i) {
      magnitude(i) += std::abs(ta(i)) + std::abs(tb(i));
      if (std::abs(ta(i)) + std::abs(tb(i)) > cfg.rel_tol * magnitude(i)) small = false;
    }
    small_run = small ? small_run + 1 : 0;
    if (n + 1 >= cfg.min_terms && small_run >= cfg.tail_check_window) return {sum_a, sum_b};
  }
  std::vector<cplx> best;
  for (int i = 0; i < 4; ++i) best.push_back(cplx(sum_a(i) + sum_b(i)));
  throw ConvergenceError("round-trip series: max_terms exceeded", best, 0.0);
}

double decay_scale(double z, const CavitySpec& cavity) {
  return 1.0 / (2.0 * std::min(z, cavity.width_a - z));
}

}  // namespace

Eigen::Matrix2d reflection_matrix(const MirrorSpec& mirror) {
  Eigen::Matrix2d R;
  if (mirror.side == MirrorSide::A) {
    R << -mirror.r_e, mirror.r_c, -mirror.r_c, mirror.r_e;
  } else {
    R << -mirror.r_e, -mirror.r_c, mirror.r_c, mirror.r_e;
  }
  return R;
}

CavityRoundTrip::CavityRoundTrip(const CavitySpec& cavity, std::complex<double> phase_)
    : round_trip(reflection_matrix(cavity.mirror_a) * reflection_matrix(cavity.mirror_b)), phase(phase_) {}

Matrix2c CavityRoundTrip::D() const {
  return Matrix2c::Identity() - phase * round_trip.cast<cplx>();
}

Matrix2c CavityRoundTrip::inverse() const {
  const Matrix2c d = D();
  const cplx det = d.determinant();
  if (std::abs(det) == 0.0) throw DomainError("cavity round-trip matrix D is singular");
  Matrix2c inv;
  inv << d(1, 1), -d(0, 1), -d(1, 0), d(0, 0);
  return inv / det;
}

Matrix2c CavityRoundTrip::series(double rel_tol, int max_terms, int* terms) const {
  const Matrix2c step = phase * round_trip.cast<cplx>();
  Matrix2c power = Matrix2c::Identity();
  Matrix2c sum = Matrix2c::Identity();
  for (int n = 1; n < max_terms; ++n) {
    power = power * step;
    sum += power;
    if (power.norm() <= rel_tol * sum.norm()) {
      if (terms) *terms = n + 1;
      return sum;
    }
  }
  std::vector<cplx> best(sum.data(), sum.data() + 4);
  throw ConvergenceError("round-trip series did not converge", best, power.norm());
}

double CavityRoundTrip::spectral_radius() const {
  const Matrix2c step = phase * round_trip.cast<cplx>();
  return step.eigenvalues().cwiseAbs().maxCoeff();
}

std::array<ImaginaryKernel, 2> imaginary_kernel_sides(double xi, double z, const CavitySpec& cavity,
                                                      const GreensOptions& opts) {
  check_inputs(z, cavity);
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw DomainError("imaginary frequency xi must be >= 0");
  const double a = cavity.width_a;
  const Eigen::Matrix2d R = reflection_matrix(cavity.mirror_a);
  const Eigen::Matrix2d Rp = reflection_matrix(cavity.mirror_b);
  const Eigen::Matrix2d M = R * Rp;

  Vec4 va, vb;
  if (opts.resummation == Resummation::full_direct) {
    const double xi2 = xi * xi;
    const double c2 = c0 * c0;
    using Vec8 = Eigen::Matrix<double, 8, 1>;
    auto integrand = [&](double kappa) -> Vec8 {
      const double phase = std::exp(-2.0 * a * kappa);
      const Eigen::Matrix2d Dinv = (Eigen::Matrix2d::Identity() - phase * M).inverse();
      const Eigen::Matrix2d XA = Dinv * R;
      const Eigen::Matrix2d XB = Rp * Dinv;
      const double eA = std::exp(-2.0 * kappa * z);
      const double eB = std::exp(-2.0 * kappa * (a - z));
      auto g = [&](const Eigen::Matrix2d& X) {
        return kInv4Pi * (xi2 * (X(0, 0) + X(1, 1)) - 2.0 * c2 * kappa * kappa * X(1, 1));
      };
      auto ch = [&](const Eigen::Matrix2d& X) {
        return -kInv4Pi / c0 * (X(0, 1) * (2.0 * c2 * kappa * kappa - xi2) + xi2 * X(1, 0));
      };
      const double gA = eA * g(XA), gB = eB * g(XB);
      const double cA = eA * ch(XA), cB = eB * ch(XB);
      Vec8 out;
      out << gA, cA, -2.0 * kappa * gA, -2.0 * kappa * cA, gB, cB, 2.0 * kappa * gB, 2.0 * kappa * cB;
      return out;
    };
    const Vec8 v = quad::integrate_adaptive(integrand, xi / c0, INFINITY, opts.quadrature, decay_scale(z, cavity)).value;
    va = v.head<4>();
    vb = v.tail<4>();
  } else {
    Eigen::Matrix2d Mn = Eigen::Matrix2d::Identity();
    auto term = [&](int n) {
      if (n > 0) Mn = Mn * M;
      const Vec4 ta = imaginary_term(Mn * R, xi, 2.0 * (z + n * a), Side::A);
      const Vec4 tb = imaginary_term(Rp * Mn, xi, 2.0 * (a - z + n * a), Side::B);
      return std::pair<Vec4, Vec4>(ta, tb);
    };
    std::tie(va, vb) = round_trip_sum<Vec4>(term, opts.series, opts.resummation == Resummation::single_reflection);
  }
  return {ImaginaryKernel{va(0), va(1), va(2), va(3)}, ImaginaryKernel{vb(0), vb(1), vb(2), vb(3)}};
}

ImaginaryKernel imaginary_kernel(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  const auto s = imaginary_kernel_sides(xi, z, cavity, opts);
  return ImaginaryKernel{s[0].xi2_tr_G + s[1].xi2_tr_G, s[0].xi_tr_curl_G + s[1].xi_tr_curl_G,
                         s[0].d_xi2_tr_G + s[1].d_xi2_tr_G, s[0].d_xi_tr_curl_G + s[1].d_xi_tr_curl_G};
}

std::array<RealKernel, 2> real_kernel_sides(double omega, double z, const CavitySpec& cavity,
                                            const GreensOptions& opts) {
  check_inputs(z, cavity);
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("real frequency omega must be > 0");
  const double a = cavity.width_a;
  const double k = omega / c0;
  const Eigen::Matrix2d R = reflection_matrix(cavity.mirror_a);
  const Eigen::Matrix2d Rp = reflection_matrix(cavity.mirror_b);
  const Eigen::Matrix2d M = R * Rp;
  const cplx I(0.0, 1.0);

  Vec4c va, vb;
  if (opts.resummation == Resummation::full_direct) {
    const Eigen::Matrix2cd Rc = R.cast<cplx>();
    const Eigen::Matrix2cd Rpc = Rp.cast<cplx>();
    // Traveling branch: one oscillatory integral per mirror, D^-1 kept in the amplitude.
    auto traveling = [&](Side side) -> Vec4c {
      auto amp = [&, side](double q) -> Vec4c {
        const CavityRoundTrip rt(cavity, std::exp(2.0 * I * a * q));
        const Eigen::Matrix2cd Dinv = rt.inverse();
        const Eigen::Matrix2cd X = side == Side::A ? Eigen::Matrix2cd(Dinv * Rc) : Eigen::Matrix2cd(Rpc * Dinv);
        const double t = q / k;
        const cplx gG = X(0, 0) + (1.0 - 2.0 * t * t) * X(1, 1);
        const cplx gC = X(0, 1) * (1.0 - 2.0 * t * t) - X(1, 0);
        const cplx d = sigma_of(side) * 2.0 * I * q;
        return Vec4c(I * kInv4Pi * gG, k * kInv4Pi * gC, I * kInv4Pi * d * gG, k * kInv4Pi * d * gC);
      };
      const double rate = side == Side::A ? 2.0 * z : 2.0 * (a - z);
      return quad::integrate_oscillatory(amp, rate, 0.0, k, opts.quadrature).value;
    };
    using Vec8 = Eigen::Matrix<double, 8, 1>;
    auto evanescent = [&](double kappa) -> Vec8 {
      const double phase = std::exp(-2.0 * a * kappa);
      const Eigen::Matrix2d Dinv = (Eigen::Matrix2d::Identity() - phase * M).inverse();
      const Eigen::Matrix2d XA = Dinv * R;
      const Eigen::Matrix2d XB = Rp * Dinv;
      const double t2 = (kappa / k) * (kappa / k);
      auto eg = [&](const Eigen::Matrix2d& X) { return X(0, 0) + (1.0 + 2.0 * t2) * X(1, 1); };
      auto ec = [&](const Eigen::Matrix2d& X) { return X(0, 1) * (1.0 + 2.0 * t2) - X(1, 0); };
      const double eA = std::exp(-2.0 * kappa * z);
      const double eB = std::exp(-2.0 * kappa * (a - z));
      const double gA = eA * eg(XA), gB = eB * eg(XB);
      const double cA = eA * ec(XA), cB = eB * ec(XB);
      Vec8 out;
      out << gA, cA, -2.0 * kappa * gA, -2.0 * kappa * cA, gB, cB, 2.0 * kappa * gB, 2.0 * kappa * cB;
      return out;
    };
    const Vec8 ev = quad::integrate_adaptive(evanescent, 0.0, INFINITY, opts.quadrature, decay_scale(z, cavity)).value;
    // (i/4pi)(-i) E = E/4pi for tr G; (k/4pi)(-i) E for the curl.
    auto add_evanescent = [&](Vec4c& v, const Vec4& e) {
      v(0) += kInv4Pi * e(0);
      v(1) += -I * k * kInv4Pi * e(1);
      v(2) += kInv4Pi * e(2);
      v(3) += -I * k * kInv4Pi * e(3);
    };
    va = traveling(Side::A);
    vb = traveling(Side::B);
    add_evanescent(va, ev.head<4>());
    add_evanescent(vb, ev.tail<4>());
  } else {
    Eigen::Matrix2d Mn = Eigen::Matrix2d::Identity();
    auto term = [&](int n) {
      if (n > 0) Mn = Mn * M;
      const Vec4c ta = real_term(Mn * R, k, 2.0 * (z + n * a), Side::A, opts.quadrature);
      const Vec4c tb = real_term(Rp * Mn, k, 2.0 * (a - z + n * a), Side::B, opts.quadrature);
      return std::pair<Vec4c, Vec4c>(ta, tb);
    };
    std::tie(va, vb) = round_trip_sum<Vec4c>(term, opts.series, opts.resummation == Resummation::single_reflection);
  }
  return {RealKernel{va(0), va(1), va(2), va(3)}, RealKernel{vb(0), vb(1), vb(2), vb(3)}};
}

RealKernel real_kernel(double omega, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  const auto s = real_kernel_sides(omega, z, cavity, opts);
  return RealKernel{s[0].tr_G + s[1].tr_G, s[0].tr_curl_G + s[1].tr_curl_G, s[0].d_tr_G + s[1].d_tr_G,
                    s[0].d_tr_curl_G + s[1].d_tr_curl_G};
}

double xi2_trace_G_imaginary(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  return imaginary_kernel(xi, z, cavity, opts).xi2_tr_G;
}

double xi_trace_curl_G_imaginary(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  return imaginary_kernel(xi, z, cavity, opts).xi_tr_curl_G;
}

double trace_G_imaginary(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  if (!(xi > 0.0)) throw DomainError("trace_G_imaginary: xi must be > 0; use xi2_trace_G_imaginary at xi = 0");
  return imaginary_kernel(xi, z, cavity, opts).xi2_tr_G / (xi * xi);
}

double trace_curl_G_imaginary(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  if (!(xi > 0.0)) {
    throw DomainError("trace_curl_G_imaginary: xi must be > 0; use xi_trace_curl_G_imaginary at xi = 0");
  }
  return imaginary_kernel(xi, z, cavity, opts).xi_tr_curl_G / xi;
}

std::complex<double> trace_G_real(double omega, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  return real_kernel(omega, z, cavity, opts).tr_G;
}

std::complex<double> trace_curl_G_real(double omega, double z, const CavitySpec& cavity,
                                       const GreensOptions& opts) {
  return real_kernel(omega, z, cavity, opts).tr_curl_G;
}

GreensTraces imaginary_traces(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  if (!(xi > 0.0)) throw DomainError("imaginary_traces: xi must be > 0");
  const auto k = imaginary_kernel(xi, z, cavity, opts);
  return GreensTraces{k.xi2_tr_G / (xi * xi), k.xi_tr_curl_G / xi, FrequencyBranch::imaginary};
}

GreensTraces real_traces(double omega, double z, const CavitySpec& cavity, const GreensOptions& opts) {
  const auto k = real_kernel(omega, z, cavity, opts);
  return GreensTraces{k.tr_G, k.tr_curl_G, FrequencyBranch::real};
}

}  // namespace chiralcp::greens
