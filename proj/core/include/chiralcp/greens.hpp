#pragma once

// Scattering Green's tensor traces for a molecule between two planar chiral
// mirrors with constant reflection coefficients. Terms independent of the
// molecule position are dropped throughout.

#include <Eigen/Core>
#include <array>
#include <complex>

#include "chiralcp/physics.hpp"
#include "chiralcp/quadrature.hpp"

namespace chiralcp::greens {

using Matrix2c = Eigen::Matrix2cd;

/// 2x2 reflection matrix in the (s, p) basis.
/// Side A: [[-r_e, r_c], [-r_c, r_e]]; side B: [[-r_e, -r_c], [r_c, r_e]].
Eigen::Matrix2d reflection_matrix(const MirrorSpec& mirror);

/// D = I - phase * R R' and its inverse, either by direct 2x2 inversion or by
/// the geometric round-trip series.
struct CavityRoundTrip {
  Eigen::Matrix2d round_trip;  // R R'
  std::complex<double> phase;  // exp(2 i a k_perp)

  CavityRoundTrip(const CavitySpec& cavity, std::complex<double> phase);

  Matrix2c D() const;
  Matrix2c inverse() const;
  /// Sum_n (phase R R')^n, stopped once a term's norm is below rel_tol of the
  /// partial sum. `terms` receives the number of terms used.
  Matrix2c series(double rel_tol, int max_terms, int* terms = nullptr) const;
  double spectral_radius() const;
};

enum class Resummation {
  single_reflection,  // each mirror once, no round trips
  full_direct,        // D^-1 inside adaptive quadrature
  full_series,        // round-trip series, closed form per term
};

struct GreensOptions {
  Resummation resummation = Resummation::full_series;
  quad::QuadratureConfig quadrature{};
  quad::SeriesConfig series{1e-13, 1, 100000, 3};
};

enum class FrequencyBranch { imaginary, real };

/// Traces at one frequency. At imaginary frequency both are real.
struct GreensTraces {
  std::complex<double> tr_G;       // 1/m
  std::complex<double> tr_curl_G;  // 1/m^2
  FrequencyBranch branch = FrequencyBranch::imaginary;
};

/// Imaginary frequency, in the finite product form used by the potentials:
/// (xi^2 tr G, xi tr curl G, and their z derivatives). Defined at xi = 0.
struct ImaginaryKernel {
  double xi2_tr_G = 0.0;
  double xi_tr_curl_G = 0.0;
  double d_xi2_tr_G = 0.0;
  double d_xi_tr_curl_G = 0.0;
};

/// Real frequency traces and their z derivatives.
struct RealKernel {
  std::complex<double> tr_G;
  std::complex<double> tr_curl_G;
  std::complex<double> d_tr_G;
  std::complex<double> d_tr_curl_G;
};

ImaginaryKernel imaginary_kernel(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts = {});
RealKernel real_kernel(double omega, double z, const CavitySpec& cavity, const GreensOptions& opts = {});

/// Same kernels split into the part reflected last by mirror A (index 0) and
/// by mirror B (index 1). The halves cancel at symmetric points, so callers
/// that need relative accuracy should converge them separately.
std::array<ImaginaryKernel, 2> imaginary_kernel_sides(double xi, double z, const CavitySpec& cavity,
                                                      const GreensOptions& opts = {});
std::array<RealKernel, 2> real_kernel_sides(double omega, double z, const CavitySpec& cavity,
                                            const GreensOptions& opts = {});

double trace_G_imaginary(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts = {});
double trace_curl_G_imaginary(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts = {});
/// xi^2 tr G(i xi); finite as xi -> 0.
double xi2_trace_G_imaginary(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts = {});
/// xi tr curl G(i xi); finite as xi -> 0.
double xi_trace_curl_G_imaginary(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts = {});

std::complex<double> trace_G_real(double omega, double z, const CavitySpec& cavity, const GreensOptions& opts = {});
std::complex<double> trace_curl_G_real(double omega, double z, const CavitySpec& cavity,
                                       const GreensOptions& opts = {});

GreensTraces imaginary_traces(double xi, double z, const CavitySpec& cavity, const GreensOptions& opts = {});
GreensTraces real_traces(double omega, double z, const CavitySpec& cavity, const GreensOptions& opts = {});

}  // namespace chiralcp::greens
