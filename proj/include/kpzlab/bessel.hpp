#pragma once

namespace kpzlab {

/// Supported range of the public modified-Bessel entry points.
inline constexpr double kBesselMaxOrder = 200.0;
inline constexpr double kBesselMaxArgument = 700.0;
/// Relative agreement demanded between the two evaluation routes.
inline constexpr double kBesselCrossTolerance = 1e-10;

/// I_nu(z) by its power series sum_k (z/2)^{nu+2k} / (k! Gamma(nu+k+1)).
/// Throws OutOfRange outside 0 <= nu <= 200, 0 <= z <= 700.
double bessel_I(double nu, double z);

/// exp(-z) I_nu(z), same range.
double bessel_I_scaled(double nu, double z);

/// log I_nu(z) from the power series; -inf when z = 0 < nu. Valid for any
/// nu >= 0 and 0 <= z <= 700 (the wedge kernel needs orders past 200).
double log_bessel_I_series(double nu, double z);

/// log I_nu(z) from the integral representation
///   I_nu(z) = (z/2)^nu / (sqrt(pi) Gamma(nu + 1/2)) int_0^pi e^{z cos t} sin^{2nu} t dt
/// using composite 30-point Gauss-Legendre panels, geometrically graded at
/// both ends so non-integer 2nu keeps full accuracy.
double log_bessel_I_quadrature(double nu, double z);

struct BesselCrossCheck {
  double series = 0.0;      // log I from the series
  double quadrature = 0.0;  // log I from the integral
  double rel_diff = 0.0;    // |I_s - I_q| / I_s, computed in log space
};

/// Evaluates both routes; never throws on disagreement.
BesselCrossCheck bessel_I_cross_check(double nu, double z);

/// Series value after asserting the quadrature agrees to kBesselCrossTolerance;
/// disagreement throws ConvergenceFailure.
double bessel_I_checked(double nu, double z);

}  // namespace kpzlab
