#include "dimer/analytic.hpp"

#include <algorithm>
#include <cmath>

#include "dimer/errors.hpp"

namespace dimer {

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Relative floor below which a manifold denominator counts as vanishing.
constexpr double kDegenerateRel = 1e-14;

double scale_of(Complex a, Complex b) {
  return std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

WeakPumpAmplitudes weak_pump_amplitudes(const SystemParams& params,
                                        const DrivePair& drive) {
  params.validate();
  WeakPumpAmplitudes amps;
  amps.etilde1 = Complex(params.e1, -0.5 * params.gamma_tot1);
  amps.etilde2 = Complex(params.e2, -0.5 * params.gamma_tot2);
  const Complex et1 = amps.etilde1;
  const Complex et2 = amps.etilde2;
  const Complex f1 = drive.f1;
  const Complex f2 = drive.f2;
  const double jj = params.j;
  const double u = params.u;

  if (f1 == Complex(0.0, 0.0) && f2 == Complex(0.0, 0.0)) {
    return amps;  // undriven: vacuum, all amplitudes zero
  }

  // One-photon manifold.
  const Complex d1 = jj * jj - et1 * et2;
  if (std::abs(d1) < kDegenerateRel * scale_of(jj * jj, et1 * et2)) {
    throw NumericalError(
        "weak_pump_amplitudes: one-photon denominator j^2 - etilde1*etilde2 "
        "vanishes");
  }
  amps.c10 = (f1 * et2 + f2 * jj) / d1;
  amps.c01 = (f2 * et1 + f1 * jj) / d1;

  // Two-photon manifold.
  const Complex s = et1 + et2;
  const Complex d2 = (et1 + u) * (et2 + u) * s - jj * jj * (s + 2.0 * u);
  if (std::abs(d2) <
      kDegenerateRel * scale_of((et1 + u) * (et2 + u) * s,
                                Complex(jj * jj) * (s + 2.0 * u))) {
    throw NumericalError(
        "weak_pump_amplitudes: two-photon denominator "
        "(etilde1+u)(etilde2+u)(etilde1+etilde2) - "
        "j^2 (etilde1+etilde2+2u) vanishes");
  }
  const Complex p = (et1 * et2 - jj * jj) * d2;

  const Complex n20 = f1 * f1 * (s * et2 * (et2 + u) + u * jj * jj) +
                      f2 * f2 * jj * jj * (s + u) +
                      2.0 * f1 * f2 * jj * s * (et2 + u);
  const Complex n02 = f2 * f2 * (s * et1 * (et1 + u) + u * jj * jj) +
                      f1 * f1 * jj * jj * (s + u) +
                      2.0 * f2 * f1 * jj * s * (et1 + u);
  const Complex n11 =
      jj * (s + u) * ((et2 + u) * f1 * f1 + (et1 + u) * f2 * f2) +
      f1 * f2 * (s * (et1 * et2 + jj * jj + u * u) + u * s * s +
                 2.0 * u * jj * jj);

  amps.c20 = n20 / (kSqrt2 * p);
  amps.c02 = n02 / (kSqrt2 * p);
  amps.c11 = n11 / p;
  return amps;
}

WeakPumpAmplitudes weak_pump_amplitudes(const SystemParams& params,
                                        DriveWeighting weighting) {
  return weak_pump_amplitudes(params, drive_from(params, weighting));
}

double analytic_n_out(const WeakPumpAmplitudes& amps, const OutputMode& out) {
  out.validate();
  return std::norm(std::sqrt(out.gamma1) * amps.c10 +
                   std::sqrt(out.gamma2) * amps.c01);
}

double analytic_g2(const WeakPumpAmplitudes& amps, const OutputMode& out,
                   G2Form form) {
  const double occupation = analytic_n_out(amps, out);
  if (!(occupation > 0.0)) {
    throw NumericalError(
        "analytic_g2: zero leading-order occupation, correlation undefined");
  }
  const double g1 = out.gamma1;
  const double g2w = out.gamma2;
  const double cross = std::sqrt(g1 * g2w);
  double pair_rate = 0.0;
  if (form == G2Form::exact) {
    // Amplitude of the collected pair: apply the collection operator twice.
    const Complex pair = kSqrt2 * g1 * amps.c20 + kSqrt2 * g2w * amps.c02 +
                         2.0 * cross * amps.c11;
    pair_rate = std::norm(pair);
  } else {
    pair_rate = std::norm(g1 * amps.c20 + g2w * amps.c02) +
                std::norm(g1 * amps.c20 + cross * amps.c11) +
                std::norm(g2w * amps.c02 + cross * amps.c11);
  }
  return pair_rate / (occupation * occupation);
}

AntibunchingVerdict perfect_antibunching_check(const WeakPumpAmplitudes& amps,
                                               const OutputMode& out) {
  out.validate();
  if (!(out.gamma1 > 0.0) || !(out.gamma2 > 0.0)) {
    throw ConfigError(
        "perfect_antibunching_check: requires both couplings positive; with a "
        "single guide the conditions degenerate and intracavity antibunching "
        "can be made perfect");
  }
  const double ratio = out.gamma1 / out.gamma2;
  const double root = std::sqrt(ratio);
  AntibunchingVerdict verdict;
  verdict.cond_c02 = std::abs(amps.c02 + ratio * amps.c20);
  verdict.cond_c11_minus = std::abs(amps.c11 + root * amps.c20);
  verdict.cond_c11_plus = std::abs(amps.c11 - root * amps.c20);
  verdict.residual = std::sqrt(verdict.cond_c02 * verdict.cond_c02 +
                               verdict.cond_c11_minus * verdict.cond_c11_minus +
                               verdict.cond_c11_plus * verdict.cond_c11_plus);
  verdict.satisfied = verdict.residual == 0.0;
  return verdict;
}

ManifoldResiduals stationarity_residuals(const WeakPumpAmplitudes& amps,
                                         const SystemParams& params,
                                         const DrivePair& drive) {
  const Complex et1 = amps.etilde1;
  const Complex et2 = amps.etilde2;
  const Complex f1 = drive.f1;
  const Complex f2 = drive.f2;
  const double jj = params.j;
  const double u = params.u;

  const Complex row10 = et1 * amps.c10 - jj * amps.c01 + f1;
  const Complex row01 = et2 * amps.c01 - jj * amps.c10 + f2;
  const Complex row20 = 2.0 * (et1 + u) * amps.c20 - kSqrt2 * jj * amps.c11 +
                        kSqrt2 * f1 * amps.c10;
  const Complex row02 = 2.0 * (et2 + u) * amps.c02 - kSqrt2 * jj * amps.c11 +
                        kSqrt2 * f2 * amps.c01;
  const Complex row11 = (et1 + et2) * amps.c11 -
                        kSqrt2 * jj * (amps.c20 + amps.c02) + f1 * amps.c01 +
                        f2 * amps.c10;

  ManifoldResiduals res;
  res.one_photon = std::max(std::abs(row10), std::abs(row01));
  res.two_photon =
      std::max({std::abs(row20), std::abs(row02), std::abs(row11)});
  res.vacuum_row = std::abs(f1 * amps.c10 + f2 * amps.c01);
  return res;
}

}  // namespace dimer
