#pragma once
// Conditional generation of approximate cat states from squeezed light.
//
// A single-mode squeezed vacuum meets the vacuum on a variable beamsplitter;
// counting m photons (m even) on the reflected port leaves the kept port in
// an even-photon state whose closest plus cat improves with m.  Everything is
// controlled by the kept-port scale lambda cos^2(theta):
//   amplitudes     (2n+m)! x^(n+m/2) / ((n+m/2)! sqrt((2n)!)),  x = scale/2
//   herald chance  P_m with the sqrt((1-l^2)/(1-l^2 cos^4)) prefactor
// Both closed forms are cross-checked against the explicit two-mode pipeline.
//
// Fits against ideal cats maximize |<cat+(a)|psi>|^2 by golden-section search.
// F(a) is smooth and unimodal over the search window for the ranges used
// here, and the argmax is always reported next to the value because the
// comparison amplitude is a free choice, not part of the preparation.

#include "errors.hpp"
#include "fock.hpp"
#include "gates.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

namespace catsim {

struct CatGenSpec {
  double lambda = 0.0;    // squeezing parameter, |lambda| < 1
  double theta_bs = 0.0;  // splitter angle; the kept port scales by cos(theta)
  int m = 0;              // detected photon number
};

inline double dakna_scale(const CatGenSpec& spec) {
  const double c = std::cos(spec.theta_bs);
  return spec.lambda * c * c;
}

namespace detail {

inline double lfact(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline void check_dakna(const CatGenSpec& spec, bool need_even) {
  if (!(std::abs(spec.lambda) < 1.0))
    throw InvalidArgument("squeezing parameter must satisfy |lambda| < 1");
  if (spec.m < 0) throw InvalidArgument("negative photon count");
  if (need_even && spec.m % 2 != 0)
    throw InvalidArgument("odd detection results are out of scope");
}

template <class F>
inline std::pair<double, double> golden_max(F&& f, double lo, double hi, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c1 = b - g * (b - a), c2 = a + g * (b - a);
  double f1 = f(c1), f2 = f(c2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + g * (b - a);
      f2 = f(c2);
    } else {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - g * (b - a);
      f1 = f(c1);
    }
  }
  const double mid = 0.5 * (a + b);
  return {mid, f(mid)};
}

}  // namespace detail

// ------------------------------------------------------------- closed forms

// Even-m conditional state of the kept port, normalized on the block.
inline FockVector dakna_state(const CatGenSpec& spec, int cutoff,
                              double tail_tol = 1e-10) {
  detail::check_dakna(spec, true);
  const double x = dakna_scale(spec) / 2.0;
  FockVector v;
  v.amp.assign(cutoff + 1, cx(0.0));
  if (x == 0.0) {
    if (spec.m > 0) throw ZeroProbability("no photons can reach the detector");
    v.amp[0] = 1.0;
    return v;
  }
  const int h = spec.m / 2;
  const double lx = std::log(std::abs(x));
  for (int n = 0; 2 * n <= cutoff; ++n) {
    const double mag = std::exp(detail::lfact(2 * n + spec.m) - detail::lfact(n + h) -
                                0.5 * detail::lfact(2 * n) + (n + h) * lx);
    const double sgn = (x < 0.0 && (n + h) % 2 != 0) ? -1.0 : 1.0;
    v.amp[2 * n] = sgn * mag;
  }
  const double s = 1.0 / std::sqrt(norm2(v));
  for (cx& a : v.amp) a *= s;
  require_tail(v, tail_tol);
  return v;
}

// Mean photon number summed directly on the general-form weights
// c_{n,m}^2 |x|^(n+m); the parity factor kills every odd n+m term.
inline double dakna_mean_photon(const CatGenSpec& spec, int cutoff) {
  detail::check_dakna(spec, true);
  const double ax = std::abs(dakna_scale(spec)) / 2.0;
  if (ax == 0.0) {
    if (spec.m > 0) throw ZeroProbability("no photons can reach the detector");
    return 0.0;
  }
  const double lx = std::log(ax);
  double num = 0.0, den = 0.0;
  for (int n = 0; n <= cutoff; ++n) {
    if ((n + spec.m) % 2 != 0) continue;
    const double lc = detail::lfact(n + spec.m) + std::log(2.0) -
                      0.5 * detail::lfact(n) - detail::lfact((n + spec.m) / 2);
    const double w = std::exp(2.0 * lc + (n + spec.m) * lx);
    num += n * w;
    den += w;
  }
  return num / den;
}

// Heralding probability of the m-photon result in closed form.  The splitter
// mass for m = 0 is the bare prefactor (the l-sum collapses to one).
inline double dakna_probability(double lambda, double theta_bs, int m) {
  if (!(std::abs(lambda) < 1.0))
    throw InvalidArgument("squeezing parameter must satisfy |lambda| < 1");
  if (m < 0) throw InvalidArgument("negative photon count");
  if (m % 2 != 0) throw InvalidArgument("odd detection results are out of scope");
  const double c2 = std::cos(theta_bs) * std::cos(theta_bs);
  const double den = 1.0 - lambda * lambda * c2 * c2;
  const double pref = std::sqrt((1.0 - lambda * lambda) / den);
  if (m == 0) return pref;
  const double s2 = std::sin(2.0 * theta_bs);
  const double base = lambda * lambda * s2 * s2 / (4.0 * den);
  if (base <= 0.0) return 0.0;
  const double lb = std::log(base);
  const double lc = std::log(2.0 * std::abs(lambda) * c2);
  double sum = 0.0;
  for (int l = 0; 2 * l <= m; ++l)
    sum += std::exp(m * lb + detail::lfact(m) - detail::lfact(m - 2 * l) -
                    2.0 * detail::lfact(l) - 2.0 * l * lc);
  return pref * sum;
}

// --------------------------------------------------------- two-mode pipeline

struct DaknaResult {
  FockVector state;          // normalized kept-port conditional
  double probability = 0.0;  // heralding probability of the count
};

// Explicit construction: squeezed vacuum and vacuum through the splitter,
// then a definite count on the reflected port.  Odd m is accepted here so the
// completeness sum over every possible result can be checked against it.
// The count removes m photons, so the joint simulation runs with m extra
// levels; the kept-port block [0, cutoff] is then exact.
inline DaknaResult dakna_pipeline(const CatGenSpec& spec, int cutoff,
                                  double tail_tol = 1e-10) {
  detail::check_dakna(spec, false);
  if (spec.m > cutoff) throw InvalidArgument("count out of range");
  const int inner = cutoff + spec.m;
  MultiModeState st =
      tensor(from_single(squeezed_even(spec.lambda, inner, tail_tol)),
             fock_basis(0, inner));
  st = beamsplitter(st, 0, 1, real_coupled(spec.theta_bs));
  auto [cond, p] = project_fock(st, 1, spec.m);
  DaknaResult out;
  out.state.amp.assign(cond.amp.begin(), cond.amp.begin() + cutoff + 1);
  const double s = 1.0 / std::sqrt(norm2(out.state));
  for (cx& a : out.state.amp) a *= s;
  out.probability = p;
  return out;
}

// ---------------------------------------------------------------- cat fits

struct CatFit {
  double alpha = 0.0;
  double fidelity = 0.0;
};

// Best ideal plus cat against an even state.  Comparison candidates carry no
// tail guarantee; the fit only needs them normalized on the block.
inline CatFit best_cat_fit(const FockVector& u, double lo = 1e-6, double hi = 4.0,
                           double tol = 1e-6) {
  const int cutoff = static_cast<int>(u.amp.size()) - 1;
  auto [alpha, f] = detail::golden_max(
      [&](double a) { return fidelity(u, cat(a, +1, cutoff, 2.0)); }, lo, hi, tol);
  return {alpha, f};
}

inline CatFit dakna_fidelity(const CatGenSpec& spec, int cutoff) {
  return best_cat_fit(dakna_state(spec, cutoff));
}

// ------------------------------------------------------ entangled resources

// Kept-port state and vacuum on a 50:50 splitter.  An ideal cat of amplitude
// sqrt(2) a lands exactly on |a,a> + |-a,-a>, so the two-mode fidelity below
// coincides with the single-mode fit at sqrt(2) times the pole amplitude.
inline MultiModeState bell_from_cat(const FockVector& u) {
  const int cutoff = static_cast<int>(u.amp.size()) - 1;
  MultiModeState st = tensor(from_single(u), fock_basis(0, cutoff));
  return beamsplitter(st, 0, 1, real_coupled(std::numbers::pi / 4));
}

inline MultiModeState two_mode_cat(double alpha, int cutoff) {
  const FockVector cp = coherent(cx(alpha, 0.0), cutoff, 2.0);
  const FockVector cm = coherent(cx(-alpha, 0.0), cutoff, 2.0);
  MultiModeState a = tensor(from_single(cp), cp);
  const MultiModeState b = tensor(from_single(cm), cm);
  for (std::size_t k = 0; k < a.amp.size(); ++k) a.amp[k] += b.amp[k];
  const double s = 1.0 / std::sqrt(norm2(a));
  for (cx& t : a.amp) t *= s;
  return a;
}

struct BellResource {
  MultiModeState state;
  double alpha = 0.0;     // argmax of the two-mode fit
  double fidelity = 0.0;  // against |a,a> + |-a,-a> at that argmax
};

inline BellResource dakna_bell_resource(const CatGenSpec& spec, int cutoff) {
  BellResource out;
  out.state = bell_from_cat(dakna_state(spec, cutoff));
  auto [alpha, f] = detail::golden_max(
      [&](double a) { return fidelity(out.state, two_mode_cat(a, cutoff)); }, 1e-6,
      4.0 / std::sqrt(2.0), 1e-6);
  out.alpha = alpha;
  out.fidelity = f;
  return out;
}

// ----------------------------------------------------------------- gate demo

// Ensemble fidelity of the counting rotation driven by arbitrary Fock-space
// input and resource states.  The input is displaced by i phi/(2 alpha),
// split 50:50 against the first resource arm, and both ports counted; every
// cell is scored against the rotated ideal cat with the cell's correction
// folded into the target.  Enacted pole phases: exp(-i phi) on |-alpha>,
// exp(+i phi) on |alpha>.
inline double fock_rz_fidelity(const FockVector& input, const MultiModeState& resource,
                               double alpha, double phi, int count_max = -1) {
  if (resource.modes != 2) throw InvalidArgument("resource must be a two-mode state");
  if (static_cast<int>(input.amp.size()) != resource.dim)
    throw DimensionMismatch("input and resource must share the per-mode dimension");
  const int dim = resource.dim;
  if (count_max < 0) count_max = std::min(count_grid(alpha), dim - 1);

  const FockVector shifted = displace(input, cx(0.0, phi / (2.0 * alpha)));
  MultiModeState st = tensor(from_single(shifted), resource);
  st = beamsplitter(st, 1, 0, real_coupled(std::numbers::pi / 4));

  const FockVector cp = coherent(cx(alpha, 0.0), dim - 1, 2.0);
  const FockVector cm = coherent(cx(-alpha, 0.0), dim - 1, 2.0);
  const Eigen::Vector2cd goal(std::exp(cx(0.0, -phi)), std::exp(cx(0.0, phi)));

  const std::size_t d = static_cast<std::size_t>(dim);
  std::vector<cx> w(d), tgt(d);
  double num = 0.0, den = 0.0;
  for (int na = 0; na <= count_max; ++na)
    for (int nb = 0; nb <= count_max; ++nb) {
      const std::size_t base =
          (static_cast<std::size_t>(na) * d + static_cast<std::size_t>(nb)) * d;
      double p = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        w[k] = st.amp[base + k];
        p += std::norm(w[k]);
      }
      if (p < 1e-18) continue;
      const Eigen::Vector2cd gc = correction_matrix(na, nb).adjoint() * goal;
      double tn = 0.0;
      cx ip(0.0);
      for (std::size_t k = 0; k < d; ++k) {
        tgt[k] = gc(0) * cm.amp[k] + gc(1) * cp.amp[k];
        tn += std::norm(tgt[k]);
        ip += std::conj(tgt[k]) * w[k];
      }
      const double f = std::norm(ip) / (tn * p);
      num += p * f;
      den += p;
    }
  return num / den;
}

// Full demonstration: the resource comes from the requested operating point;
// the input cat is generated at the same (lambda, m) with the splitter angle
// solved so its best fit matches the resource poles (the source amplitude
// sits sqrt(2) above the pole amplitude).
inline double dakna_gate_demo(double phi, const CatGenSpec& spec, int cutoff) {
  if (spec.lambda <= 0.0) throw InvalidArgument("gate demo expects positive squeezing");
  const FockVector source = dakna_state(spec, cutoff);
  const MultiModeState resource = bell_from_cat(source);
  const double alpha = best_cat_fit(source).alpha / std::sqrt(2.0);

  // the best-fit amplitude grows with the kept-port scale, so bisection on
  // the scale brackets the matching input angle
  const double x_hi = std::abs(dakna_scale(spec));
  auto theta_at = [&](double x) { return std::acos(std::sqrt(x / spec.lambda)); };
  double lo = 1e-4 * x_hi, hi = x_hi;
  for (int i = 0; i < 48; ++i) {
    const double mid = 0.5 * (lo + hi);
    CatGenSpec s = spec;
    s.theta_bs = theta_at(mid);
    (best_cat_fit(dakna_state(s, cutoff)).alpha < alpha ? lo : hi) = mid;
  }
  CatGenSpec in = spec;
  in.theta_bs = theta_at(0.5 * (lo + hi));
  return fock_rz_fidelity(dakna_state(in, cutoff), resource, alpha, phi);
}

}  // namespace catsim
