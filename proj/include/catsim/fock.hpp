#pragma once

// Truncated Fock-space backend: states are amplitude vectors over photon
// number, operators act exactly on the retained block.  Everything here is
// convention-pinned:
//   - quadrature x = (a + a^dag)/sqrt(2), vacuum variance 1/2
//   - PhaseCoupled beamsplitter  U = exp[ i(theta/2)(a b^dag + a^dag b) ]
//   - RealCoupled beamsplitter   U = exp[ phi (a b^dag - a^dag b) ]
// A 50:50 RealCoupled splitter (phi = pi/4) maps coherent labels
// (g, b) -> ((g - b)/sqrt2, (b + g)/sqrt2).

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "catsim/errors.hpp"

namespace catsim {

using cx = std::complex<double>;

struct FockVector {
  std::vector<cx> amp;  // amp[n] multiplies |n>, n = 0..cutoff
  int cutoff() const { return static_cast<int>(amp.size()) - 1; }
};

// Cutoff policy: retains the mean +- many standard deviations of a Poisson
// with the given amplitude, plus slack for displaced/rotated intermediates.
inline int cutoff_for_amplitude(double beta_max) {
  return static_cast<int>(std::ceil(beta_max * beta_max + 8.0 * beta_max + 20.0));
}

// Photon-count enumeration grid for measurement loops.  Ports of a split
// qubit-resource pair carry up to ~2 alpha^2 mean photons.
inline int count_grid(double alpha) {
  return static_cast<int>(std::ceil(2.0 * alpha * alpha + 8.0 * alpha + 20.0));
}

inline double norm2(const FockVector& v) {
  double s = 0.0;
  for (const cx& a : v.amp) s += std::norm(a);
  return s;
}

// Mass in the top two retained levels.  Anything reaching them would wrap
// into cutoff-dependent garbage, so preparations treat this as fatal.
inline double tail_weight(const FockVector& v) {
  const int n = static_cast<int>(v.amp.size());
  double t = 0.0;
  if (n >= 1) t += std::norm(v.amp[n - 1]);
  if (n >= 2) t += std::norm(v.amp[n - 2]);
  return t;
}

inline void require_tail(const FockVector& v, double tol = 1e-10) {
  const double t = tail_weight(v);
  if (!(t < tol))
    throw TruncationError("truncation tail " + std::to_string(t) +
                          " exceeds tolerance; raise the cutoff");
}

// ------------------------------------------------------------------ states

inline FockVector coherent(cx alpha, int cutoff, double tail_tol = 1e-10) {
  if (cutoff < 0) throw InvalidArgument("cutoff must be >= 0");
  FockVector v;
  v.amp.assign(cutoff + 1, cx(0.0));
  v.amp[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n < cutoff; ++n)
    v.amp[n + 1] = v.amp[n] * alpha / std::sqrt(static_cast<double>(n + 1));
  require_tail(v, tail_tol);
  return v;
}

inline FockVector fock_basis(int n, int cutoff) {
  if (n < 0 || n > cutoff) throw InvalidArgument("basis index out of range");
  FockVector v;
  v.amp.assign(cutoff + 1, cx(0.0));
  v.amp[n] = 1.0;
  return v;
}

// Even (+1) or odd (-1) coherent-state superposition (|-alpha> +- |alpha>),
// normalized by N = 2 +- 2 exp(-2 alpha^2).  The odd cat degenerates at
// alpha = 0 (zero norm) and is rejected there.
inline FockVector cat(double alpha, int parity, int cutoff,
                      double tail_tol = 1e-10) {
  if (parity != 1 && parity != -1) throw InvalidArgument("parity must be +-1");
  if (alpha < 0.0) throw InvalidArgument("cat amplitude must be >= 0");
  const double nrm = 2.0 + 2.0 * parity * std::exp(-2.0 * alpha * alpha);
  if (nrm <= 0.0)
    throw InvalidArgument("odd cat at alpha = 0 has zero norm");
  FockVector m = coherent(-alpha, cutoff, tail_tol);
  FockVector p = coherent(alpha, cutoff, tail_tol);
  FockVector v;
  v.amp.resize(cutoff + 1);
  const double s = 1.0 / std::sqrt(nrm);
  for (int n = 0; n <= cutoff; ++n)
    v.amp[n] = (m.amp[n] + static_cast<double>(parity) * p.amp[n]) * s;
  return v;
}

// Even-photon squeezed vacuum: c_{2n} = (1-l^2)^{1/4} sqrt((2n)!)/n! (l/2)^n.
inline FockVector squeezed_even(double lambda, int cutoff,
                                double tail_tol = 1e-10) {
  if (!(std::abs(lambda) < 1.0))
    throw InvalidArgument("squeezing parameter must satisfy |lambda| < 1");
  FockVector v;
  v.amp.assign(cutoff + 1, cx(0.0));
  double c = std::pow(1.0 - lambda * lambda, 0.25);
  for (int n = 0; 2 * n <= cutoff; ++n) {
    v.amp[2 * n] = c;
    c *= 0.5 * lambda * std::sqrt(static_cast<double>((2 * n + 1) * (2 * n + 2))) /
         static_cast<double>(n + 1);
  }
  require_tail(v, tail_tol);
  return v;
}

// -------------------------------------------------------------- operators

// Displacement on the retained block, built as exp(iH) with Hermitian
// H = -i (beta a^dag - conj(beta) a) via eigendecomposition.  This is unitary
// to machine precision for every beta (the naive matrix-element recurrence is
// not: the top columns of the truncated block lose the mass that leaks past
// the cutoff).  On states that stay clear of the cutoff it agrees with the
// exact operator; the tests cross-check that against the recurrence.
inline Eigen::MatrixXcd displacement_matrix(cx beta, int dim) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int m = 0; m + 1 < dim; ++m) {
    const double r = std::sqrt(static_cast<double>(m + 1));
    h(m + 1, m) = cx(0.0, -1.0) * beta * r;
    h(m, m + 1) = cx(0.0, 1.0) * std::conj(beta) * r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::MatrixXcd& vec = es.eigenvectors();
  Eigen::VectorXcd ph(dim);
  for (int k = 0; k < dim; ++k)
    ph(k) = std::polar(1.0, es.eigenvalues()(k));
  return vec * ph.asDiagonal() * vec.adjoint();
}

inline FockVector displace(const FockVector& v, cx beta) {
  const int dim = static_cast<int>(v.amp.size());
  const Eigen::MatrixXcd d = displacement_matrix(beta, dim);
  FockVector out;
  out.amp.assign(dim, cx(0.0));
  Eigen::Map<const Eigen::VectorXcd> in(v.amp.data(), dim);
  Eigen::Map<Eigen::VectorXcd>(out.amp.data(), dim) = d * in;
  return out;
}

// a_n -> exp(i phi n) a_n.  phi = pi realizes the label flip |b> -> |-b>.
inline FockVector phase_rotate(const FockVector& v, double phi) {
  FockVector out = v;
  for (int n = 0; n < static_cast<int>(out.amp.size()); ++n)
    out.amp[n] *= std::polar(1.0, phi * static_cast<double>(n));
  return out;
}

// ------------------------------------------------------------- multi-mode

// Dense joint state, all modes sharing one per-mode dimension.  Mode 0 is
// the slowest index.  Desk scale: dim <= ~130, modes <= 3.
struct MultiModeState {
  int dim = 0;
  int modes = 0;
  std::vector<cx> amp;
  int cutoff() const { return dim - 1; }
};

inline std::size_t mm_stride(const MultiModeState& s, int mode) {
  std::size_t st = 1;
  for (int m = s.modes - 1; m > mode; --m) st *= static_cast<std::size_t>(s.dim);
  return st;
}

inline MultiModeState from_single(const FockVector& v) {
  MultiModeState s;
  s.dim = static_cast<int>(v.amp.size());
  s.modes = 1;
  s.amp = v.amp;
  return s;
}

inline MultiModeState tensor(const MultiModeState& a, const FockVector& b) {
  if (a.dim != static_cast<int>(b.amp.size()))
    throw DimensionMismatch("tensor factors must share the per-mode dimension");
  MultiModeState s;
  s.dim = a.dim;
  s.modes = a.modes + 1;
  s.amp.resize(a.amp.size() * b.amp.size());
  std::size_t k = 0;
  for (const cx& x : a.amp)
    for (const cx& y : b.amp) s.amp[k++] = x * y;
  return s;
}

inline MultiModeState tensor(const MultiModeState& a, const MultiModeState& b) {
  if (a.dim != b.dim)
    throw DimensionMismatch("tensor factors must share the per-mode dimension");
  MultiModeState s;
  s.dim = a.dim;
  s.modes = a.modes + b.modes;
  s.amp.resize(a.amp.size() * b.amp.size());
  std::size_t k = 0;
  for (const cx& x : a.amp)
    for (const cx& y : b.amp) s.amp[k++] = x * y;
  return s;
}

inline MultiModeState tensor(const std::vector<FockVector>& factors) {
  if (factors.empty()) throw InvalidArgument("tensor of zero factors");
  MultiModeState s = from_single(factors[0]);
  for (std::size_t i = 1; i < factors.size(); ++i) s = tensor(s, factors[i]);
  return s;
}

inline double norm2(const MultiModeState& s) {
  double t = 0.0;
  for (const cx& a : s.amp) t += std::norm(a);
  return t;
}

inline MultiModeState phase_rotate(const MultiModeState& s, int mode, double phi) {
  MultiModeState out = s;
  const std::size_t stride = mm_stride(s, mode);
  const std::size_t block = stride * static_cast<std::size_t>(s.dim);
  for (std::size_t base = 0; base < out.amp.size(); base += block)
    for (int n = 0; n < s.dim; ++n) {
      const cx ph = std::polar(1.0, phi * static_cast<double>(n));
      for (std::size_t q = 0; q < stride; ++q)
        out.amp[base + static_cast<std::size_t>(n) * stride + q] *= ph;
    }
  return out;
}

struct BeamsplitterConvention {
  enum Kind { PhaseCoupled, RealCoupled } kind;
  double angle;
};

inline BeamsplitterConvention phase_coupled(double theta) {
  return {BeamsplitterConvention::PhaseCoupled, theta};
}
inline BeamsplitterConvention real_coupled(double phi) {
  return {BeamsplitterConvention::RealCoupled, phi};
}

// Exact sector-wise application: total photon number in (mi, mj) is
// conserved, and each sector unitary comes from a Hermitian
// eigendecomposition, so the whole map is unitary on the retained block even
// where the block clips high sectors.
inline MultiModeState beamsplitter(const MultiModeState& s, int mi, int mj,
                                   BeamsplitterConvention conv) {
  if (mi == mj || mi < 0 || mj < 0 || mi >= s.modes || mj >= s.modes)
    throw InvalidArgument("beamsplitter needs two distinct valid modes");
  const int n = s.cutoff();
  const std::size_t si = mm_stride(s, mi);
  const std::size_t sj = mm_stride(s, mj);

  // Spectator bases: every index combination with modes mi, mj at zero.
  std::vector<std::size_t> bases;
  {
    std::vector<int> other;
    for (int m = 0; m < s.modes; ++m)
      if (m != mi && m != mj) other.push_back(m);
    std::size_t cnt = 1;
    for (std::size_t i = 0; i < other.size(); ++i)
      cnt *= static_cast<std::size_t>(s.dim);
    bases.reserve(cnt);
    for (std::size_t t = 0; t < cnt; ++t) {
      std::size_t base = 0, rest = t;
      for (int m : other) {
        base += (rest % static_cast<std::size_t>(s.dim)) * mm_stride(s, m);
        rest /= static_cast<std::size_t>(s.dim);
      }
      bases.push_back(base);
    }
  }

  MultiModeState out = s;
  for (int tot = 1; tot <= 2 * n; ++tot) {
    const int lo = std::max(0, tot - n);
    const int hi = std::min(tot, n);
    const int d = hi - lo + 1;
    if (d <= 1) continue;

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 0; i + 1 < d; ++i) {
      const int k = lo + i;  // coupling between (k, tot-k) and (k+1, tot-k-1)
      const double c = std::sqrt(static_cast<double>((k + 1) * (tot - k)));
      if (conv.kind == BeamsplitterConvention::PhaseCoupled) {
        h(i, i + 1) = 0.5 * conv.angle * c;
        h(i + 1, i) = 0.5 * conv.angle * c;
      } else {
        h(i, i + 1) = cx(0.0, -conv.angle) * c;
        h(i + 1, i) = cx(0.0, conv.angle) * c;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd ph(d);
    for (int k = 0; k < d; ++k) ph(k) = std::polar(1.0, es.eigenvalues()(k));
    const Eigen::MatrixXcd u =
        es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();

    Eigen::VectorXcd v(d), w(d);
    for (std::size_t base : bases) {
      for (int i = 0; i < d; ++i)
        v(i) = s.amp[base + static_cast<std::size_t>(lo + i) * si +
                     static_cast<std::size_t>(tot - lo - i) * sj];
      w = u * v;
      for (int i = 0; i < d; ++i)
        out.amp[base + static_cast<std::size_t>(lo + i) * si +
                static_cast<std::size_t>(tot - lo - i) * sj] = w(i);
    }
  }
  return out;
}

// Condition on counting n photons in one mode.  Returns the normalized state
// on the remaining modes and the outcome probability (relative to the input
// norm).  The measured mode is removed.
inline std::pair<MultiModeState, double> project_fock(const MultiModeState& s,
                                                      int mode, int n) {
  if (mode < 0 || mode >= s.modes) throw InvalidArgument("bad mode index");
  if (n < 0 || n > s.cutoff()) throw InvalidArgument("count out of range");
  const std::size_t stride = mm_stride(s, mode);
  const std::size_t block = stride * static_cast<std::size_t>(s.dim);

  MultiModeState out;
  out.dim = s.dim;
  out.modes = s.modes - 1;
  out.amp.reserve(s.amp.size() / static_cast<std::size_t>(s.dim));
  for (std::size_t base = 0; base < s.amp.size(); base += block)
    for (std::size_t q = 0; q < stride; ++q)
      out.amp.push_back(s.amp[base + static_cast<std::size_t>(n) * stride + q]);
  if (out.modes == 0) out.amp.assign(1, out.amp.empty() ? cx(0.0) : out.amp[0]);

  const double total = norm2(s);
  double part = 0.0;
  if (out.modes == 0) {
    std::size_t base = static_cast<std::size_t>(n) * stride;
    part = std::norm(s.amp[base]);
    out.amp[0] = s.amp[base];
  } else {
    for (const cx& a : out.amp) part += std::norm(a);
  }
  const double p = part / total;
  if (p < 1e-30) throw ZeroProbability("conditioned on a zero-probability count");
  const double scale = 1.0 / std::sqrt(part);
  for (cx& a : out.amp) a *= scale;
  return {out, p};
}

inline std::vector<double> marginal_photon_distribution(const MultiModeState& s,
                                                        int mode) {
  const std::size_t stride = mm_stride(s, mode);
  const std::size_t block = stride * static_cast<std::size_t>(s.dim);
  std::vector<double> p(static_cast<std::size_t>(s.dim), 0.0);
  for (std::size_t base = 0; base < s.amp.size(); base += block)
    for (int n = 0; n < s.dim; ++n)
      for (std::size_t q = 0; q < stride; ++q)
        p[static_cast<std::size_t>(n)] +=
            std::norm(s.amp[base + static_cast<std::size_t>(n) * stride + q]);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return p;
}

inline double mean_photon(const FockVector& v) {
  double num = 0.0, den = 0.0;
  for (int n = 0; n < static_cast<int>(v.amp.size()); ++n) {
    const double w = std::norm(v.amp[n]);
    num += n * w;
    den += w;
  }
  return num / den;
}

inline double mean_photon(const MultiModeState& s, int mode) {
  const std::vector<double> p = marginal_photon_distribution(s, mode);
  double m = 0.0;
  for (int n = 0; n < static_cast<int>(p.size()); ++n) m += n * p[n];
  return m;
}

// ------------------------------------------------------------- comparison

inline cx inner(const FockVector& a, const FockVector& b) {
  if (a.amp.size() != b.amp.size())
    throw DimensionMismatch("fidelity of states with different cutoffs");
  cx s(0.0);
  for (std::size_t n = 0; n < a.amp.size(); ++n)
    s += std::conj(a.amp[n]) * b.amp[n];
  return s;
}

inline cx inner(const MultiModeState& a, const MultiModeState& b) {
  if (a.dim != b.dim || a.modes != b.modes)
    throw DimensionMismatch("fidelity of states with different shapes");
  cx s(0.0);
  for (std::size_t n = 0; n < a.amp.size(); ++n)
    s += std::conj(a.amp[n]) * b.amp[n];
  return s;
}

template <class State>
inline double fidelity(const State& a, const State& b) {
  return std::norm(inner(a, b)) / (norm2(a) * norm2(b));
}

// Pure target against a weighted pure ensemble: <psi| rho |psi>.
template <class State>
inline double ensemble_fidelity(
    const std::vector<std::pair<double, State>>& mixture, const State& pure) {
  double f = 0.0, wsum = 0.0;
  for (const auto& [w, st] : mixture) {
    f += w * fidelity(st, pure);
    wsum += w;
  }
  return f / wsum;
}

// ------------------------------------------------------------- quadrature

// P(x) for the rotated quadrature x_phi = (a e^{-i phi} + a^dag e^{i phi})/sqrt2,
// via the Hermite-function recurrence
//   h_0 = pi^{-1/4} e^{-x^2/2},  h_{n+1} = (sqrt2 x h_n - sqrt(n) h_{n-1})/sqrt(n+1).
// Integrates to 1 over dx.
inline std::vector<double> quadrature_distribution(const FockVector& v,
                                                   double phase,
                                                   const std::vector<double>& grid) {
  const int dim = static_cast<int>(v.amp.size());
  std::vector<cx> rot(v.amp);
  for (int n = 0; n < dim; ++n)
    rot[n] *= std::polar(1.0, -phase * static_cast<double>(n));
  const double nrm = norm2(v);

  std::vector<double> out;
  out.reserve(grid.size());
  for (double x : grid) {
    double hprev = 0.0;
    double h = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    cx psi = rot[0] * h;
    for (int n = 0; n + 1 < dim; ++n) {
      const double hnext =
          (std::sqrt(2.0) * x * h - std::sqrt(static_cast<double>(n)) * hprev) /
          std::sqrt(static_cast<double>(n + 1));
      hprev = h;
      h = hnext;
      psi += rot[n + 1] * h;
    }
    out.push_back(std::norm(psi) / nrm);
  }
  return out;
}

}  // namespace catsim
