#pragma once

// Exact algebra over finite superpositions of multimode coherent states.
// Displacements, beamsplitters and phase rotations map coherent labels to
// coherent labels, so circuits built from them plus photon-count projections
// evaluate in closed form.  This module is the independent oracle for the
// truncated Fock backend wherever no squeezed state is involved.
//
// States are unnormalized working objects (conditional states especially);
// the squared norm is evaluated lazily through the Gram matrix of pairwise
// label overlaps and cached.

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "catsim/errors.hpp"
#include "catsim/fock.hpp"

namespace catsim {

// <tau|alpha> for coherent labels.
inline cx overlap(cx tau, cx alpha) {
  return std::exp(-0.5 * (std::norm(tau) + std::norm(alpha)) +
                  std::conj(tau) * alpha);
}

// <n|beta>
inline cx fock_amplitude(cx beta, int n) {
  if (beta == cx(0.0)) return n == 0 ? cx(1.0) : cx(0.0);
  return std::exp(-0.5 * std::norm(beta) + static_cast<double>(n) * std::log(beta) -
                  0.5 * std::lgamma(static_cast<double>(n) + 1.0));
}

struct CoherentTerm {
  cx coeff;
  std::vector<cx> labels;  // one per mode
};

struct CoherentSuperposition {
  int mode_count = 0;
  std::vector<CoherentTerm> terms;
  mutable double norm2_cache = -1.0;  // lazy; negative means not computed
};

inline CoherentSuperposition make_cs(int modes, std::vector<CoherentTerm> terms) {
  for (const auto& t : terms)
    if (static_cast<int>(t.labels.size()) != modes)
      throw InvalidArgument("term label count does not match mode count");
  return CoherentSuperposition{modes, std::move(terms), -1.0};
}

inline cx term_overlap(const CoherentTerm& a, const CoherentTerm& b) {
  cx o(1.0);
  for (std::size_t m = 0; m < a.labels.size(); ++m)
    o *= overlap(a.labels[m], b.labels[m]);
  return o;
}

inline cx cs_dot(const CoherentSuperposition& a, const CoherentSuperposition& b) {
  if (a.mode_count != b.mode_count)
    throw DimensionMismatch("inner product of states with different mode counts");
  cx s(0.0);
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms)
      s += std::conj(ta.coeff) * tb.coeff * term_overlap(ta, tb);
  return s;
}

inline double cs_norm2(const CoherentSuperposition& s) {
  if (s.norm2_cache < 0.0)
    s.norm2_cache = std::max(0.0, std::real(cs_dot(s, s)));
  return s.norm2_cache;
}

inline double cs_fidelity(const CoherentSuperposition& a,
                          const CoherentSuperposition& b) {
  return std::norm(cs_dot(a, b)) / (cs_norm2(a) * cs_norm2(b));
}

// ------------------------------------------------------------------ gates

// Label gamma -> gamma + beta, coefficient picks up e^{(beta g* - beta* g)/2}.
inline CoherentSuperposition cs_displace(const CoherentSuperposition& s, int mode,
                                         cx beta) {
  CoherentSuperposition out = make_cs(s.mode_count, s.terms);
  for (auto& t : out.terms) {
    const cx g = t.labels[mode];
    t.coeff *= std::exp(0.5 * (beta * std::conj(g) - std::conj(beta) * g));
    t.labels[mode] = g + beta;
  }
  return out;
}

inline CoherentSuperposition cs_phase_rotate(const CoherentSuperposition& s,
                                             int mode, double phi) {
  CoherentSuperposition out = make_cs(s.mode_count, s.terms);
  const cx ph = std::polar(1.0, phi);
  for (auto& t : out.terms) t.labels[mode] *= ph;
  return out;
}

// Labels transform by the convention's 2x2 matrix; coefficients unchanged
// (coherent products carry no extra beamsplitter phase).
inline CoherentSuperposition cs_beamsplitter(const CoherentSuperposition& s,
                                             int mi, int mj,
                                             BeamsplitterConvention conv) {
  if (mi == mj || mi < 0 || mj < 0 || mi >= s.mode_count || mj >= s.mode_count)
    throw InvalidArgument("beamsplitter needs two distinct valid modes");
  CoherentSuperposition out = make_cs(s.mode_count, s.terms);
  for (auto& t : out.terms) {
    const cx g = t.labels[mi], b = t.labels[mj];
    if (conv.kind == BeamsplitterConvention::PhaseCoupled) {
      const double c = std::cos(0.5 * conv.angle), sn = std::sin(0.5 * conv.angle);
      t.labels[mi] = g * c + cx(0.0, 1.0) * b * sn;
      t.labels[mj] = b * c + cx(0.0, 1.0) * g * sn;
    } else {
      const double c = std::cos(conv.angle), sn = std::sin(conv.angle);
      t.labels[mi] = g * c - b * sn;
      t.labels[mj] = b * c + g * sn;
    }
  }
  return out;
}

// Condition on counting n photons in one mode.  Returns the unnormalized
// conditional state on the remaining modes (term order preserved, no merging)
// and the outcome probability relative to the input norm.
inline std::pair<CoherentSuperposition, double> cs_project_fock(
    const CoherentSuperposition& s, int mode, int n) {
  if (mode < 0 || mode >= s.mode_count) throw InvalidArgument("bad mode index");
  if (n < 0) throw InvalidArgument("negative count");
  CoherentSuperposition out;
  out.mode_count = s.mode_count - 1;
  out.terms.reserve(s.terms.size());
  for (const auto& t : s.terms) {
    CoherentTerm r;
    r.coeff = t.coeff * fock_amplitude(t.labels[mode], n);
    r.labels.reserve(t.labels.size() - 1);
    for (std::size_t m = 0; m < t.labels.size(); ++m)
      if (static_cast<int>(m) != mode) r.labels.push_back(t.labels[m]);
    out.terms.push_back(std::move(r));
  }
  const double p = cs_norm2(out) / cs_norm2(s);
  return {out, p};
}

inline CoherentSuperposition cs_tensor(const CoherentSuperposition& a,
                                       const CoherentSuperposition& b) {
  CoherentSuperposition out;
  out.mode_count = a.mode_count + b.mode_count;
  out.terms.reserve(a.terms.size() * b.terms.size());
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) {
      CoherentTerm t;
      t.coeff = ta.coeff * tb.coeff;
      t.labels = ta.labels;
      t.labels.insert(t.labels.end(), tb.labels.begin(), tb.labels.end());
      out.terms.push_back(std::move(t));
    }
  return out;
}

// Merge terms whose labels agree within label_tol (summing coefficients) and
// drop terms below drop_tol.  Round-trip circuits otherwise accumulate
// near-duplicate labels that make the Gram matrix singular.
inline CoherentSuperposition cs_merge(const CoherentSuperposition& s,
                                      double label_tol = 1e-12,
                                      double drop_tol = 0.0) {
  CoherentSuperposition out;
  out.mode_count = s.mode_count;
  for (const auto& t : s.terms) {
    bool merged = false;
    for (auto& u : out.terms) {
      bool same = true;
      for (std::size_t m = 0; m < t.labels.size() && same; ++m)
        same = std::abs(t.labels[m] - u.labels[m]) <= label_tol;
      if (same) {
        u.coeff += t.coeff;
        merged = true;
        break;
      }
    }
    if (!merged) out.terms.push_back(t);
  }
  if (drop_tol > 0.0)
    std::erase_if(out.terms,
                  [&](const CoherentTerm& t) { return std::abs(t.coeff) <= drop_tol; });
  return out;
}

inline CoherentSuperposition cs_add(const CoherentSuperposition& a,
                                    const CoherentSuperposition& b, cx wa = 1.0,
                                    cx wb = 1.0) {
  if (a.mode_count != b.mode_count)
    throw DimensionMismatch("adding states with different mode counts");
  CoherentSuperposition out;
  out.mode_count = a.mode_count;
  out.terms.reserve(a.terms.size() + b.terms.size());
  for (const auto& t : a.terms) out.terms.push_back({wa * t.coeff, t.labels});
  for (const auto& t : b.terms) out.terms.push_back({wb * t.coeff, t.labels});
  return cs_merge(out);
}

// --------------------------------------------------------------- analysis

inline double cs_mean_photon(const CoherentSuperposition& s, int mode) {
  cx num(0.0);
  for (const auto& ta : s.terms)
    for (const auto& tb : s.terms)
      num += std::conj(ta.coeff) * tb.coeff * std::conj(ta.labels[mode]) *
             tb.labels[mode] * term_overlap(ta, tb);
  return std::real(num) / cs_norm2(s);
}

inline double cs_gram_min_eigenvalue(const CoherentSuperposition& s) {
  const int n = static_cast<int>(s.terms.size());
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = term_overlap(s.terms[i], s.terms[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g);
  return es.eigenvalues().minCoeff();
}

// ------------------------------------------------------------ qubit layer

// Logical qubit mu|-alpha> + nu|alpha>; the basis states are not orthogonal,
// so the norm carries the cross term 2 Re(mu* nu) e^{-2 alpha^2}.
struct QubitState {
  cx mu, nu;
  double alpha;
};

inline double qubit_norm2(const QubitState& q) {
  const double k = std::exp(-2.0 * q.alpha * q.alpha);
  return std::norm(q.mu) + std::norm(q.nu) +
         2.0 * std::real(std::conj(q.mu) * q.nu) * k;
}

inline QubitState normalized_qubit(cx mu, cx nu, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("qubit amplitude must be positive");
  QubitState q{mu, nu, alpha};
  const double n2 = qubit_norm2(q);
  if (n2 <= 0.0) throw InvalidArgument("qubit with zero norm");
  const double s = 1.0 / std::sqrt(n2);
  q.mu *= s;
  q.nu *= s;
  return q;
}

inline CoherentSuperposition qubit_cs(const QubitState& q) {
  return make_cs(1, {{q.mu, {cx(-q.alpha, 0.0)}}, {q.nu, {cx(q.alpha, 0.0)}}});
}

// X on the coherent encoding is the label flip (pi phase rotation).
inline CoherentSuperposition apply_X(const CoherentSuperposition& s, int mode) {
  CoherentSuperposition out = make_cs(s.mode_count, s.terms);
  for (auto& t : out.terms) t.labels[mode] = -t.labels[mode];
  return out;
}

// Z negates the |+alpha> branch.  Only defined on the computational span.
inline CoherentSuperposition apply_Z(const CoherentSuperposition& s, int mode,
                                     double alpha, double span_tol = 1e-9) {
  CoherentSuperposition out = make_cs(s.mode_count, s.terms);
  for (auto& t : out.terms) {
    if (std::abs(t.labels[mode] - cx(alpha, 0.0)) < span_tol)
      t.coeff = -t.coeff;
    else if (std::abs(t.labels[mode] + cx(alpha, 0.0)) >= span_tol)
      throw InvalidArgument("Z correction applied outside the qubit span");
  }
  return out;
}

// ---------------------------------------------------- bridge to Fock space

inline FockVector cs_to_fock(const CoherentSuperposition& s, int cutoff) {
  if (s.mode_count != 1)
    throw InvalidArgument("cs_to_fock expects a single-mode state");
  FockVector v;
  v.amp.assign(cutoff + 1, cx(0.0));
  for (const auto& t : s.terms)
    for (int n = 0; n <= cutoff; ++n)
      v.amp[n] += t.coeff * fock_amplitude(t.labels[0], n);
  return v;
}

inline MultiModeState cs_to_multimode(const CoherentSuperposition& s, int cutoff) {
  MultiModeState out;
  out.dim = cutoff + 1;
  out.modes = s.mode_count;
  std::size_t sz = 1;
  for (int m = 0; m < s.mode_count; ++m) sz *= static_cast<std::size_t>(out.dim);
  out.amp.assign(sz, cx(0.0));
  for (const auto& t : s.terms) {
    std::vector<FockVector> fac;
    fac.reserve(t.labels.size());
    for (cx l : t.labels) fac.push_back(coherent(l, cutoff));
    for (std::size_t idx = 0; idx < sz; ++idx) {
      cx a = t.coeff;
      std::size_t rest = idx;
      for (int m = s.mode_count - 1; m >= 0; --m) {
        a *= fac[m].amp[rest % static_cast<std::size_t>(out.dim)];
        rest /= static_cast<std::size_t>(out.dim);
      }
      out.amp[idx] += a;
    }
  }
  return out;
}

}  // namespace catsim
