#pragma once
// Teleportation-based gate layer for coherent-state qubits.
//
// Every gate runs under one of two measurement treatments, selected per call:
//   MeasureModel::Ideal     span-frame projections: the poles |-a>, |+a> are
//                           treated as an orthogonal pair, success follows the
//                           closed-form capture laws, and Bell classes land
//                           uniformly.
//   MeasureModel::Counting  exact label pipeline: 50:50 split against a Bell
//                           resource, photon counts sampled from the exact
//                           conditional masses.
//
// Bell-port convention: bell_split orients the splitter so the first counted
// port (n_a) carries (q + r)/sqrt(2) and the second (n_b) carries
// (r - q)/sqrt(2).  The count-keyed correction rule is
//   n_a >= n_b  ->  Z^(n_a mod 2)
//   n_a <  n_b  ->  X, then Z^(n_b mod 2)
//
// Rotation displacements enter as a pure label shift ib, b = theta/(2 alpha);
// the branch phases of the physical displacement operator are absorbed into
// this frame.  All conditional-state tables below live in that frame, which is
// why the raw mass of a rotation's outcome grid sits slightly below one: the
// shifted qubit's norm carries the oscillating cross term.  Outcome grids are
// therefore reported with normalized probabilities plus the raw frame mass.
//
// GateOutcome.probability multiplies every sampled event along the run:
// photon-count branch masses, uniform ideal classes, and the Bernoulli draws
// of offline resource preparations.  Failed offline preparations never touch
// the input qubit; they only append a Failure entry to the record.
//
// Failure states: Counting failures return the honest dark-port conditional;
// Ideal failures return the last in-span state before the failed step (callers
// treat success == false as a discard either way).

#include "coherent_algebra.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

namespace catsim {

enum class BellKind { B00, B10, B01, B11, Failure, MixedCounts };

struct BellOutcome {
  BellKind kind = BellKind::Failure;
  int na = 0;
  int nb = 0;
};

// (even>0, 0) -> B00, (odd, 0) -> B10, (0, even>0) -> B01, (0, odd) -> B11,
// (0, 0) -> Failure.  Both ports bright only happens off the ideal qubit
// space; such records keep their counts and classify as MixedCounts.
inline BellKind classify_counts(int na, int nb) {
  if (na == 0 && nb == 0) return BellKind::Failure;
  if (nb == 0) return na % 2 == 0 ? BellKind::B00 : BellKind::B10;
  if (na == 0) return nb % 2 == 0 ? BellKind::B01 : BellKind::B11;
  return BellKind::MixedCounts;
}

struct PauliCorrection {
  char op = 'Z';  // 'X' or 'Z'
  int mode = 0;
};

// corrections are listed in application order
inline std::vector<PauliCorrection> corrections_for(int na, int nb, int mode) {
  std::vector<PauliCorrection> out;
  if (na >= nb) {
    if (na % 2 == 1) out.push_back({'Z', mode});
  } else {
    out.push_back({'X', mode});
    if (nb % 2 == 1) out.push_back({'Z', mode});
  }
  return out;
}

inline CoherentSuperposition apply_corrections(CoherentSuperposition s,
                                               const std::vector<PauliCorrection>& corr,
                                               double alpha) {
  for (const auto& c : corr) {
    if (c.op == 'X')
      s = apply_X(s, c.mode);
    else
      s = apply_Z(s, c.mode, alpha);
  }
  return s;
}

struct GateOutcome {
  CoherentSuperposition state;               // corrected, unit norm
  std::vector<BellOutcome> record;           // every measurement performed
  std::vector<PauliCorrection> corrections;  // replayable on the raw branch
  bool success = true;
  double probability = 1.0;                  // mass of the sampled branch
};

enum class MeasureModel { Ideal, Counting };
enum class Strategy { Bare, Zeno, Teleported };
enum class Calibration { Linear, Sine };

// ---------------------------------------------------------------------------
// span algebra: Pauli and rotation matrices on the pole basis (|-a>, |+a>)

enum class Axis { I, X, Y, Z };

struct RotationSpec {
  Axis ki = Axis::Z;
  Axis kj = Axis::I;
  double theta = 0.0;
};

inline Eigen::Matrix2cd pauli_matrix(Axis k) {
  Eigen::Matrix2cd m;
  switch (k) {
    case Axis::I: m << 1, 0, 0, 1; break;
    case Axis::X: m << 0, 1, 1, 0; break;
    case Axis::Y: m << 0, cx(0, -1), cx(0, 1), 0; break;
    case Axis::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

// R(K, theta) = exp(-i theta K / 2)
inline Eigen::Matrix2cd rotation_matrix(Axis k, double theta) {
  const cx is = cx(0.0, -std::sin(theta / 2));
  return std::cos(theta / 2) * Eigen::Matrix2cd::Identity() + is * pauli_matrix(k);
}

inline Eigen::Matrix4cd rotation_matrix(const RotationSpec& spec) {
  Eigen::Matrix4cd kk = Eigen::Matrix4cd::Zero();
  const Eigen::Matrix2cd a = pauli_matrix(spec.ki);
  const Eigen::Matrix2cd b = pauli_matrix(spec.kj);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) kk.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  const cx is = cx(0.0, -std::sin(spec.theta / 2));
  return std::cos(spec.theta / 2) * Eigen::Matrix4cd::Identity() + is * kk;
}

inline Eigen::Matrix2cd correction_matrix(int na, int nb) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  if (na >= nb) {
    if (na % 2 == 1) m = pauli_matrix(Axis::Z);
  } else {
    m = pauli_matrix(Axis::X);
    if (nb % 2 == 1) m = pauli_matrix(Axis::Z) * m;
  }
  return m;
}

inline Eigen::Matrix2cd correction_matrix_from(const std::vector<PauliCorrection>& corr) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  for (const auto& c : corr) m = pauli_matrix(c.op == 'X' ? Axis::X : Axis::Z) * m;
  return m;
}

inline Eigen::Matrix2cd span_gram(double alpha) {
  const double k = std::exp(-2.0 * alpha * alpha);
  Eigen::Matrix2cd g;
  g << 1, k, k, 1;
  return g;
}

inline Eigen::Vector2cd qubit_span(const QubitState& q) { return {q.mu, q.nu}; }

inline QubitState span_qubit(const Eigen::Vector2cd& v, double alpha) {
  return normalized_qubit(v(0), v(1), alpha);
}

inline QubitState worst_case_qubit(double alpha) { return normalized_qubit(1.0, 1.0, alpha); }

// Collapse an in-span single-mode superposition onto its pole coefficients.
inline Eigen::Vector2cd span_coefficients(const CoherentSuperposition& s, double alpha,
                                          double tol = 1e-9) {
  if (s.mode_count != 1) throw DimensionMismatch("span_coefficients expects one mode");
  Eigen::Vector2cd v = Eigen::Vector2cd::Zero();
  for (const auto& t : s.terms) {
    const cx l = t.labels[0];
    if (std::abs(l + alpha) < tol)
      v(0) += t.coeff;
    else if (std::abs(l - alpha) < tol)
      v(1) += t.coeff;
    else
      throw InvalidArgument("span_coefficients: label outside the qubit span");
  }
  return v;
}

inline Eigen::Vector4cd two_qubit_coefficients(const CoherentSuperposition& s, double alpha,
                                               double tol = 1e-9) {
  if (s.mode_count != 2) throw DimensionMismatch("two_qubit_coefficients expects two modes");
  Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
  for (const auto& t : s.terms) {
    int idx = 0;
    for (int m = 0; m < 2; ++m) {
      const cx l = t.labels[static_cast<size_t>(m)];
      if (std::abs(l + alpha) < tol)
        idx = 2 * idx;
      else if (std::abs(l - alpha) < tol)
        idx = 2 * idx + 1;
      else
        throw InvalidArgument("two_qubit_coefficients: label outside the qubit span");
    }
    v(idx) += t.coeff;
  }
  return v;
}

struct TwoQubitState {
  Eigen::Vector4cd c;  // components ordered (--, -+, +-, ++)
  double alpha = 1.0;
};

inline TwoQubitState normalized_two_qubit(const Eigen::Vector4cd& c, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("two-qubit state needs alpha > 0");
  const Eigen::Matrix2cd g1 = span_gram(alpha);
  Eigen::Matrix4cd g = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) g.block<2, 2>(2 * i, 2 * j) = g1(i, j) * g1;
  const double n2 = std::real(c.dot(g * c));
  if (n2 <= 0.0) throw InvalidArgument("two-qubit state has zero norm");
  return {c / std::sqrt(n2), alpha};
}

inline CoherentSuperposition two_qubit_cs(const TwoQubitState& q2) {
  const double a = q2.alpha;
  std::vector<CoherentTerm> terms;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const cx c = q2.c(2 * i + j);
      if (c == cx(0.0, 0.0)) continue;
      terms.push_back({c, {cx(i == 0 ? -a : a, 0.0), cx(j == 0 ? -a : a, 0.0)}});
    }
  return make_cs(2, terms);
}

// ---------------------------------------------------------------------------
// resource construction and port conventions

inline CoherentSuperposition cs_normalized(const CoherentSuperposition& s) {
  const double n2 = cs_norm2(s);
  if (n2 <= 0.0) throw ZeroProbability("cannot normalize a zero superposition");
  CoherentSuperposition out = s;
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& t : out.terms) t.coeff *= inv;
  out.norm2_cache = 1.0;
  return out;
}

// (|-a,-a> + |a,a>)/norm, produced by splitting an even cat of size sqrt(2) a
// against vacuum.  The splitter convention leaves the coefficients untouched.
inline CoherentSuperposition bell_resource(double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("bell_resource needs alpha > 0");
  const double big = std::numbers::sqrt2 * alpha;
  const double norm = std::sqrt(2.0 + 2.0 * std::exp(-2.0 * big * big));
  CoherentSuperposition cat2 =
      make_cs(2, {{cx(1.0 / norm, 0.0), {cx(-big, 0.0), cx(0.0, 0.0)}},
                  {cx(1.0 / norm, 0.0), {cx(big, 0.0), cx(0.0, 0.0)}}});
  return cs_beamsplitter(cat2, 0, 1, real_coupled(std::numbers::pi / 4));
}

// Orient the 50:50 splitter so mode_q ends up carrying (q + r)/sqrt(2); that
// port is counted first.
inline CoherentSuperposition bell_split(const CoherentSuperposition& s, int mode_q, int mode_r) {
  return cs_beamsplitter(s, mode_r, mode_q, real_coupled(std::numbers::pi / 4));
}

namespace detail {

// Sample a photon count on one mode from the exact conditional masses.
// Returns the unnormalized conditional; p_branch is relative to the input.
// The grid residual past nmax falls back to the heaviest-indexed live branch.
inline std::pair<int, CoherentSuperposition> sample_count(const CoherentSuperposition& s,
                                                          int mode, int nmax, SplitMix64& rng,
                                                          double& p_branch) {
  const double total = cs_norm2(s);
  if (total <= 0.0) throw ZeroProbability("sample_count on a zero-mass state");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  int last = -1;
  CoherentSuperposition last_state;
  double last_p = 0.0;
  for (int n = 0; n <= nmax; ++n) {
    auto [branch, p] = cs_project_fock(s, mode, n);
    const double mass = p * total;
    if (mass > 0.0) {
      last = n;
      last_state = branch;
      last_p = p;
    }
    acc += mass;
    if (acc >= u && mass > 0.0) {
      p_branch = p;
      return {n, std::move(branch)};
    }
  }
  if (last < 0) throw ZeroProbability("no live count branch within the grid");
  p_branch = last_p;
  return {last, std::move(last_state)};
}

inline CoherentSuperposition move_mode_to(CoherentSuperposition s, int from, int to) {
  if (from == to) return s;
  for (auto& t : s.terms) {
    const cx label = t.labels[static_cast<size_t>(from)];
    t.labels.erase(t.labels.begin() + from);
    t.labels.insert(t.labels.begin() + to, label);
  }
  s.norm2_cache = -1.0;
  return s;
}

struct ModeTeleport {
  CoherentSuperposition state;  // uncorrected conditional, output in the original slot
  BellOutcome outcome;
  double probability = 0.0;
};

// Teleport one mode through a fresh Bell resource, sampling both counted
// ports.  No corrections are applied here.
inline ModeTeleport teleport_mode(const CoherentSuperposition& s, int mode, double alpha,
                                  int nmax, SplitMix64& rng) {
  const int m = s.mode_count;
  CoherentSuperposition st = cs_tensor(s, bell_resource(alpha));  // arms at m, m+1
  st = bell_split(st, mode, m);
  double p1 = 0.0, p2 = 0.0;
  auto [na, s1] = sample_count(st, mode, nmax, rng, p1);
  auto [nb, s2] = sample_count(s1, m - 1, nmax, rng, p2);  // former first arm slot
  ModeTeleport out;
  out.state = move_mode_to(std::move(s2), m - 1, mode);
  out.outcome = {classify_counts(na, nb), na, nb};
  out.probability = p1 * p2;
  return out;
}

inline bool is_x_class(BellKind k) { return k == BellKind::B01 || k == BellKind::B11; }

inline BellOutcome representative(BellKind k) {
  switch (k) {
    case BellKind::B00: return {k, 2, 0};
    case BellKind::B10: return {k, 1, 0};
    case BellKind::B01: return {k, 0, 2};
    case BellKind::B11: return {k, 0, 1};
    default: return {BellKind::Failure, 0, 0};
  }
}

inline BellKind uniform_class(SplitMix64& rng) {
  switch (static_cast<int>(rng.uniform() * 4.0)) {
    case 0: return BellKind::B00;
    case 1: return BellKind::B10;
    case 2: return BellKind::B01;
    default: return BellKind::B11;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// measurements

struct CatOutcome {
  int parity = 0;  // 0 even, 1 odd
  double probability = 0.0;
  CoherentSuperposition state;  // parity-projected, unit norm, mode kept
};

// Parity projector on one mode: P = (I +- F)/2 with F the label sign flip.
// The projected branches are exact superposition states again.
inline std::array<CatOutcome, 2> cat_measure_enumerate(const CoherentSuperposition& s,
                                                       int mode) {
  const double total = cs_norm2(s);
  if (total <= 0.0) throw ZeroProbability("cat_measure on a zero-mass state");
  std::array<CatOutcome, 2> out;
  for (int parity = 0; parity < 2; ++parity) {
    const double sign = parity == 0 ? 1.0 : -1.0;
    CoherentSuperposition proj = cs_add(s, apply_X(s, mode), 0.5, 0.5 * sign);
    const double mass = cs_norm2(proj);
    auto& cell = out[static_cast<size_t>(parity)];
    cell.parity = parity;
    cell.probability = mass / total;
    if (mass > 0.0) cell.state = cs_normalized(proj);
  }
  return out;
}

inline CatOutcome cat_measure(const CoherentSuperposition& s, int mode, SplitMix64& rng) {
  auto branches = cat_measure_enumerate(s, mode);
  return rng.uniform() < branches[0].probability ? branches[0] : branches[1];
}

struct BellMeasureResult {
  BellOutcome outcome;
  double probability = 0.0;
  CoherentSuperposition state;  // uncorrected conditional, unit norm
};

inline std::vector<BellMeasureResult> bell_measure_enumerate(const CoherentSuperposition& s,
                                                             int mode_q, int mode_r, int nmax) {
  CoherentSuperposition st = bell_split(s, mode_q, mode_r);
  if (cs_norm2(st) <= 0.0) throw ZeroProbability("bell_measure on a zero-mass state");
  const int r_after = mode_r > mode_q ? mode_r - 1 : mode_r;
  std::vector<BellMeasureResult> out;
  for (int na = 0; na <= nmax; ++na) {
    auto [s1, p1] = cs_project_fock(st, mode_q, na);
    if (p1 <= 0.0) continue;
    for (int nb = 0; nb <= nmax; ++nb) {
      auto [s2, p2] = cs_project_fock(s1, r_after, nb);
      const double p = p1 * p2;
      if (p <= 0.0) continue;
      BellMeasureResult r;
      r.outcome = {classify_counts(na, nb), na, nb};
      r.probability = p;
      r.state = cs_normalized(s2);
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline BellMeasureResult bell_measure(const CoherentSuperposition& s, int mode_q, int mode_r,
                                      int nmax, SplitMix64& rng) {
  CoherentSuperposition st = bell_split(s, mode_q, mode_r);
  const int r_after = mode_r > mode_q ? mode_r - 1 : mode_r;
  double p1 = 0.0, p2 = 0.0;
  auto [na, s1] = detail::sample_count(st, mode_q, nmax, rng, p1);
  auto [nb, s2] = detail::sample_count(s1, r_after, nmax, rng, p2);
  BellMeasureResult r;
  r.outcome = {classify_counts(na, nb), na, nb};
  r.probability = p1 * p2;
  r.state = cs_normalized(s2);
  return r;
}

// ---------------------------------------------------------------------------
// closed-form capture laws

inline double rz_ideal_success(double alpha, double theta) {
  return std::exp(-theta * theta / (4.0 * alpha * alpha));
}

inline double rz_zeno_success(double alpha, double theta, int steps) {
  if (steps < 1) throw InvalidArgument("zeno needs at least one step");
  return std::exp(-theta * theta / (4.0 * steps * alpha * alpha));
}

// Independent check of the capture law: run the n-step chain in the number
// basis, projecting back onto the qubit span (the cat pair spans it
// orthonormally) after each step displacement.
inline double zeno_chain_probability(const QubitState& q, double theta, int steps,
                                     int cutoff = -1) {
  if (steps < 1) throw InvalidArgument("zeno needs at least one step");
  const double a = q.alpha;
  if (cutoff < 0) cutoff = cutoff_for_amplitude(a + 1.0);
  const FockVector ep = cat(a, +1, cutoff);
  const FockVector em = cat(a, -1, cutoff);
  FockVector v = cs_to_fock(qubit_cs(q), cutoff);
  const double n0 = std::sqrt(norm2(v));
  for (auto& c : v.amp) c /= n0;
  const cx shift(0.0, theta / (2.0 * a * steps));
  double p = 1.0;
  for (int s = 0; s < steps; ++s) {
    const FockVector d = displace(v, shift);
    const cx cp = inner(ep, d), cm = inner(em, d);
    double kept = 0.0;
    for (std::size_t n = 0; n < v.amp.size(); ++n) {
      v.amp[n] = cp * ep.amp[n] + cm * em.amp[n];
      kept += std::norm(v.amp[n]);
    }
    if (kept <= 0.0) throw ZeroProbability("zeno chain lost all support");
    p *= kept;
    const double r = std::sqrt(kept);
    for (auto& c : v.amp) c /= r;
  }
  return p;
}

// Splitter angle realizing a two-qubit phase phi.  Linear follows the stated
// reflectivity; Sine solves the pole geometry exactly so the enacted phase
// lands on phi/2 with no small-angle error.
inline double zz_bs_angle(double alpha, double phi, Calibration calib) {
  if (calib == Calibration::Linear) return phi / (2.0 * alpha * alpha);
  const double s = phi / (4.0 * alpha * alpha);
  if (std::abs(s) > 1.0) throw InvalidArgument("phase too large for sine calibration");
  return 2.0 * std::asin(s);
}

// single-qubit variant: phi_half is the target of the enacted phase itself
inline double rx_bs_angle(double alpha, double phi_half, Calibration calib) {
  if (calib == Calibration::Linear) return phi_half / (alpha * alpha);
  const double s = phi_half / (2.0 * alpha * alpha);
  if (std::abs(s) > 1.0) throw InvalidArgument("phase too large for sine calibration");
  return 2.0 * std::asin(s);
}

// per-component phase acquired through the splitter, exact in the pole frame
inline double bs_enacted_phase(double alpha, double theta_bs) {
  return 2.0 * alpha * alpha * std::sin(theta_bs / 2);
}

// probability that both pole projections survive the splitter rotation
inline double bs_capture_probability(double alpha, double theta_bs) {
  return std::exp(4.0 * alpha * alpha * (std::cos(theta_bs / 2) - 1.0));
}

// ---------------------------------------------------------------------------
// teleportation and the Z gate

inline GateOutcome teleport(const QubitState& q, MeasureModel model, SplitMix64& rng) {
  GateOutcome out;
  if (model == MeasureModel::Ideal) {
    const BellOutcome rec = detail::representative(detail::uniform_class(rng));
    out.record.push_back(rec);
    out.corrections = corrections_for(rec.na, rec.nb, 0);
    out.state = qubit_cs(q);
    out.probability = 0.25;
    return out;
  }
  const int nmax = count_grid(q.alpha);
  auto t = detail::teleport_mode(qubit_cs(q), 0, q.alpha, nmax, rng);
  out.record.push_back(t.outcome);
  out.probability = t.probability;
  if (t.outcome.kind == BellKind::Failure) {
    out.success = false;
    out.state = cs_normalized(t.state);
    return out;
  }
  out.corrections = corrections_for(t.outcome.na, t.outcome.nb, 0);
  out.state = cs_normalized(apply_corrections(t.state, out.corrections, q.alpha));
  return out;
}

// Repeat plain teleportation until a sign class lands, omitting its Z
// correction; the kept flip is the Z gate.  On average two rounds.
inline GateOutcome gate_Z(const QubitState& q, MeasureModel model, SplitMix64& rng,
                          int max_attempts = 64) {
  GateOutcome out;
  QubitState cur = q;
  const int nmax = count_grid(q.alpha);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    BellOutcome rec;
    CoherentSuperposition raw;
    double p = 0.25;
    if (model == MeasureModel::Ideal) {
      rec = detail::representative(detail::uniform_class(rng));
      raw = qubit_cs(cur);
      if (rec.kind == BellKind::B10) raw = apply_Z(raw, 0, q.alpha);
      if (rec.kind == BellKind::B11) raw = apply_Z(apply_X(raw, 0), 0, q.alpha);
    } else {
      auto t = detail::teleport_mode(qubit_cs(cur), 0, q.alpha, nmax, rng);
      rec = t.outcome;
      raw = std::move(t.state);
      p = t.probability;
    }
    out.record.push_back(rec);
    out.probability *= p;
    switch (rec.kind) {
      case BellKind::Failure:
        out.success = false;
        out.state = cs_normalized(raw);
        return out;
      case BellKind::B10:
        // keep the sign flip: no correction at all
        out.state = cs_normalized(raw);
        return out;
      case BellKind::B11:
        // keep the sign flip, undo only the swap
        out.corrections.push_back({'X', 0});
        out.state = cs_normalized(apply_X(raw, 0));
        return out;
      default: {
        auto corr = corrections_for(rec.na, rec.nb, 0);
        out.corrections.insert(out.corrections.end(), corr.begin(), corr.end());
        CoherentSuperposition fixed = cs_normalized(apply_corrections(raw, corr, q.alpha));
        cur = span_qubit(span_coefficients(fixed, q.alpha), q.alpha);
        break;
      }
    }
  }
  out.success = false;
  out.state = qubit_cs(cur);
  return out;
}

// ---------------------------------------------------------------------------
// single-qubit rotation: outcome kernels and fidelity tables

struct RotationKernels {
  double alpha = 0.0;
  double theta = 0.0;
  int nmax = 0;
  std::vector<Eigen::Matrix2cd> k;  // (nmax+1)^2 entries, row-major in (na, nb)
  const Eigen::Matrix2cd& at(int na, int nb) const {
    return k[static_cast<size_t>(na) * static_cast<size_t>(nmax + 1) +
             static_cast<size_t>(nb)];
  }
};

// Per-count kernels: K(na, nb) maps input pole coefficients to the
// uncorrected conditional pole coefficients after the shifted qubit is split
// against a Bell resource and both ports are counted.
inline RotationKernels rotation_kernels(double alpha, double theta, int nmax = -1) {
  if (!(alpha > 0.0)) throw InvalidArgument("rotation_kernels needs alpha > 0");
  if (nmax < 0) nmax = count_grid(alpha);
  const double a = alpha;
  const cx b(0.0, theta / (2.0 * a));
  const double rn = std::sqrt(2.0 + 2.0 * std::exp(-4.0 * a * a));
  struct Path {
    int row;    // input component
    cx la, lb;  // port labels
    int col;    // output pole
  };
  std::array<Path, 4> paths;
  int t = 0;
  for (int row = 0; row < 2; ++row) {
    const cx ql = (row == 0 ? cx(-a, 0.0) : cx(a, 0.0)) + b;
    for (int pole = 0; pole < 2; ++pole) {
      const double r = pole == 0 ? -a : a;
      paths[static_cast<size_t>(t++)] = {row, (ql + r) / std::numbers::sqrt2,
                                         (r - ql) / std::numbers::sqrt2, pole};
    }
  }
  RotationKernels out{alpha, theta, nmax, {}};
  out.k.assign(static_cast<size_t>(nmax + 1) * static_cast<size_t>(nmax + 1),
               Eigen::Matrix2cd::Zero());
  std::array<std::vector<cx>, 4> amp_a, amp_b;
  for (int i = 0; i < 4; ++i) {
    const auto& pt = paths[static_cast<size_t>(i)];
    amp_a[static_cast<size_t>(i)].resize(static_cast<size_t>(nmax + 1));
    amp_b[static_cast<size_t>(i)].resize(static_cast<size_t>(nmax + 1));
    for (int n = 0; n <= nmax; ++n) {
      amp_a[static_cast<size_t>(i)][static_cast<size_t>(n)] = fock_amplitude(pt.la, n);
      amp_b[static_cast<size_t>(i)][static_cast<size_t>(n)] = fock_amplitude(pt.lb, n);
    }
  }
  for (int na = 0; na <= nmax; ++na)
    for (int nb = 0; nb <= nmax; ++nb) {
      Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
      for (int i = 0; i < 4; ++i) {
        const auto& pt = paths[static_cast<size_t>(i)];
        m(pt.col, pt.row) += amp_a[static_cast<size_t>(i)][static_cast<size_t>(na)] *
                             amp_b[static_cast<size_t>(i)][static_cast<size_t>(nb)] / rn;
      }
      out.k[static_cast<size_t>(na) * static_cast<size_t>(nmax + 1) +
            static_cast<size_t>(nb)] = m;
    }
  return out;
}

struct OutcomeCell {
  int na = 0;
  int nb = 0;
  double probability = 0.0;  // normalized over the enumerated grid
  double fidelity = 0.0;
};

struct FidelityMap {
  double alpha = 0.0;
  double theta = 0.0;
  int nmax = 0;
  std::vector<OutcomeCell> cells;
  double frame_mass = 0.0;    // raw grid mass before normalization
  double max_fidelity = 0.0;  // over cells with probability > 1e-14
};

inline FidelityMap fidelity_map(double alpha, double theta, const QubitState& q,
                                int nmax = -1) {
  const RotationKernels kern = rotation_kernels(alpha, theta, nmax);
  const Eigen::Matrix2cd g = span_gram(alpha);
  Eigen::Vector2cd v = qubit_span(q);
  v /= std::sqrt(std::real(v.dot(g * v)));
  Eigen::Vector2cd goal(std::exp(cx(0.0, -theta / 2)) * v(0),
                        std::exp(cx(0.0, theta / 2)) * v(1));
  goal /= std::sqrt(std::real(goal.dot(g * goal)));

  FidelityMap out{alpha, theta, kern.nmax, {}, 0.0, 0.0};
  out.cells.reserve(static_cast<size_t>(kern.nmax + 1) * static_cast<size_t>(kern.nmax + 1));
  for (int na = 0; na <= kern.nmax; ++na)
    for (int nb = 0; nb <= kern.nmax; ++nb) {
      const Eigen::Vector2cd raw = kern.at(na, nb) * v;
      const Eigen::Vector2cd w = correction_matrix(na, nb) * raw;
      const double p = std::max(0.0, std::real(raw.dot(g * raw)));
      const double nc = std::real(w.dot(g * w));
      const double f = nc > 1e-300 ? std::norm(goal.dot(g * w)) / nc : 1.0;
      out.cells.push_back({na, nb, p, f});
      out.frame_mass += p;
    }
  if (out.frame_mass <= 0.0) throw ZeroProbability("rotation grid carries no mass");
  for (auto& c : out.cells) {
    c.probability /= out.frame_mass;
    if (c.probability > 1e-14) out.max_fidelity = std::max(out.max_fidelity, c.fidelity);
  }
  return out;
}

inline FidelityMap fidelity_map(double alpha, double theta, int nmax = -1) {
  return fidelity_map(alpha, theta, worst_case_qubit(alpha), nmax);
}

inline double overall_fidelity(double alpha, double theta) {
  const FidelityMap m = fidelity_map(alpha, theta);
  double f = 0.0;
  for (const auto& c : m.cells) f += c.probability * c.fidelity;
  return f;
}

// n repetitions of the corrected step channel acting on the span density,
// scored against the accumulated rotation.  Each step sums the corrected
// kernels over the count grid, so this is the honest composition of the
// counting-model gate rather than a power of the single-step mean.
inline double composed_fidelity(double alpha, double theta_step, int steps,
                                int nmax = -1) {
  if (steps < 1) throw InvalidArgument("composition needs at least one step");
  const RotationKernels kern = rotation_kernels(alpha, theta_step, nmax);
  const Eigen::Matrix2cd g = span_gram(alpha);
  Eigen::Matrix4cd chan = Eigen::Matrix4cd::Zero();
  for (int na = 0; na <= kern.nmax; ++na)
    for (int nb = 0; nb <= kern.nmax; ++nb) {
      const Eigen::Matrix2cd A = correction_matrix(na, nb) * kern.at(na, nb);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l)
              chan(2 * i + j, 2 * k + l) += A(i, k) * std::conj(A(j, l));
    }
  Eigen::Vector2cd v = qubit_span(worst_case_qubit(alpha));
  v /= std::sqrt(std::real(v.dot(g * v)));
  Eigen::Vector4cd rho;
  rho << v(0) * std::conj(v(0)), v(0) * std::conj(v(1)), v(1) * std::conj(v(0)),
      v(1) * std::conj(v(1));
  for (int s = 0; s < steps; ++s) rho = chan * rho;
  Eigen::Matrix2cd r;
  r << rho(0), rho(1), rho(2), rho(3);
  const double th = theta_step * steps;
  Eigen::Vector2cd goal(std::exp(cx(0.0, -th / 2)) * v(0),
                        std::exp(cx(0.0, th / 2)) * v(1));
  goal /= std::sqrt(std::real(goal.dot(g * goal)));
  const double num = std::real((goal.adjoint() * g * r * g * goal)(0));
  const double den = std::real((g * r).trace());
  return num / den;
}

struct Postselection {
  double p_s = 0.0;  // accepted probability mass
  double f_s = 0.0;  // ensemble fidelity of the accepted set
  std::vector<OutcomeCell> accepted;
};

// Greedy acceptance in decreasing fidelity while the running ensemble
// fidelity stays at or above f_min.  Cells below the significance floor are
// never accepted; otherwise numerically dead cells (whose fidelity degenerates
// to 1) would mask an infeasible target.
inline Postselection postselected(double alpha, double theta, double f_min) {
  FidelityMap m = fidelity_map(alpha, theta);
  std::sort(m.cells.begin(), m.cells.end(),
            [](const OutcomeCell& a, const OutcomeCell& b) { return a.fidelity > b.fidelity; });
  Postselection out;
  double num = 0.0;
  for (const auto& c : m.cells) {
    if (c.probability <= 1e-14) continue;
    if ((num + c.probability * c.fidelity) / (out.p_s + c.probability) >= f_min) {
      out.p_s += c.probability;
      num += c.probability * c.fidelity;
      out.accepted.push_back(c);
    } else {
      break;
    }
  }
  if (out.accepted.empty())
    throw Infeasible("no outcome reaches the requested post-selection fidelity");
  out.f_s = num / out.p_s;
  return out;
}

// four Bell-cat consumptions per retry round plus the output pair
inline double bellcat_cost(double alpha, double theta, double f_min) {
  return 4.0 / postselected(alpha, theta, f_min).p_s + 1.0;
}

// ---------------------------------------------------------------------------
// rotation gates

inline GateOutcome gate_RZ_bare(const QubitState& q, double theta, MeasureModel model,
                                SplitMix64& rng) {
  GateOutcome out;
  const double a = q.alpha;
  if (model == MeasureModel::Ideal) {
    const double ps = rz_ideal_success(a, theta);
    if (rng.uniform() >= ps) {
      out.success = false;
      out.probability = 1.0 - ps;
      out.record.push_back({BellKind::Failure, 0, 0});
      out.state = cs_normalized(
          make_cs(1, {{cx(1.0, 0.0), {cx(-a, 0.0)}}, {cx(1.0, 0.0), {cx(a, 0.0)}}}));
      return out;
    }
    const BellOutcome rec = detail::representative(detail::uniform_class(rng));
    out.record.push_back(rec);
    out.corrections = corrections_for(rec.na, rec.nb, 0);
    Eigen::Vector2cd v = qubit_span(q);
    v /= v.norm();
    out.state = qubit_cs(span_qubit(
        {std::exp(cx(0.0, -theta / 2)) * v(0), std::exp(cx(0.0, theta / 2)) * v(1)}, a));
    out.probability = ps * 0.25;
    return out;
  }
  // label-shift frame: the displaced qubit keeps its pole coefficients
  const cx b(0.0, theta / (2.0 * a));
  CoherentSuperposition shifted =
      make_cs(1, {{q.mu, {cx(-a, 0.0) + b}}, {q.nu, {cx(a, 0.0) + b}}});
  const int nmax = count_grid(a);
  auto t = detail::teleport_mode(shifted, 0, a, nmax, rng);
  out.record.push_back(t.outcome);
  out.probability = t.probability;
  if (t.outcome.kind == BellKind::Failure) {
    out.success = false;
    out.state = cs_normalized(t.state);
    return out;
  }
  out.corrections = corrections_for(t.outcome.na, t.outcome.nb, 0);
  out.state = cs_normalized(apply_corrections(t.state, out.corrections, a));
  return out;
}

inline GateOutcome gate_RZ_zeno(const QubitState& q, double theta, int steps,
                                MeasureModel model, SplitMix64& rng) {
  if (steps < 1) throw InvalidArgument("zeno needs at least one step");
  GateOutcome out;
  QubitState cur = q;
  for (int i = 0; i < steps; ++i) {
    GateOutcome step = gate_RZ_bare(cur, theta / steps, model, rng);
    out.record.insert(out.record.end(), step.record.begin(), step.record.end());
    out.corrections.insert(out.corrections.end(), step.corrections.begin(),
                           step.corrections.end());
    out.probability *= step.probability;
    out.state = step.state;
    if (!step.success) {
      out.success = false;
      return out;
    }
    cur = span_qubit(span_coefficients(step.state, q.alpha), q.alpha);
  }
  out.state = qubit_cs(cur);
  return out;
}

// Nested teleporter: the bare rotation is carried out offline on one arm of a
// fresh Bell pair, so a preparation miss never consumes the qubit.  The outer
// round teleports through the rotated resource and lands on the target angle
// or its negative with even odds; a miss is retried at twice the angle.  The
// rotation has exact period 4 pi, so angles are reduced to [-2 pi, 2 pi],
// which also keeps the doubled angle inside the sine-calibration domain.
inline GateOutcome gate_RZ_teleported(const QubitState& q, double theta, MeasureModel model,
                                      SplitMix64& rng, int max_doublings = 10) {
  GateOutcome out;
  const double a = q.alpha;
  const double rn = std::sqrt(2.0 + 2.0 * std::exp(-4.0 * a * a));
  const int nmax = count_grid(a);
  QubitState cur = q;
  double angle = theta;
  int doublings = 0;
  for (int tries = 0; tries < 64 * (max_doublings + 1); ++tries) {
    if (doublings > max_doublings) break;
    angle = std::remainder(angle, 4.0 * std::numbers::pi);
    const double ps = rz_ideal_success(a, angle);
    if (rng.uniform() >= ps) {
      out.record.push_back({BellKind::Failure, 0, 0});
      out.probability *= 1.0 - ps;
      continue;
    }
    out.probability *= ps;
    BellOutcome rec;
    if (model == MeasureModel::Ideal) {
      rec = detail::representative(detail::uniform_class(rng));
      out.record.push_back(rec);
      out.probability *= 0.25;
      auto corr = corrections_for(rec.na, rec.nb, 0);
      out.corrections.insert(out.corrections.end(), corr.begin(), corr.end());
      Eigen::Vector2cd v = qubit_span(cur);
      v /= v.norm();
      const double sgn = detail::is_x_class(rec.kind) ? 1.0 : -1.0;
      cur = span_qubit({std::exp(cx(0.0, sgn * angle / 2)) * v(0),
                        std::exp(cx(0.0, -sgn * angle / 2)) * v(1)},
                       a);
    } else {
      const cx ph = std::exp(cx(0.0, -angle / 2));
      CoherentSuperposition res =
          make_cs(2, {{ph / rn, {cx(-a, 0.0), cx(-a, 0.0)}},
                      {std::conj(ph) / rn, {cx(a, 0.0), cx(a, 0.0)}}});
      CoherentSuperposition st = cs_tensor(qubit_cs(cur), res);
      st = bell_split(st, 0, 1);
      double p1 = 0.0, p2 = 0.0;
      auto [na, s1] = detail::sample_count(st, 0, nmax, rng, p1);
      auto [nb, s2] = detail::sample_count(s1, 0, nmax, rng, p2);
      rec = {classify_counts(na, nb), na, nb};
      out.record.push_back(rec);
      out.probability *= p1 * p2;
      if (rec.kind == BellKind::Failure) {
        out.success = false;
        out.state = cs_normalized(s2);
        return out;
      }
      auto corr = corrections_for(na, nb, 0);
      out.corrections.insert(out.corrections.end(), corr.begin(), corr.end());
      CoherentSuperposition fixed = cs_normalized(apply_corrections(s2, corr, a));
      cur = span_qubit(span_coefficients(fixed, a), a);
    }
    // swap classes land on the negated angle; double and walk back
    if (!detail::is_x_class(rec.kind) || angle == 0.0) {
      out.state = qubit_cs(cur);
      return out;
    }
    ++doublings;
    angle *= 2.0;
  }
  out.success = false;
  out.state = qubit_cs(cur);
  return out;
}

namespace detail {

// Splitter interaction between two in-span modes of a larger state, followed
// by teleportation of both modes back onto fresh poles.  Corrections are
// applied in place and appended for the caller's log.
// Corrections land after the interaction phase is already attached to the
// inputs, so every outcome class restores the same enacted rotation; only
// resource-attached rotations (the teleported strategy) can flip sign.
struct PairGateStep {
  bool success = true;
  double probability = 1.0;
  std::vector<BellOutcome> recs;
};

inline PairGateStep zz_step_counting(CoherentSuperposition& st, int ma, int mb,
                                     double theta_bs, double alpha, int nmax, SplitMix64& rng,
                                     std::vector<PauliCorrection>& corrections) {
  PairGateStep out;
  st = cs_beamsplitter(st, ma, mb, phase_coupled(theta_bs));
  const std::array<int, 2> modes{ma, mb};
  for (int i = 0; i < 2; ++i) {
    auto t = teleport_mode(st, modes[static_cast<size_t>(i)], alpha, nmax, rng);
    out.recs.push_back(t.outcome);
    out.probability *= t.probability;
    if (t.outcome.kind == BellKind::Failure) {
      out.success = false;
      st = std::move(t.state);
      return out;
    }
    auto corr = corrections_for(t.outcome.na, t.outcome.nb, modes[static_cast<size_t>(i)]);
    corrections.insert(corrections.end(), corr.begin(), corr.end());
    st = apply_corrections(std::move(t.state), corr, alpha);
  }
  return out;
}

}  // namespace detail

// Two-qubit phase rotation.  Like-signed components acquire the positive
// half-phase and cross components the negative one, enacting R(ZZ, -phi).
inline GateOutcome gate_ZZ(const TwoQubitState& q2, double phi, Strategy strategy,
                           MeasureModel model, SplitMix64& rng, int zeno_steps = 8,
                           Calibration calib = Calibration::Linear, int max_doublings = 10) {
  GateOutcome out;
  const double a = q2.alpha;
  const int nmax = count_grid(a);
  const double rn2 = 2.0 + 2.0 * std::exp(-4.0 * a * a);

  auto apply_phases = [](Eigen::Vector4cd c, double ph) {
    c(0) *= std::exp(cx(0.0, ph));
    c(3) *= std::exp(cx(0.0, ph));
    c(1) *= std::exp(cx(0.0, -ph));
    c(2) *= std::exp(cx(0.0, -ph));
    return c;
  };

  if (strategy == Strategy::Bare || strategy == Strategy::Zeno) {
    const int steps = strategy == Strategy::Bare ? 1 : zeno_steps;
    if (steps < 1) throw InvalidArgument("zeno needs at least one step");
    const double th = zz_bs_angle(a, phi / steps, calib);
    if (model == MeasureModel::Ideal) {
      Eigen::Vector4cd c = q2.c;
      const double cap = bs_capture_probability(a, th);
      const double ph = bs_enacted_phase(a, th);
      for (int i = 0; i < steps; ++i) {
        if (rng.uniform() >= cap) {
          out.success = false;
          out.probability *= 1.0 - cap;
          out.record.push_back({BellKind::Failure, 0, 0});
          out.state = two_qubit_cs(normalized_two_qubit(c, a));
          return out;
        }
        out.probability *= cap;
        c = apply_phases(c, ph);
        for (int m = 0; m < 2; ++m) {
          const BellOutcome rec = detail::representative(detail::uniform_class(rng));
          out.record.push_back(rec);
          auto corr = corrections_for(rec.na, rec.nb, m);
          out.corrections.insert(out.corrections.end(), corr.begin(), corr.end());
          out.probability *= 0.25;
        }
      }
      out.state = two_qubit_cs(normalized_two_qubit(c, a));
      return out;
    }
    CoherentSuperposition st = two_qubit_cs(q2);
    for (int i = 0; i < steps; ++i) {
      auto step = detail::zz_step_counting(st, 0, 1, th, a, nmax, rng, out.corrections);
      out.record.insert(out.record.end(), step.recs.begin(), step.recs.end());
      out.probability *= step.probability;
      if (!step.success) {
        out.success = false;
        out.state = cs_normalized(st);
        return out;
      }
    }
    out.state = cs_normalized(st);
    return out;
  }

  // teleported: the interaction runs offline on the arms of two Bell pairs;
  // exactly one swap-class outcome flips the sign of the enacted phase, which
  // the doubling schedule walks back (angles reduced by the 4 pi period)
  Eigen::Vector4cd cur = q2.c;
  double angle = phi;
  int doublings = 0;
  for (int tries = 0; tries < 64 * (max_doublings + 1); ++tries) {
    if (doublings > max_doublings) break;
    angle = std::remainder(angle, 4.0 * std::numbers::pi);
    const double th = zz_bs_angle(a, angle, calib);
    const double cap = bs_capture_probability(a, th);
    if (rng.uniform() >= cap) {
      out.record.push_back({BellKind::Failure, 0, 0});
      out.probability *= 1.0 - cap;
      continue;
    }
    out.probability *= cap;
    const double ph = bs_enacted_phase(a, th);
    bool flip = false;
    if (model == MeasureModel::Ideal) {
      Eigen::Vector4cd c = cur / cur.norm();
      std::array<BellKind, 2> kinds{detail::uniform_class(rng), detail::uniform_class(rng)};
      for (int m = 0; m < 2; ++m) {
        const BellOutcome rec = detail::representative(kinds[static_cast<size_t>(m)]);
        out.record.push_back(rec);
        auto corr = corrections_for(rec.na, rec.nb, m);
        out.corrections.insert(out.corrections.end(), corr.begin(), corr.end());
        out.probability *= 0.25;
      }
      flip = detail::is_x_class(kinds[0]) != detail::is_x_class(kinds[1]);
      cur = apply_phases(c, flip ? -ph : ph);
    } else {
      std::vector<CoherentTerm> terms;
      for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
          const cx phase = std::exp(cx(0.0, s1 == s2 ? ph : -ph));
          terms.push_back({phase / rn2,
                           {cx(s1 == 0 ? -a : a, 0.0), cx(s1 == 0 ? -a : a, 0.0),
                            cx(s2 == 0 ? -a : a, 0.0), cx(s2 == 0 ? -a : a, 0.0)}});
        }
      CoherentSuperposition res = make_cs(4, terms);
      CoherentSuperposition st = cs_tensor(two_qubit_cs(normalized_two_qubit(cur, a)), res);
      // modes: [q1 q2 b1 c1 b2 c2]
      st = bell_split(st, 0, 2);
      st = bell_split(st, 1, 4);
      double p1 = 0.0, p2 = 0.0, p3 = 0.0, p4 = 0.0;
      auto [n1, t1] = detail::sample_count(st, 0, nmax, rng, p1);  // -> [q2 b1 c1 b2 c2]
      auto [n2, t2] = detail::sample_count(t1, 0, nmax, rng, p2);  // -> [b1 c1 b2 c2]
      auto [m1, t3] = detail::sample_count(t2, 0, nmax, rng, p3);  // -> [c1 b2 c2]
      auto [m2, t4] = detail::sample_count(t3, 1, nmax, rng, p4);  // -> [c1 c2]
      const BellOutcome r1{classify_counts(n1, m1), n1, m1};
      const BellOutcome r2{classify_counts(n2, m2), n2, m2};
      out.record.push_back(r1);
      out.record.push_back(r2);
      out.probability *= p1 * p2 * p3 * p4;
      if (r1.kind == BellKind::Failure || r2.kind == BellKind::Failure) {
        out.success = false;
        out.state = cs_normalized(t4);
        return out;
      }
      auto ca = corrections_for(n1, m1, 0);
      auto cb = corrections_for(n2, m2, 1);
      out.corrections.insert(out.corrections.end(), ca.begin(), ca.end());
      out.corrections.insert(out.corrections.end(), cb.begin(), cb.end());
      CoherentSuperposition fixed = apply_corrections(std::move(t4), ca, a);
      fixed = apply_corrections(std::move(fixed), cb, a);
      cur = two_qubit_coefficients(cs_normalized(fixed), a);
      flip = detail::is_x_class(r1.kind) != detail::is_x_class(r2.kind);
    }
    if (!flip || angle == 0.0) {
      out.state = two_qubit_cs(normalized_two_qubit(cur, a));
      return out;
    }
    ++doublings;
    angle *= 2.0;
  }
  out.success = false;
  out.state = two_qubit_cs(normalized_two_qubit(cur, a));
  return out;
}

// Superposition gate: splitter interaction against one Bell arm, then photon
// counts on both splitter outputs whose parities key the correction.  The
// enacted map is e^{i phi} I + e^{-i phi} X with phi the per-component phase;
// it is proportional to a unitary exactly at phi = +-pi/4, where it realizes
// the quarter X rotation.  phi_half names that target phase.
inline GateOutcome gate_RX(const QubitState& q, Strategy strategy, MeasureModel model,
                           SplitMix64& rng, double phi_half = std::numbers::pi / 4,
                           Calibration calib = Calibration::Linear, int zeno_steps = 8) {
  GateOutcome out;
  const double a = q.alpha;
  const int nmax = count_grid(a);

  auto parity_corrections = [](int pa, int pb, int mode) {
    std::vector<PauliCorrection> corr;
    if (pa == 0 && pb == 1) corr.push_back({'Z', mode});
    if (pa == 1 && pb == 0) {
      corr.push_back({'X', mode});
      corr.push_back({'Z', mode});
    }
    if (pa == 1 && pb == 1) corr.push_back({'X', mode});
    return corr;
  };

  if (strategy == Strategy::Teleported) {
    // the superposition map rides on a resource arm; sign classes conjugate
    // its phase, and trading their Z for an X restores it deterministically
    const double th = rx_bs_angle(a, phi_half, calib);
    const double cap = bs_capture_probability(a, th);
    const double eff = bs_enacted_phase(a, th);
    const double rn = std::sqrt(2.0 + 2.0 * std::exp(-4.0 * a * a));
    const cx ep = std::exp(cx(0.0, eff));
    const cx em = std::exp(cx(0.0, -eff));
    auto class_corrections = [](BellKind kind) -> std::vector<PauliCorrection> {
      switch (kind) {
        case BellKind::B10: return {{'X', 0}, {'Z', 0}};
        case BellKind::B01: return {{'X', 0}};
        case BellKind::B11: return {{'Z', 0}};
        default: return {};
      }
    };
    for (int tries = 0; tries < 64; ++tries) {
      if (rng.uniform() >= cap) {
        out.record.push_back({BellKind::Failure, 0, 0});
        out.probability *= 1.0 - cap;
        continue;
      }
      out.probability *= cap;
      if (model == MeasureModel::Ideal) {
        const BellOutcome rec = detail::representative(detail::uniform_class(rng));
        out.record.push_back(rec);
        out.probability *= 0.25;
        out.corrections = class_corrections(rec.kind);
        Eigen::Vector2cd v = qubit_span(q);
        v /= v.norm();
        Eigen::Matrix2cd m;
        m << ep, em, em, ep;
        Eigen::Vector2cd w = m * v;
        w /= w.norm();
        out.state = qubit_cs(span_qubit(w, a));
        return out;
      }
      std::vector<CoherentTerm> terms;
      for (int s = 0; s < 2; ++s) {
        const cx arm(s == 0 ? -a : a, 0.0);
        terms.push_back({ep / rn, {arm, arm}});
        terms.push_back({em / rn, {arm, -arm}});
      }
      CoherentSuperposition res = cs_normalized(make_cs(2, terms));
      CoherentSuperposition st = cs_tensor(qubit_cs(q), res);
      st = bell_split(st, 0, 1);
      double p1 = 0.0, p2 = 0.0;
      auto [na, s1] = detail::sample_count(st, 0, nmax, rng, p1);
      auto [nb, s2] = detail::sample_count(s1, 0, nmax, rng, p2);
      const BellOutcome rec{classify_counts(na, nb), na, nb};
      out.record.push_back(rec);
      out.probability *= p1 * p2;
      if (rec.kind == BellKind::Failure) {
        out.success = false;
        out.state = cs_normalized(s2);
        return out;
      }
      out.corrections = class_corrections(rec.kind);
      out.state = cs_normalized(apply_corrections(s2, out.corrections, a));
      return out;
    }
    out.success = false;
    out.state = qubit_cs(q);
    return out;
  }

  const int steps = strategy == Strategy::Zeno ? zeno_steps : 1;
  if (steps < 1) throw InvalidArgument("zeno needs at least one step");
  // zeno splits the interaction into two-qubit steps against the kept arm
  const double th = strategy == Strategy::Zeno
                        ? zz_bs_angle(a, 2.0 * phi_half / steps, calib)
                        : rx_bs_angle(a, phi_half, calib);

  if (model == MeasureModel::Ideal) {
    Eigen::Vector2cd v = qubit_span(q);
    v /= v.norm();
    const double cap_all = strategy == Strategy::Zeno
                               ? std::pow(bs_capture_probability(a, th), steps)
                               : bs_capture_probability(a, th);
    if (rng.uniform() >= cap_all) {
      out.success = false;
      out.probability = 1.0 - cap_all;
      out.record.push_back({BellKind::Failure, 0, 0});
      out.state = cs_normalized(
          make_cs(1, {{cx(1.0, 0.0), {cx(-a, 0.0)}}, {cx(1.0, 0.0), {cx(a, 0.0)}}}));
      return out;
    }
    const double phase = (strategy == Strategy::Zeno ? steps : 1) * bs_enacted_phase(a, th);
    // joint pole collapse, then the two parity projections
    const std::array<std::array<double, 2>, 2> sgn{{{1.0, 1.0}, {-1.0, 1.0}}};
    std::array<Eigen::Vector2cd, 4> w;
    std::array<double, 4> mass{};
    double total = 0.0;
    for (int cell = 0; cell < 4; ++cell) {
      const int pa = cell / 2, pb = cell % 2;
      Eigen::Vector2cd u = Eigen::Vector2cd::Zero();
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
          u(j) += v(i) * std::exp(cx(0.0, i == j ? phase : -phase)) *
                  sgn[static_cast<size_t>(pa)][static_cast<size_t>(i)] *
                  sgn[static_cast<size_t>(pb)][static_cast<size_t>(j)];
      w[static_cast<size_t>(cell)] = u;
      mass[static_cast<size_t>(cell)] = u.squaredNorm();
      total += u.squaredNorm();
    }
    double draw = rng.uniform() * total;
    int cell = 3;
    for (int i = 0; i < 4; ++i) {
      draw -= mass[static_cast<size_t>(i)];
      if (draw < 0.0) {
        cell = i;
        break;
      }
    }
    const int pa = cell / 2, pb = cell % 2;
    const int ra = pa == 0 ? 2 : 1, rb = pb == 0 ? 2 : 1;
    out.record.push_back({classify_counts(ra, rb), ra, rb});
    out.corrections = parity_corrections(pa, pb, 0);
    Eigen::Vector2cd fixed =
        correction_matrix_from(out.corrections) * w[static_cast<size_t>(cell)];
    fixed /= fixed.norm();
    out.probability = cap_all * mass[static_cast<size_t>(cell)] / total;
    out.state = qubit_cs(span_qubit(fixed, a));
    return out;
  }

  CoherentSuperposition st = cs_tensor(qubit_cs(q), bell_resource(a));
  if (strategy == Strategy::Zeno) {
    for (int i = 0; i < steps; ++i) {
      auto step = detail::zz_step_counting(st, 0, 1, th, a, nmax, rng, out.corrections);
      out.record.insert(out.record.end(), step.recs.begin(), step.recs.end());
      out.probability *= step.probability;
      if (!step.success) {
        out.success = false;
        out.state = cs_normalized(st);
        return out;
      }
    }
  } else {
    st = cs_beamsplitter(st, 0, 1, phase_coupled(th));
  }
  double p1 = 0.0, p2 = 0.0;
  auto [n, s1] = detail::sample_count(st, 0, nmax, rng, p1);
  auto [m, s2] = detail::sample_count(s1, 0, nmax, rng, p2);
  out.record.push_back({classify_counts(n, m), n, m});
  out.probability *= p1 * p2;
  auto corr = parity_corrections(n % 2, m % 2, 0);
  out.corrections.insert(out.corrections.end(), corr.begin(), corr.end());
  out.state = cs_normalized(apply_corrections(s2, corr, a));
  return out;
}

// ---------------------------------------------------------------------------
// homodyne discrimination of the cat basis

enum class CatVerdict { Plus, Minus, Inconclusive };

struct HomodyneOutcome {
  CatVerdict verdict = CatVerdict::Inconclusive;
  double x = 0.0;
  double ratio = 1.0;  // plus-likelihood over minus-likelihood at x
};

inline CatVerdict classify_quadrature_ratio(double p_plus, double p_minus, double threshold) {
  if (threshold < 1.0) throw InvalidArgument("threshold must be at least 1");
  if (p_plus >= threshold * p_minus) return CatVerdict::Plus;
  if (p_minus >= threshold * p_plus) return CatVerdict::Minus;
  return CatVerdict::Inconclusive;
}

namespace detail {

struct HomodyneRefs {
  std::vector<double> xs;
  std::vector<double> p_state, p_plus, p_minus;
};

// The two cat classes separate in the fringe quadrature (phase pi/2), where
// the even cat shows anti-nodes and the odd cat nodes.
inline HomodyneRefs homodyne_tables(const FockVector& state, double alpha, int grid_points,
                                    double half_width) {
  if (grid_points < 16) throw InvalidArgument("homodyne grid too coarse");
  HomodyneRefs r;
  r.xs.resize(static_cast<size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i)
    r.xs[static_cast<size_t>(i)] =
        -half_width + 2.0 * half_width * static_cast<double>(i) / (grid_points - 1);
  const double phase = std::numbers::pi / 2;
  const int cutoff = std::max(state.cutoff(), cutoff_for_amplitude(alpha));
  r.p_state = quadrature_distribution(state, phase, r.xs);
  r.p_plus = quadrature_distribution(cat(alpha, +1, cutoff), phase, r.xs);
  r.p_minus = quadrature_distribution(cat(alpha, -1, cutoff), phase, r.xs);
  return r;
}

}  // namespace detail

inline HomodyneOutcome homodyne_cat_discriminate(const FockVector& state, double alpha,
                                                 double threshold, SplitMix64& rng,
                                                 int grid_points = 4001,
                                                 double half_width = 8.0) {
  const auto r = detail::homodyne_tables(state, alpha, grid_points, half_width);
  const double dx = r.xs[1] - r.xs[0];
  // piecewise-constant inverse transform on the trapezoid bin masses
  double total = 0.0;
  for (size_t i = 0; i + 1 < r.xs.size(); ++i)
    total += 0.5 * (r.p_state[i] + r.p_state[i + 1]) * dx;
  double u = rng.uniform() * total;
  size_t bin = r.xs.size() - 2;
  double frac = 0.5;
  for (size_t i = 0; i + 1 < r.xs.size(); ++i) {
    const double m = 0.5 * (r.p_state[i] + r.p_state[i + 1]) * dx;
    if (u < m) {
      bin = i;
      if (m > 0.0) frac = u / m;
      break;
    }
    u -= m;
  }
  HomodyneOutcome out;
  out.x = r.xs[bin] + std::clamp(frac, 0.0, 1.0) * dx;
  const double w = (out.x - r.xs[bin]) / dx;
  const double pp = (1.0 - w) * r.p_plus[bin] + w * r.p_plus[bin + 1];
  const double pm = (1.0 - w) * r.p_minus[bin] + w * r.p_minus[bin + 1];
  out.ratio = pp / std::max(pm, 1e-300);
  out.verdict = classify_quadrature_ratio(pp, pm, threshold);
  return out;
}

struct HomodyneAnalysis {
  double error_rate = 0.0;           // wrong-verdict mass over total mass
  double conclusive_fraction = 0.0;  // conclusive mass over total mass
};

// Deterministic counterpart of the sampler: integrates the verdict regions
// of the state's quadrature distribution.  true_parity follows CatOutcome
// (0 even, 1 odd).
inline HomodyneAnalysis homodyne_grid_analysis(const FockVector& state, int true_parity,
                                               double alpha, double threshold,
                                               int grid_points = 4001,
                                               double half_width = 8.0) {
  const auto r = detail::homodyne_tables(state, alpha, grid_points, half_width);
  const double dx = r.xs[1] - r.xs[0];
  double total = 0.0, conclusive = 0.0, wrong = 0.0;
  for (size_t i = 0; i < r.xs.size(); ++i) {
    const double w = (i == 0 || i + 1 == r.xs.size()) ? 0.5 * dx : dx;
    const double mass = r.p_state[i] * w;
    total += mass;
    const CatVerdict v = classify_quadrature_ratio(r.p_plus[i], r.p_minus[i], threshold);
    if (v == CatVerdict::Inconclusive) continue;
    conclusive += mass;
    if ((v == CatVerdict::Plus) != (true_parity == 0)) wrong += mass;
  }
  HomodyneAnalysis out;
  out.conclusive_fraction = total > 0.0 ? conclusive / total : 0.0;
  // an inconclusive verdict is abstention, not misclassification
  out.error_rate = total > 0.0 ? wrong / total : 0.0;
  return out;
}

}  // namespace catsim
