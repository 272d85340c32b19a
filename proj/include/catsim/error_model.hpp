#pragma once
// Photon loss and the repairs teleportation buys back.
//
// Loss is handled in conditional-trajectory form: deterministic amplitude
// decay between recorded annihilation events, one rate factor per event, so
// the returned probability is a density in the event times.  On the coherent
// encoding a single event acts as Z up to scale, and the no-event evolution
// only shrinks the amplitude.  That structure drives three repair circuits:
//   reamplify      teleport a decayed qubit through a fresh resource to reset
//                  its amplitude; failure is heralded by a dark same-sign port
//   sign-flip code three-mode encoding stored in a rotated frame where losses
//                  land as label flips; two pairwise comparisons locate them
//   amplify        teleport through a |-a,-sqrt2 a> + |a,sqrt2 a> resource to
//                  grow the amplitude, then split the result back into the
//                  Bell resource the gates consume

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "catsim/coherent_algebra.hpp"
#include "catsim/fock.hpp"
#include "catsim/gates.hpp"
#include "catsim/rng.hpp"

namespace catsim {

// --------------------------------------------------------- Fock trajectories

struct LossHistory {
  double gamma = 0.0;          // loss rate
  double t = 0.0;              // total evolution time
  std::vector<double> events;  // strictly increasing times in (0, t]
};

inline FockVector amplitude_decay(FockVector v, double gamma_dt) {
  for (std::size_t n = 1; n < v.amp.size(); ++n)
    v.amp[n] *= std::exp(-0.5 * gamma_dt * static_cast<double>(n));
  return v;
}

inline FockVector annihilate(const FockVector& v) {
  FockVector out;
  out.amp.assign(v.amp.size(), cx(0.0));
  for (std::size_t n = 1; n < v.amp.size(); ++n)
    out.amp[n - 1] = std::sqrt(static_cast<double>(n)) * v.amp[n];
  return out;
}

// Conditional state for one recorded trajectory: decay, annihilate at each
// event, decay to the horizon.  Returns the normalized survivor and the
// trajectory's probability density gamma^n * ||unnormalized||^2.
inline std::pair<FockVector, double> conditional_state(const FockVector& v0,
                                                       const LossHistory& h) {
  if (!(h.gamma > 0.0) || !(h.t >= 0.0)) throw InvalidArgument("bad loss history");
  FockVector v = v0;
  double prev = 0.0, rate = 1.0;
  for (double tj : h.events) {
    if (!(tj > prev) || tj > h.t)
      throw InvalidArgument("loss times must increase within (0, t]");
    v = annihilate(amplitude_decay(std::move(v), h.gamma * (tj - prev)));
    rate *= h.gamma;
    prev = tj;
  }
  v = amplitude_decay(std::move(v), h.gamma * (h.t - prev));
  const double n2 = norm2(v);
  if (n2 <= 0.0) throw ZeroProbability("trajectory annihilated the state");
  const double s = 1.0 / std::sqrt(n2);
  for (cx& a : v.amp) a *= s;
  return {std::move(v), rate * n2};
}

// Probability of losing exactly k photons once the survival factor has
// reached kappa = e^{-gamma t / 2}.
inline double loss_count_probability(const FockVector& v, double kappa, int k) {
  if (k < 0) throw InvalidArgument("negative count");
  if (!(kappa > 0.0) || kappa > 1.0) throw InvalidArgument("kappa must lie in (0, 1]");
  const double q = 1.0 - kappa * kappa;
  double acc = 0.0;
  for (std::size_t m = static_cast<std::size_t>(k); m < v.amp.size(); ++m) {
    const double lc = std::lgamma(static_cast<double>(m) + 1.0) -
                      std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(m - k) + 1.0);
    acc += std::norm(v.amp[m]) *
           std::exp(lc + static_cast<double>(m - k) * 2.0 * std::log(kappa) +
                    static_cast<double>(k) * std::log(q));
  }
  return acc;
}

// One trajectory with exact jump times: each waiting time solves the survival
// law by bisection.  Expects a unit-norm start; returns the normalized end
// state.
inline FockVector loss_trajectory(const FockVector& v0, double gamma_t, SplitMix64& rng) {
  FockVector v = v0;
  {
    const double s = 1.0 / std::sqrt(norm2(v));
    for (cx& a : v.amp) a *= s;
  }
  double remaining = gamma_t;
  while (true) {
    const double u = rng.uniform();
    if (u < norm2(amplitude_decay(v, remaining))) {
      v = amplitude_decay(std::move(v), remaining);
      const double s = 1.0 / std::sqrt(norm2(v));
      for (cx& a : v.amp) a *= s;
      return v;
    }
    double lo = 0.0, hi = remaining;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (norm2(amplitude_decay(v, mid)) > u ? lo : hi) = mid;
    }
    v = annihilate(amplitude_decay(std::move(v), lo));
    const double s = 1.0 / std::sqrt(norm2(v));
    for (cx& a : v.amp) a *= s;
    remaining -= lo;
  }
}

// ------------------------------------------------------- loss on the encoding

// Annihilation acts on each coherent label as an eigenvalue.
inline CoherentSuperposition cs_annihilate(const CoherentSuperposition& s, int mode) {
  if (mode < 0 || mode >= s.mode_count) throw InvalidArgument("bad mode index");
  CoherentSuperposition out = make_cs(s.mode_count, s.terms);
  for (auto& t : out.terms) t.coeff *= t.labels[static_cast<std::size_t>(mode)];
  return out;
}

// A single event maps mu|-a> + nu|a> onto Z(mu|-a> + nu|a>) up to scale.
inline double loss_as_Z_check(const QubitState& q) {
  const CoherentSuperposition s = qubit_cs(q);
  return cs_fidelity(cs_annihilate(s, 0), apply_Z(s, 0, q.alpha));
}

// No-event evolution shrinks both poles equally, so the span coefficients
// survive unchanged at the smaller amplitude.
inline QubitState decayed_qubit(const QubitState& q, double kappa) {
  if (!(kappa > 0.0) || kappa > 1.0) throw InvalidArgument("kappa must lie in (0, 1]");
  return normalized_qubit(q.mu, q.nu, kappa * q.alpha);
}

// ----------------------------------------------------------- reamplification

struct ReamplifyStats {
  double p_success = 0.0;     // exactly one bright port
  double p_fail = 0.0;        // both ports dark
  double p_mixed = 0.0;       // both ports bright
  double mean_fidelity = 0.0; // success-conditioned, vs the reset target
  double min_fidelity = 1.0;  // over success cells with mass above 1e-12
};

// Exhaustive count accounting for a decayed qubit teleported through a fresh
// Bell resource at the full amplitude.
inline ReamplifyStats reamplify_enumerate(const QubitState& decayed, double alpha,
                                          int nmax = -1) {
  if (nmax < 0) nmax = count_grid(alpha);
  const CoherentSuperposition goal = qubit_cs(normalized_qubit(decayed.mu, decayed.nu, alpha));
  const CoherentSuperposition st =
      bell_split(cs_tensor(qubit_cs(decayed), bell_resource(alpha)), 0, 1);
  ReamplifyStats out;
  double fsum = 0.0;
  for (int na = 0; na <= nmax; ++na) {
    auto [s1, p1] = cs_project_fock(st, 0, na);
    if (p1 < 1e-24 && na > 6) continue;
    for (int nb = 0; nb <= nmax; ++nb) {
      auto [s2, p2] = cs_project_fock(s1, 0, nb);
      const double p = p1 * p2;
      if (p < 1e-26) continue;
      const BellKind kind = classify_counts(na, nb);
      if (kind == BellKind::Failure) {
        out.p_fail += p;
        continue;
      }
      if (kind == BellKind::MixedCounts) {
        out.p_mixed += p;
        continue;
      }
      out.p_success += p;
      const double f =
          cs_fidelity(apply_corrections(s2, corrections_for(na, nb, 0), alpha), goal);
      fsum += p * f;
      if (p > 1e-12) out.min_fidelity = std::min(out.min_fidelity, f);
    }
  }
  if (out.p_success > 0.0) out.mean_fidelity = fsum / out.p_success;
  return out;
}

// Single-shot reamplification.  Counting samples the exact conditional
// masses; Ideal is the span-frame limit where the reset is exact.
inline GateOutcome reamplify(const QubitState& decayed, double alpha, MeasureModel model,
                             SplitMix64& rng) {
  GateOutcome out;
  if (model == MeasureModel::Ideal) {
    const BellOutcome rec = detail::representative(detail::uniform_class(rng));
    out.record.push_back(rec);
    out.corrections = corrections_for(rec.na, rec.nb, 0);
    out.state = qubit_cs(normalized_qubit(decayed.mu, decayed.nu, alpha));
    out.probability = 0.25;
    return out;
  }
  const int nmax = count_grid(alpha);
  const CoherentSuperposition st =
      bell_split(cs_tensor(qubit_cs(decayed), bell_resource(alpha)), 0, 1);
  double p1 = 0.0, p2 = 0.0;
  auto [na, s1] = detail::sample_count(st, 0, nmax, rng, p1);
  auto [nb, s2] = detail::sample_count(s1, 0, nmax, rng, p2);
  const BellKind kind = classify_counts(na, nb);
  out.record.push_back({kind, na, nb});
  out.probability = p1 * p2;
  if (kind == BellKind::Failure || kind == BellKind::MixedCounts) {
    out.success = false;
    out.state = cs_normalized(s2);
    return out;
  }
  out.corrections = corrections_for(na, nb, 0);
  out.state = cs_normalized(apply_corrections(s2, out.corrections, alpha));
  return out;
}

// -------------------------------------------------------- three-mode encoding

// mu|-b> + nu|b> at b = sqrt(3) a spreads into mu|-a,-a,-a> + nu|a,a,a>.
inline CoherentSuperposition encode_three(const QubitState& q) {
  CoherentSuperposition st =
      cs_tensor(qubit_cs(q), make_cs(2, {{cx(1.0), {cx(0.0), cx(0.0)}}}));
  st = cs_beamsplitter(st, 0, 1, real_coupled(std::acos(1.0 / std::numbers::sqrt3)));
  return cs_beamsplitter(st, 1, 2, real_coupled(std::numbers::pi / 4));
}

// Mode-wise (1 + i * parity)/sqrt(2) rotation.  Stored in this frame, an
// annihilation event lands as a label flip the comparisons can see instead of
// a sign flip they cannot.  sign = -1 rotates back.
inline CoherentSuperposition flip_frame(const CoherentSuperposition& s, int sign) {
  if (sign != 1 && sign != -1) throw InvalidArgument("sign must be +1 or -1");
  CoherentSuperposition out = s;
  for (int m = 0; m < s.mode_count; ++m) {
    CoherentSuperposition next;
    next.mode_count = out.mode_count;
    next.terms.reserve(2 * out.terms.size());
    for (const auto& t : out.terms) {
      next.terms.push_back({t.coeff / std::numbers::sqrt2, t.labels});
      auto ls = t.labels;
      ls[static_cast<std::size_t>(m)] = -ls[static_cast<std::size_t>(m)];
      next.terms.push_back({cx(0.0, sign) * t.coeff / std::numbers::sqrt2, std::move(ls)});
    }
    out = cs_merge(next, 1e-12, 1e-14);
  }
  return out;
}

// Apply recorded loss events (one count per mode) while the encoded state
// sits in the flip frame; returns the normalized base-frame survivor.
inline CoherentSuperposition storage_loss(const CoherentSuperposition& encoded,
                                          const std::vector<int>& jumps) {
  if (static_cast<int>(jumps.size()) != encoded.mode_count)
    throw InvalidArgument("one jump count per mode");
  CoherentSuperposition st = flip_frame(encoded, +1);
  for (int m = 0; m < encoded.mode_count; ++m)
    for (int j = 0; j < jumps[static_cast<std::size_t>(m)]; ++j) st = cs_annihilate(st, m);
  return cs_normalized(flip_frame(st, -1));
}

enum class SyndromePath { DarkDark, Bright01, Bright12 };

struct SyndromeCell {
  CoherentSuperposition state;  // corrected conditional, survivor layout per path
  SyndromePath path = SyndromePath::DarkDark;
  int count = 0;                // photons on the bright comparison port
  double probability = 0.0;
  double fidelity = 0.0;        // vs the survivor (or decoded) target
};

namespace detail {

inline CoherentSuperposition cs_insert_vacuum(const CoherentSuperposition& s, int pos) {
  CoherentSuperposition out = s;
  out.mode_count += 1;
  for (auto& t : out.terms) t.labels.insert(t.labels.begin() + pos, cx(0.0));
  out.norm2_cache = -1.0;
  return out;
}

// Tolerant Z for syndrome survivors.  A falsely dark comparison port leaves a
// drained sliver with labels outside the span; it carries its own infidelity
// and is passed through untouched rather than rejected.
inline CoherentSuperposition z_on_pole(const CoherentSuperposition& s, int mode,
                                       double alpha) {
  CoherentSuperposition out = make_cs(s.mode_count, s.terms);
  for (auto& t : out.terms)
    if (std::abs(t.labels[static_cast<std::size_t>(mode)] - cx(alpha, 0.0)) < 1e-9)
      t.coeff = -t.coeff;
  return out;
}

}  // namespace detail

// Two pairwise sign comparisons on the encoded block: difference port of
// modes (0,1), then of (1,2) when the first stays dark.  A bright port drains
// the mismatched pair and leaves the logical content on the untouched mode,
// up to Z^(count+1); both ports dark decodes back to one mode.
inline std::vector<SyndromeCell> sign_flip_enumerate(const CoherentSuperposition& encoded,
                                                     const QubitState& logical,
                                                     int nmax = -1) {
  if (encoded.mode_count != 3) throw InvalidArgument("expects a three-mode block");
  const double a = logical.alpha / std::numbers::sqrt3;
  if (nmax < 0) nmax = count_grid(std::numbers::sqrt2 * a);
  const CoherentSuperposition vac1 = make_cs(1, {{cx(1.0), {cx(0.0)}}});
  const CoherentSuperposition tgt1 = qubit_cs(normalized_qubit(logical.mu, logical.nu, a));
  const auto pi4 = real_coupled(std::numbers::pi / 4);
  const auto pi4_inv = real_coupled(-std::numbers::pi / 4);
  const auto enc_inv = real_coupled(-std::acos(1.0 / std::numbers::sqrt3));

  std::vector<SyndromeCell> cells;
  const CoherentSuperposition stq = cs_beamsplitter(encoded, 0, 1, pi4);
  for (int n = 0; n <= nmax; ++n) {
    auto [br, p] = cs_project_fock(stq, 0, n);  // remaining [sum01, old2]
    if (p < 1e-28) continue;
    if (n > 0) {
      CoherentSuperposition cor =
          n % 2 == 0 ? detail::z_on_pole(br, 1, a) : std::move(br);
      const double f = cs_fidelity(cor, cs_tensor(vac1, tgt1));
      cells.push_back({cs_normalized(cor), SyndromePath::Bright01, n, p, f});
      continue;
    }
    const CoherentSuperposition restored =
        cs_beamsplitter(detail::cs_insert_vacuum(br, 0), 0, 1, pi4_inv);
    const CoherentSuperposition stq2 = cs_beamsplitter(restored, 1, 2, pi4);
    for (int n2 = 0; n2 <= nmax; ++n2) {
      auto [br2, p2] = cs_project_fock(stq2, 1, n2);  // remaining [old0, sum12]
      const double pj = p * p2;
      if (pj < 1e-28) continue;
      if (n2 > 0) {
        CoherentSuperposition cor =
            n2 % 2 == 0 ? detail::z_on_pole(br2, 0, a) : std::move(br2);
        const double f = cs_fidelity(cor, cs_tensor(tgt1, vac1));
        cells.push_back({cs_normalized(cor), SyndromePath::Bright12, n2, pj, f});
        continue;
      }
      CoherentSuperposition dec =
          cs_beamsplitter(detail::cs_insert_vacuum(br2, 1), 1, 2, pi4_inv);
      dec = cs_beamsplitter(cs_beamsplitter(dec, 1, 2, pi4_inv), 0, 1, enc_inv);
      const CoherentSuperposition tgt3 =
          cs_tensor(qubit_cs(logical), make_cs(2, {{cx(1.0), {cx(0.0), cx(0.0)}}}));
      const double f = cs_fidelity(dec, tgt3);
      cells.push_back({cs_normalized(dec), SyndromePath::DarkDark, 0, pj, f});
    }
  }
  return cells;
}

struct SignFlipOutcome {
  SyndromeCell cell;
  bool correctable = true;  // at most one mode saw an odd number of events
};

// Single-shot syndrome run.  The jumps record is the classical loss log; the
// circuit itself cannot tell a double flip from its complement, so the flag
// comes from the record, not the counts.
inline SignFlipOutcome correct_sign_flip(const CoherentSuperposition& encoded,
                                         const QubitState& logical,
                                         const std::vector<int>& jumps, SplitMix64& rng,
                                         int nmax = -1) {
  if (static_cast<int>(jumps.size()) != encoded.mode_count)
    throw InvalidArgument("one jump count per mode");
  const std::vector<SyndromeCell> cells = sign_flip_enumerate(encoded, logical, nmax);
  if (cells.empty()) throw ZeroProbability("no live syndrome branch within the grid");
  double total = 0.0;
  for (const auto& c : cells) total += c.probability;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  const SyndromeCell* pick = &cells.back();
  for (const auto& c : cells) {
    acc += c.probability;
    if (acc >= u) {
      pick = &c;
      break;
    }
  }
  int flipped = 0;
  for (int j : jumps) flipped += j % 2;
  return {*pick, flipped <= 1};
}

// ---------------------------------------------------------------- amplifier

// |-a, -sqrt2 a> + |a, sqrt2 a>: a plus cat at sqrt(3) a split with
// reflectivity amplitude 1/sqrt(3).
inline CoherentSuperposition amplify_resource(double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("amplify_resource needs alpha > 0");
  const double b = std::numbers::sqrt3 * alpha;
  const double norm = std::sqrt(2.0 + 2.0 * std::exp(-2.0 * b * b));
  const CoherentSuperposition cat3 =
      make_cs(2, {{cx(1.0 / norm), {cx(-b), cx(0.0)}}, {cx(1.0 / norm), {cx(b), cx(0.0)}}});
  return cs_beamsplitter(cat3, 0, 1, real_coupled(std::acos(1.0 / std::numbers::sqrt3)));
}

struct AmplifyStats {
  double p_success = 0.0;
  double p_fail = 0.0;        // both ports dark
  double mean_fidelity = 0.0; // success-conditioned, vs the grown target
  double min_fidelity = 1.0;  // over success cells with mass above 1e-12
};

inline AmplifyStats amplify_enumerate(const QubitState& q, int nmax = -1) {
  const double out_alpha = std::numbers::sqrt2 * q.alpha;
  if (nmax < 0) nmax = count_grid(out_alpha);
  const CoherentSuperposition goal = qubit_cs(normalized_qubit(q.mu, q.nu, out_alpha));
  const CoherentSuperposition st =
      bell_split(cs_tensor(qubit_cs(q), amplify_resource(q.alpha)), 0, 1);
  AmplifyStats out;
  double fsum = 0.0;
  for (int na = 0; na <= nmax; ++na) {
    auto [s1, p1] = cs_project_fock(st, 0, na);
    if (p1 < 1e-24 && na > 6) continue;
    for (int nb = 0; nb <= nmax; ++nb) {
      auto [s2, p2] = cs_project_fock(s1, 0, nb);
      const double p = p1 * p2;
      if (p < 1e-26) continue;
      if (classify_counts(na, nb) == BellKind::Failure) {
        out.p_fail += p;
        continue;
      }
      out.p_success += p;
      const double f = cs_fidelity(
          apply_corrections(s2, corrections_for(na, nb, 0), out_alpha), goal);
      fsum += p * f;
      if (p > 1e-12) out.min_fidelity = std::min(out.min_fidelity, f);
    }
  }
  if (out.p_success > 0.0) out.mean_fidelity = fsum / out.p_success;
  return out;
}

// Teleport through the amplification resource: the output qubit carries the
// same span coefficients at sqrt(2) times the amplitude.
inline GateOutcome amplify(const QubitState& q, MeasureModel model, SplitMix64& rng) {
  const double out_alpha = std::numbers::sqrt2 * q.alpha;
  GateOutcome out;
  if (model == MeasureModel::Ideal) {
    const BellOutcome rec = detail::representative(detail::uniform_class(rng));
    out.record.push_back(rec);
    out.corrections = corrections_for(rec.na, rec.nb, 0);
    out.state = qubit_cs(normalized_qubit(q.mu, q.nu, out_alpha));
    out.probability = 0.25;
    return out;
  }
  const int nmax = count_grid(out_alpha);
  const CoherentSuperposition st =
      bell_split(cs_tensor(qubit_cs(q), amplify_resource(q.alpha)), 0, 1);
  double p1 = 0.0, p2 = 0.0;
  auto [na, s1] = detail::sample_count(st, 0, nmax, rng, p1);
  auto [nb, s2] = detail::sample_count(s1, 0, nmax, rng, p2);
  const BellKind kind = classify_counts(na, nb);
  out.record.push_back({kind, na, nb});
  out.probability = p1 * p2;
  if (kind == BellKind::Failure || kind == BellKind::MixedCounts) {
    out.success = false;
    out.state = cs_normalized(s2);
    return out;
  }
  out.corrections = corrections_for(na, nb, 0);
  out.state = cs_normalized(apply_corrections(s2, out.corrections, out_alpha));
  return out;
}

// Split the amplified arm 50:50 against vacuum: the same-sign two-mode
// resource at the original amplitude, closing the factory loop.
inline CoherentSuperposition amplify_to_bell(const CoherentSuperposition& amplified) {
  if (amplified.mode_count != 1)
    throw InvalidArgument("amplify_to_bell expects a single-mode state");
  const CoherentSuperposition st =
      cs_tensor(amplified, make_cs(1, {{cx(1.0), {cx(0.0)}}}));
  return cs_beamsplitter(st, 0, 1, real_coupled(std::numbers::pi / 4));
}

}  // namespace catsim
