#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "catsim/fock.hpp"
#include "catsim/rng.hpp"

using namespace catsim;

namespace {

cx coherent_overlap(cx tau, cx alpha) {
  // <tau|alpha> for coherent labels
  return std::exp(-0.5 * (std::norm(tau) + std::norm(alpha)) +
                  std::conj(tau) * alpha);
}

FockVector random_state(SplitMix64& rng, int cutoff) {
  FockVector v;
  v.amp.resize(cutoff + 1);
  for (auto& a : v.amp) a = cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  const double s = 1.0 / std::sqrt(norm2(v));
  for (auto& a : v.amp) a *= s;
  return v;
}

double max_componentwise_dev(const FockVector& a, const FockVector& b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.amp.size(); ++n)
    m = std::max(m, std::abs(a.amp[n] - b.amp[n]));
  return m;
}

std::vector<double> sector_masses(const MultiModeState& s) {
  std::vector<double> mass(2 * s.cutoff() + 1, 0.0);
  for (int n1 = 0; n1 < s.dim; ++n1)
    for (int n2 = 0; n2 < s.dim; ++n2)
      mass[n1 + n2] += std::norm(s.amp[static_cast<std::size_t>(n1) * s.dim + n2]);
  return mass;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

}  // namespace

TEST_CASE("coherent states: vacuum, moments, overlaps") {
  const FockVector vac = coherent(0.0, 10);
  REQUIRE(vac.amp[0] == cx(1.0));
  for (int n = 1; n <= 10; ++n) REQUIRE(vac.amp[n] == cx(0.0));

  const int nc = cutoff_for_amplitude(2.0);
  const FockVector c2 = coherent(2.0, nc);
  REQUIRE(std::abs(norm2(c2) - 1.0) < 1e-12);
  REQUIRE(std::abs(mean_photon(c2) - 4.0) < 1e-10);

  // |<2|-2>|^2 = e^{-16}
  const FockVector cm2 = coherent(-2.0, nc);
  REQUIRE(std::abs(fidelity(c2, cm2) / std::exp(-16.0) - 1.0) < 1e-10);

  // componentwise against a_n = e^{-|a|^2/2} a^n / sqrt(n!)
  const cx alpha(1.1, -0.4);
  const FockVector c = coherent(alpha, 40);
  for (int n = 0; n <= 40; ++n) {
    const cx ref = std::exp(-0.5 * std::norm(alpha) +
                            static_cast<double>(n) * std::log(alpha) -
                            0.5 * std::lgamma(n + 1.0));
    REQUIRE(std::abs(c.amp[n] - ref) < 1e-12);
  }
}

TEST_CASE("cat states: parity mass and degenerate cases") {
  const FockVector plus = cat(2.0, +1, 40);
  REQUIRE(std::abs(norm2(plus) - 1.0) < 1e-12);
  double odd_mass = 0.0;
  for (int n = 1; n <= 40; n += 2) odd_mass += std::norm(plus.amp[n]);
  REQUIRE(odd_mass == 0.0);

  const FockVector minus = cat(2.0, -1, 40);
  double even_mass = 0.0;
  for (int n = 0; n <= 40; n += 2) even_mass += std::norm(minus.amp[n]);
  REQUIRE(even_mass == 0.0);

  // alpha = 0: the even cat is the vacuum, the odd cat has no norm
  const FockVector c0 = cat(0.0, +1, 10);
  REQUIRE(std::abs(c0.amp[0] - cx(1.0)) < 1e-15);
  REQUIRE_THROWS_AS(cat(0.0, -1, 10), InvalidArgument);
}

TEST_CASE("squeezed even vacuum: norm and mean photon number") {
  const FockVector sq = squeezed_even(0.6, 60);
  REQUIRE(std::abs(norm2(sq) - 1.0) < 1e-10);
  // <n> = lambda^2 / (1 - lambda^2) = 0.36/0.64
  REQUIRE(std::abs(mean_photon(sq) - 0.5625) < 1e-8);
  for (int n = 1; n <= 60; n += 2) REQUIRE(sq.amp[n] == cx(0.0));
}

TEST_CASE("preparation rejects cutoffs that clip the state") {
  REQUIRE_THROWS_AS(coherent(6.0, 30), TruncationError);
  REQUIRE_NOTHROW(coherent(6.0, cutoff_for_amplitude(6.0)));
}

TEST_CASE("displacement composes with the Weyl phase") {
  const FockVector v = coherent(0.2, 60);
  const cx pairs[][2] = {
      {cx(0.3, 0.1), cx(-0.2, 0.4)},   // both recurrence
      {cx(1.4, -0.3), cx(0.0, 1.1)},   // both eigensolver
      {cx(0.5, 0.0), cx(0.0, 1.3)},    // mixed
  };
  for (const auto& p : pairs) {
    const cx b1 = p[0], b2 = p[1];
    const FockVector lhs = displace(displace(v, b1), b2);
    FockVector rhs = displace(v, b1 + b2);
    const cx phase = std::exp(0.5 * (b2 * std::conj(b1) - std::conj(b2) * b1));
    for (auto& a : rhs.amp) a *= phase;
    REQUIRE(max_componentwise_dev(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("displacement is unitary on the retained block") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const int dim = 11 + static_cast<int>(rng.next() % 30);  // cutoff <= 40
    const double r = 3.0 * rng.uniform();
    const double ph = 2.0 * M_PI * rng.uniform();
    const Eigen::MatrixXcd d =
        displacement_matrix(std::polar(r, ph), dim);
    const double err = (d.adjoint() * d - Eigen::MatrixXcd::Identity(dim, dim))
                           .cwiseAbs()
                           .maxCoeff();
    INFO("dim " << dim << " |beta| " << r);
    REQUIRE(err < 1e-10);
  }
}

TEST_CASE("displacement matches the matrix-element recurrence away from the cutoff") {
  // independent construction: D[m][0] from the coherent column, then
  // D[m][n+1] = (sqrt(m) D[m-1][n] - conj(beta) D[m][n]) / sqrt(n+1)
  const cx beta(0.35, -0.25);
  const int dim = 40;
  Eigen::MatrixXcd ref(dim, dim);
  ref(0, 0) = std::exp(-0.5 * std::norm(beta));
  for (int m = 0; m + 1 < dim; ++m)
    ref(m + 1, 0) = ref(m, 0) * beta / std::sqrt(static_cast<double>(m + 1));
  for (int n = 0; n + 1 < dim; ++n)
    for (int m = 0; m < dim; ++m) {
      cx up = (m > 0) ? std::sqrt(static_cast<double>(m)) * ref(m - 1, n) : cx(0.0);
      ref(m, n + 1) = (up - std::conj(beta) * ref(m, n)) /
                      std::sqrt(static_cast<double>(n + 1));
    }
  const Eigen::MatrixXcd got = displacement_matrix(beta, dim);
  // compare on the block whose action stays clear of the cutoff
  const double err =
      (got - ref).topLeftCorner(dim / 2, dim / 2).cwiseAbs().maxCoeff();
  REQUIRE(err < 1e-12);
}

TEST_CASE("displaced coherent state matches the closed form") {
  const cx gamma(0.7, 0.2), beta_small(-0.4, 0.5), beta_large(0.0, 2.5);
  for (cx beta : {beta_small, beta_large}) {
    const int nc = cutoff_for_amplitude(std::abs(gamma) + std::abs(beta));
    const FockVector got = displace(coherent(gamma, nc), beta);
    FockVector want = coherent(gamma + beta, nc);
    const cx phase =
        std::exp(0.5 * (beta * std::conj(gamma) - std::conj(beta) * gamma));
    for (auto& a : want.amp) a *= phase;
    REQUIRE(max_componentwise_dev(got, want) < 1e-10);
  }
}

TEST_CASE("phase rotation: involution at pi and label flip") {
  const FockVector c = coherent(cx(0.9, 0.3), 40);
  const FockVector back = phase_rotate(phase_rotate(c, M_PI), M_PI);
  REQUIRE(max_componentwise_dev(back, c) < 1e-12);

  const FockVector flipped = phase_rotate(c, M_PI);
  const FockVector target = coherent(cx(-0.9, -0.3), 40);
  REQUIRE(std::abs(fidelity(flipped, target) - 1.0) < 1e-12);
}

TEST_CASE("parity distribution after imaginary displacement matches the oracle") {
  // vacuum: displaced by i*delta, P_even = (1 + e^{-2 delta^2})/2
  const double delta = 0.8;
  {
    const FockVector d = displace(coherent(0.0, 40), cx(0.0, delta));
    double pe = 0.0;
    for (int n = 0; n <= 40; n += 2) pe += std::norm(d.amp[n]);
    REQUIRE(std::abs(pe - 0.5 * (1.0 + std::exp(-2.0 * delta * delta))) < 1e-10);
  }
  // even cat: oracle from the label algebra, P_even = (1 + <Pi>)/2 with
  // <Pi> = sum_ij conj(c_i) c_j <b_i|-b_j> / norm
  {
    const double a = 1.5;
    const int nc = cutoff_for_amplitude(a + delta);
    const FockVector d = displace(cat(a, +1, nc), cx(0.0, delta));
    double pe = 0.0;
    for (int n = 0; n <= nc; n += 2) pe += std::norm(d.amp[n]);

    const cx coeff[2] = {std::exp(cx(0.0, -a * delta)),
                         std::exp(cx(0.0, a * delta))};
    const cx label[2] = {cx(-a, delta), cx(a, delta)};
    cx flip(0.0), nrm(0.0);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const cx w = std::conj(coeff[i]) * coeff[j];
        flip += w * coherent_overlap(label[i], -label[j]);
        nrm += w * coherent_overlap(label[i], label[j]);
      }
    const double want = 0.5 * (1.0 + std::real(flip / nrm));
    REQUIRE(std::abs(pe - want) < 1e-10);
  }
}

TEST_CASE("beamsplitter conserves photon number sector by sector") {
  SplitMix64 rng(7);
  const int nc = 18;
  MultiModeState st = tensor({random_state(rng, nc), random_state(rng, nc)});
  const std::vector<double> before = sector_masses(st);
  for (auto conv : {phase_coupled(0.73), real_coupled(M_PI / 4)}) {
    const MultiModeState out = beamsplitter(st, 0, 1, conv);
    const std::vector<double> after = sector_masses(out);
    for (std::size_t s = 0; s < before.size(); ++s)
      REQUIRE(std::abs(after[s] - before[s]) < 1e-12);
    REQUIRE(std::abs(norm2(out) - norm2(st)) < 1e-12);
    // inverse angle undoes the mix
    const MultiModeState back = beamsplitter(
        out, 0, 1, BeamsplitterConvention{conv.kind, -conv.angle});
    double dev = 0.0;
    for (std::size_t k = 0; k < st.amp.size(); ++k)
      dev = std::max(dev, std::abs(back.amp[k] - st.amp[k]));
    REQUIRE(dev < 1e-12);
  }
}

TEST_CASE("beamsplitter maps coherent labels per convention") {
  const cx g(0.8, -0.2), b(0.4, 0.6);
  const int nc = 30;
  const MultiModeState in = tensor({coherent(g, nc), coherent(b, nc)});

  {  // RealCoupled: (g, b) -> (g c - b s, b c + g s)
    const double phi = 0.6;
    const MultiModeState out = beamsplitter(in, 0, 1, real_coupled(phi));
    const double c = std::cos(phi), s = std::sin(phi);
    const MultiModeState want =
        tensor({coherent(g * c - b * s, nc), coherent(b * c + g * s, nc)});
    REQUIRE(std::abs(fidelity(out, want) - 1.0) < 1e-10);
    double dev = 0.0;
    for (std::size_t k = 0; k < out.amp.size(); ++k)
      dev = std::max(dev, std::abs(out.amp[k] - want.amp[k]));
    REQUIRE(dev < 1e-10);  // no extra phase on coherent products
  }
  {  // PhaseCoupled: (g, b) -> (g c + i b s, b c + i g s), c/s of theta/2
    const double th = 0.9;
    const MultiModeState out = beamsplitter(in, 0, 1, phase_coupled(th));
    const double c = std::cos(0.5 * th), s = std::sin(0.5 * th);
    const MultiModeState want = tensor({coherent(g * c + cx(0, 1) * b * s, nc),
                                        coherent(b * c + cx(0, 1) * g * s, nc)});
    REQUIRE(std::abs(fidelity(out, want) - 1.0) < 1e-10);
  }
}

TEST_CASE("counting projections: completeness and conditional states") {
  const int nc = 40;
  const double a = 1.2;
  MultiModeState st = tensor({cat(a, +1, nc), coherent(0.0, nc)});
  st = beamsplitter(st, 0, 1, real_coupled(M_PI / 4));

  double total = 0.0;
  for (int n = 0; n <= nc; ++n) {
    const std::size_t idx = static_cast<std::size_t>(n);
    double mass = 0.0;
    for (int m = 0; m <= nc; ++m)
      mass += std::norm(st.amp[static_cast<std::size_t>(m) * st.dim + idx]);
    if (mass < 1e-28) continue;  // zero-probability counts are rejected
    auto [cond, p] = project_fock(st, 1, n);
    REQUIRE(cond.modes == 1);
    REQUIRE(std::abs(norm2(cond) - 1.0) < 1e-12);
    total += p;
  }
  REQUIRE(std::abs(total - 1.0) < 1e-10);

  // splitting a cat against vacuum correlates the ports: labels
  // (+-a, 0) -> (+-a/sqrt2, +-a/sqrt2).  A zero count in port 0 weights both
  // branches equally, leaving the even cat at a/sqrt2 in port 1.
  auto [cond0, p0] = project_fock(st, 0, 0);
  REQUIRE(p0 > 0.0);
  const FockVector want = cat(a / std::sqrt(2.0), +1, nc);
  FockVector got;
  got.amp = cond0.amp;
  REQUIRE(fidelity(got, want) > 1.0 - 1e-9);

  // an even state has no odd-count support
  REQUIRE_THROWS_AS(project_fock(from_single(cat(1.0, +1, nc)), 0, 1),
                    ZeroProbability);
}

TEST_CASE("fidelity: shape checks and ensembles") {
  const FockVector a = coherent(1.0, 30), b = coherent(-1.0, 30);
  REQUIRE_THROWS_AS(fidelity(a, coherent(1.0, 31)), DimensionMismatch);
  REQUIRE(std::abs(fidelity(a, b) - std::exp(-4.0)) < 1e-12);

  const std::vector<std::pair<double, FockVector>> mix = {{0.25, a}, {0.75, b}};
  const double f = ensemble_fidelity(mix, a);
  REQUIRE(std::abs(f - (0.25 + 0.75 * std::exp(-4.0))) < 1e-12);
}

TEST_CASE("quadrature distributions: normalization and cat fringes") {
  const double a = 2.0;
  const int nc = cutoff_for_amplitude(a);
  const std::vector<double> grid = linspace(-10.0, 10.0, 4001);

  for (const FockVector& st :
       {coherent(cx(0.7, 0.4), nc), cat(a, +1, nc), cat(a, -1, nc)}) {
    for (double phase : {0.0, M_PI / 2, 1.1}) {
      const std::vector<double> p = quadrature_distribution(st, phase, grid);
      REQUIRE(std::abs(trapezoid(grid, p) - 1.0) < 1e-6);
    }
  }

  // fringes at the imaginary quadrature: the two parities interleave
  const std::vector<double> zero = {0.0};
  const double pplus0 = quadrature_distribution(cat(a, +1, nc), M_PI / 2, zero)[0];
  const double pminus0 = quadrature_distribution(cat(a, -1, nc), M_PI / 2, zero)[0];
  // |psi_+(0)|^2 = (2/sqrt(pi)) / (1 + e^{-2 a^2})
  const double want0 = 2.0 / std::sqrt(M_PI) / (1.0 + std::exp(-2.0 * a * a));
  REQUIRE(std::abs(pplus0 - want0) < 1e-10);
  REQUIRE(pminus0 < 1e-12);

  // zero of the plus fringe sits at the minus-fringe maximum scale:
  // cos(sqrt2 a x0) = 0 at x0 = pi/(2 sqrt2 a)
  const double x0 = M_PI / (2.0 * std::sqrt(2.0) * a);
  const double pplus_x0 =
      quadrature_distribution(cat(a, +1, nc), M_PI / 2, {x0})[0];
  const double pminus_x0 =
      quadrature_distribution(cat(a, -1, nc), M_PI / 2, {x0})[0];
  REQUIRE(pplus_x0 < 1e-10);
  REQUIRE(pminus_x0 > 0.5);
}

TEST_CASE("multimode phase rotation acts on the addressed mode only") {
  const int nc = 25;
  const cx g(0.5, 0.2), b(-0.3, 0.4);
  const MultiModeState in = tensor({coherent(g, nc), coherent(b, nc)});
  const MultiModeState out = phase_rotate(in, 1, M_PI);
  const MultiModeState want = tensor({coherent(g, nc), coherent(-b, nc)});
  double dev = 0.0;
  for (std::size_t k = 0; k < out.amp.size(); ++k)
    dev = std::max(dev, std::abs(out.amp[k] - want.amp[k]));
  REQUIRE(dev < 1e-10);
}
