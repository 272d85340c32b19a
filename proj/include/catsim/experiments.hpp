#pragma once

// Named batch experiments.  Each entry declares its parameters with defaults,
// a provenance line naming the published value it reproduces (when one
// exists), and a runner that emits a result table.  Everything is
// deterministic given the seed; sampled columns draw from per-row task
// streams so splitting work never changes output bytes.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "catsim/catgen.hpp"
#include "catsim/error_model.hpp"
#include "catsim/gates.hpp"
#include "catsim/io.hpp"
#include "catsim/rng.hpp"

namespace catsim {

struct ParamDef {
  std::string key;
  std::string fallback;
  std::string help;
};

struct Params {
  std::map<std::string, std::string> kv;

  const std::string& text(const std::string& key) const {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InvalidArgument("missing parameter '" + key + "'");
    return it->second;
  }

  double real(const std::string& key) const {
    try {
      return parse_real(text(key));
    } catch (const InvalidArgument&) {
      throw InvalidArgument("parameter '" + key + "': cannot parse '" + text(key) +
                            "' as a number");
    }
  }

  long long integer(const std::string& key) const {
    const std::string& s = text(key);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw InvalidArgument("parameter '" + key + "': cannot parse '" + s +
                            "' as an integer");
    return v;
  }
};

struct ExperimentDef {
  std::string name;
  std::string summary;
  std::vector<ParamDef> params;
  Provenance provenance;
  Table (*run)(const Params&, std::uint64_t);
};

namespace detail {

inline std::vector<double> linear_grid(double lo, double hi, long long steps) {
  if (steps < 1) throw InvalidArgument("grid needs at least one point");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  if (steps == 1) {
    out.push_back(lo);
    return out;
  }
  for (long long i = 0; i < steps; ++i)
    out.push_back(lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(steps - 1));
  return out;
}

inline bool near(double x, double y) { return std::abs(x - y) < 1e-9; }

// shared generic logical superposition for the loss studies
inline QubitState generic_qubit(double alpha) {
  return normalized_qubit(cx(0.63, -0.21), cx(0.44, 0.58), alpha);
}

inline Table run_overlap(const Params& p, std::uint64_t) {
  Table t;
  t.columns = {"alpha", "amplitude", "probability", "exact_probability", "abs_error",
               "target"};
  const long long steps = p.integer("alpha_steps");
  const int cutoff = static_cast<int>(p.integer("cutoff"));
  for (double a : linear_grid(p.real("alpha_min"), p.real("alpha_max"), steps)) {
    if (!(a > 0.0)) throw InvalidArgument("overlap needs positive amplitudes");
    const int nc = cutoff < 0 ? cutoff_for_amplitude(a) : cutoff;
    const double amp = inner(coherent(cx(-a), nc), coherent(cx(a), nc)).real();
    const double exact = std::exp(-4.0 * a * a);
    t.push({a, amp, amp * amp, exact, std::abs(amp * amp - exact),
            near(a, 2.0) ? Cell("1.1e-7") : Cell(std::monostate{})});
  }
  return t;
}

inline Table run_zeno(const Params& p, std::uint64_t seed) {
  const double alpha = p.real("alpha");
  const double theta = p.real("theta");
  const int n = static_cast<int>(p.integer("n"));
  const std::string& model = p.text("model");
  const double law = rz_zeno_success(alpha, theta, n);
  Table t;
  t.columns = {"n", "model", "p_success", "p_formula", "abs_diff", "mean_fidelity",
               "target"};
  const Cell target = near(alpha, 2.0) && near(theta, 3.14159265358979323846 / 4) &&
                              (n == 8 || n == 30)
                          ? Cell(n == 8 ? "0.995" : "0.999")
                          : Cell(std::monostate{});
  if (model == "ideal") {
    const double sim = zeno_chain_probability(worst_case_qubit(alpha), theta, n,
                                              static_cast<int>(p.integer("cutoff")));
    t.push({static_cast<long long>(n), model, sim, law, std::abs(sim - law),
            std::monostate{}, target});
  } else if (model == "counting") {
    const long long shots = p.integer("shots");
    if (shots < 1) throw InvalidArgument("counting model needs shots >= 1");
    SplitMix64 rng = task_stream(seed, 0);
    const QubitState q = worst_case_qubit(alpha);
    Eigen::Vector2cd goal = rotation_matrix(Axis::Z, theta) * qubit_span(q);
    const CoherentSuperposition goal_cs = cs_normalized(
        make_cs(1, {{goal(0), {cx(-alpha)}}, {goal(1), {cx(alpha)}}}));
    long long ok = 0;
    double facc = 0.0;
    for (long long i = 0; i < shots; ++i) {
      const GateOutcome out = gate_RZ_zeno(q, theta, n, MeasureModel::Counting, rng);
      if (!out.success) continue;
      ++ok;
      facc += cs_fidelity(out.state, goal_cs);
    }
    const double frac = static_cast<double>(ok) / static_cast<double>(shots);
    t.push({static_cast<long long>(n), model, frac, law, std::abs(frac - law),
            ok ? Cell(facc / static_cast<double>(ok)) : Cell(std::monostate{}), target});
  } else {
    throw InvalidArgument("model must be 'ideal' or 'counting'");
  }
  return t;
}

inline Table run_fidelity_map(const Params& p, std::uint64_t) {
  const FidelityMap m = fidelity_map(p.real("alpha"), p.real("theta"),
                                     static_cast<int>(p.integer("nmax")));
  const double floor = p.real("p_floor");
  Table t;
  t.columns = {"na", "nb", "probability", "fidelity"};
  for (const OutcomeCell& c : m.cells) {
    if (c.probability <= floor) continue;
    t.push({static_cast<long long>(c.na), static_cast<long long>(c.nb), c.probability,
            c.fidelity});
  }
  return t;
}

inline Table run_overall_fidelity(const Params& p, std::uint64_t) {
  const double alpha = p.real("alpha");
  const double theta = p.real("theta");
  const int steps = static_cast<int>(p.integer("steps"));
  const int nmax = static_cast<int>(p.integer("nmax"));
  const double f = steps == 1 ? (nmax < 0 ? overall_fidelity(alpha, theta)
                                          : [&] {
                                              const FidelityMap m =
                                                  fidelity_map(alpha, theta, nmax);
                                              double acc = 0.0;
                                              for (const auto& c : m.cells)
                                                acc += c.probability * c.fidelity;
                                              return acc;
                                            }())
                              : composed_fidelity(alpha, theta, steps, nmax);
  Cell target{std::monostate{}};
  const double pi = 3.14159265358979323846;
  if (near(alpha, 2.0) && steps == 1 && near(theta, pi / 2)) target = Cell("0.92865");
  if (near(alpha, 2.0) && steps == 1 && near(theta, pi / 16)) target = Cell("0.99880");
  if (near(alpha, 2.0) && steps == 8 && near(theta, pi / 16)) target = Cell("0.99044");
  Table t;
  t.columns = {"alpha", "theta", "steps", "fidelity", "target"};
  t.push({alpha, theta, static_cast<long long>(steps), f, target});
  return t;
}

inline Table run_postselect(const Params& p, std::uint64_t) {
  const double alpha = p.real("alpha");
  const double theta = p.real("theta");
  const double f_min = p.real("f_min");
  const Postselection ps = postselected(alpha, theta, f_min);
  Table t;
  t.columns = {"alpha", "theta", "f_min", "p_s", "f_s", "accepted", "cost", "target"};
  t.push({alpha, theta, f_min, ps.p_s, ps.f_s,
          static_cast<long long>(ps.accepted.size()), 4.0 / ps.p_s + 1.0,
          near(alpha, 1.0) ? Cell("11.55") : Cell(std::monostate{})});
  return t;
}

inline Table run_bellcat_cost(const Params& p, std::uint64_t) {
  const double theta = p.real("theta");
  const double f_min = p.real("f_min");
  Table t;
  t.columns = {"alpha", "p_s", "f_s", "cost", "target"};
  for (double a :
       linear_grid(p.real("alpha_min"), p.real("alpha_max"), p.integer("alpha_steps"))) {
    const Postselection ps = postselected(a, theta, f_min);
    Cell target{std::monostate{}};
    if (near(a, 1.0)) target = Cell("11.55");
    if (near(a, 4.0)) target = Cell("5.75");
    t.push({a, ps.p_s, ps.f_s, 4.0 / ps.p_s + 1.0, target});
  }
  return t;
}

inline CatGenSpec spec_at_scale(double lambda, double scale, int m) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive here");
  if (scale < 0.0 || scale > lambda * (1.0 - 1e-12))
    throw InvalidArgument("scale must lie in [0, lambda)");
  return {lambda, std::acos(std::sqrt(scale / lambda)), m};
}

inline Table run_dakna_fidelity(const Params& p, std::uint64_t) {
  const double lambda = p.real("lambda");
  const int m = static_cast<int>(p.integer("m"));
  const int cutoff = static_cast<int>(p.integer("cutoff"));
  Table t;
  t.columns = {"scale", "theta", "best_alpha", "fidelity", "probability"};
  for (double x :
       linear_grid(p.real("scale_min"), p.real("scale_max"), p.integer("scale_steps"))) {
    const CatGenSpec spec = spec_at_scale(lambda, x, m);
    const CatFit fit = dakna_fidelity(spec, cutoff);
    t.push({x, spec.theta_bs, fit.alpha, fit.fidelity,
            dakna_probability(lambda, spec.theta_bs, m)});
  }
  return t;
}

inline Table run_dakna_probability(const Params& p, std::uint64_t) {
  const double lambda = p.real("lambda");
  const double theta = p.real("theta");
  const int m_max = static_cast<int>(p.integer("m_max"));
  const int cutoff = static_cast<int>(p.integer("cutoff"));
  if (m_max < 0) throw InvalidArgument("m_max must be nonnegative");
  Table t;
  t.columns = {"m", "p_closed", "p_pipeline", "abs_diff"};
  for (int m = 0; m <= m_max; m += 2) {
    const double closed = dakna_probability(lambda, theta, m);
    const DaknaResult pipe = dakna_pipeline({lambda, theta, m}, cutoff);
    t.push({static_cast<long long>(m), closed, pipe.probability,
            std::abs(closed - pipe.probability)});
  }
  return t;
}

inline Table run_dakna_bell(const Params& p, std::uint64_t) {
  const double lambda = p.real("lambda");
  const int m = static_cast<int>(p.integer("m"));
  const int cutoff = static_cast<int>(p.integer("cutoff"));
  Table t;
  t.columns = {"scale", "theta", "best_alpha", "fidelity"};
  for (double x :
       linear_grid(p.real("scale_min"), p.real("scale_max"), p.integer("scale_steps"))) {
    const CatGenSpec spec = spec_at_scale(lambda, x, m);
    const BellResource res = dakna_bell_resource(spec, cutoff);
    t.push({x, spec.theta_bs, res.alpha, res.fidelity});
  }
  return t;
}

inline Table run_dakna_gate(const Params& p, std::uint64_t) {
  const double lambda = p.real("lambda");
  const int m = static_cast<int>(p.integer("m"));
  const double scale = p.real("scale");
  const double phi = p.real("phi");
  const int cutoff = static_cast<int>(p.integer("cutoff"));
  const CatGenSpec spec = spec_at_scale(lambda, scale, m);
  Table t;
  t.columns = {"lambda", "m", "scale", "phi", "fidelity"};
  t.push({lambda, static_cast<long long>(m), scale, phi,
          dakna_gate_demo(phi, spec, cutoff)});
  return t;
}

inline Table run_loss_reamp(const Params& p, std::uint64_t seed) {
  const double alpha = p.real("alpha");
  const long long shots = p.integer("shots");
  Table t;
  t.columns = {"eps", "kappa", "p_success", "p_law", "abs_dev", "p_fail",
               "p_mixed", "mean_fidelity", "min_fidelity", "sampled_rate", "target"};
  long long row = 0;
  for (double eps :
       linear_grid(p.real("eps_min"), p.real("eps_max"), p.integer("eps_steps"))) {
    const double kappa = 1.0 - eps;
    const QubitState dec = decayed_qubit(generic_qubit(alpha), kappa);
    const ReamplifyStats s = reamplify_enumerate(dec, alpha);
    const double law = std::exp(-eps * eps * alpha * alpha / 2.0);
    Cell sampled{std::monostate{}};
    if (shots > 0) {
      SplitMix64 rng = task_stream(seed, static_cast<std::uint64_t>(row));
      long long ok = 0;
      for (long long i = 0; i < shots; ++i)
        if (reamplify(dec, alpha, MeasureModel::Counting, rng).success) ++ok;
      sampled = Cell(static_cast<double>(ok) / static_cast<double>(shots));
    }
    t.push({eps, kappa, s.p_success, law, std::abs(s.p_success - law), s.p_fail,
            s.p_mixed, s.mean_fidelity, s.min_fidelity, sampled,
            near(eps, 0.1) && near(alpha, 2.0) ? Cell("exp(-eps^2 alpha^2 / 2)")
                                               : Cell(std::monostate{})});
    ++row;
  }
  return t;
}

inline Table run_three_qubit(const Params& p, std::uint64_t) {
  const double alpha = p.real("alpha");
  const QubitState logical = generic_qubit(std::numbers::sqrt3 * alpha);
  const CoherentSuperposition enc = encode_three(logical);
  const std::vector<std::vector<int>> placements = {
      {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},
      {1, 0, 1}, {0, 1, 1}, {2, 0, 0}, {0, 2, 0}, {0, 0, 2}};
  Table t;
  t.columns = {"jumps", "sum_p", "mean_fidelity", "p_dark_dark", "p_bright01",
               "p_bright12", "correctable"};
  for (const auto& jumps : placements) {
    const auto cells = sign_flip_enumerate(storage_loss(enc, jumps), logical);
    double sum = 0.0, facc = 0.0;
    double by_path[3] = {0.0, 0.0, 0.0};
    for (const SyndromeCell& c : cells) {
      sum += c.probability;
      facc += c.probability * c.fidelity;
      by_path[static_cast<int>(c.path)] += c.probability;
    }
    int odd = 0;
    for (int j : jumps) odd += j % 2;
    t.push({std::to_string(jumps[0]) + "," + std::to_string(jumps[1]) + "," +
                std::to_string(jumps[2]),
            sum, facc / sum, by_path[0], by_path[1], by_path[2],
            static_cast<long long>(odd <= 1)});
  }
  return t;
}

inline Table run_amplify(const Params& p, std::uint64_t) {
  const double alpha = p.real("alpha");
  Table t;
  t.columns = {"input", "p_success", "p_fail", "mean_fidelity", "min_fidelity",
               "factory_fidelity"};
  const QubitState plus = worst_case_qubit(alpha);
  const AmplifyStats sp = amplify_enumerate(plus);
  const double factory = cs_fidelity(
      amplify_to_bell(qubit_cs(worst_case_qubit(std::numbers::sqrt2 * alpha))),
      bell_resource(alpha));
  t.push({"plus_cat", sp.p_success, sp.p_fail, sp.mean_fidelity, sp.min_fidelity,
          factory});
  const AmplifyStats s0 = amplify_enumerate(normalized_qubit(1.0, 0.0, alpha));
  t.push({"pole", s0.p_success, s0.p_fail, s0.mean_fidelity, s0.min_fidelity,
          std::monostate{}});
  return t;
}

}  // namespace detail

inline const std::vector<ExperimentDef>& experiments() {
  static const std::vector<ExperimentDef> defs = {
      {"overlap",
       "computational-basis overlap against the closed form",
       {{"alpha_min", "0.25", "smallest amplitude"},
        {"alpha_max", "3", "largest amplitude"},
        {"alpha_steps", "12", "grid points"},
        {"cutoff", "-1", "number cutoff, -1 for automatic"}},
       {"|<alpha|-alpha>|^2 = exp(-4 alpha^2); 1.1e-7 at alpha=2 (relative)", 0.02},
       detail::run_overlap},
      {"zeno",
       "n-step rotation success probability",
       {{"alpha", "2", "pole amplitude"},
        {"theta", "pi/4", "total rotation angle"},
        {"n", "8", "step count"},
        {"model", "ideal", "'ideal' projection chain or 'counting' shots"},
        {"shots", "50", "samples for the counting model"},
        {"cutoff", "-1", "number cutoff, -1 for automatic"}},
       {"alpha=2, theta=pi/4: P(8)=0.995, P(30)=0.999", 1e-3},
       detail::run_zeno},
      {"fidelity_map",
       "per-count-pair probability and fidelity of the rotation step",
       {{"alpha", "2", "pole amplitude"},
        {"theta", "pi/2", "rotation angle"},
        {"nmax", "-1", "count grid bound, -1 for automatic"},
        {"p_floor", "1e-12", "drop cells at or below this probability"}},
       {"alpha=2, theta=pi/2: best single count pair reaches 0.999995", 1e-5},
       detail::run_fidelity_map},
      {"overall_fidelity",
       "count-averaged rotation fidelity, optionally composed over steps",
       {{"alpha", "2", "pole amplitude"},
        {"theta", "pi/16", "per-step rotation angle"},
        {"steps", "1", "channel compositions"},
        {"nmax", "-1", "count grid bound, -1 for automatic"}},
       {"alpha=2: F(pi/2)=0.92865, F(pi/16)=0.99880, 8-step composition 0.99044",
        1e-3},
       detail::run_overall_fidelity},
      {"postselect",
       "greedy outcome acceptance above a fidelity floor",
       {{"alpha", "1", "pole amplitude"},
        {"theta", "pi/2", "rotation angle"},
        {"f_min", "0.99", "ensemble fidelity floor"}},
       {"theta=pi/2, f_min=0.99: cost 4/P+1 = 11.55 at alpha=1", 0.3},
       detail::run_postselect},
      {"bellcat_cost",
       "resource cost of the post-selected rotation across amplitudes",
       {{"alpha_min", "1", "smallest amplitude"},
        {"alpha_max", "4", "largest amplitude"},
        {"alpha_steps", "13", "grid points"},
        {"theta", "pi/2", "rotation angle"},
        {"f_min", "0.99", "ensemble fidelity floor"}},
       {"cost 11.55 at alpha=1 and 5.75 at alpha=4; P(1) > P(1.5)", 0.3},
       detail::run_bellcat_cost},
      {"dakna_fidelity",
       "best-cat fit of the conditional kept-port state",
       {{"lambda", "0.6", "squeezing parameter"},
        {"m", "2", "detected photon number (even)"},
        {"scale_min", "0.05", "smallest kept-port scale lambda cos^2(theta)"},
        {"scale_max", "0.55", "largest kept-port scale"},
        {"scale_steps", "11", "grid points"},
        {"cutoff", "60", "number cutoff"}},
       {"scale <= 0.3 keeps F > 0.99 at m=0; lambda=0.6, m in {2,4} admit F > 0.95 "
        "with P > 0.01",
        0.0},
       detail::run_dakna_fidelity},
      {"dakna_probability",
       "heralding probability: closed form against the explicit pipeline",
       {{"lambda", "0.6", "squeezing parameter"},
        {"theta", "pi/4", "splitter angle"},
        {"m_max", "8", "largest even count"},
        {"cutoff", "60", "number cutoff"}},
       {"closed form matches the pipeline to 1e-8", 1e-8},
       detail::run_dakna_probability},
      {"dakna_bell",
       "two-mode resource fit from the generated cat",
       {{"lambda", "0.6", "squeezing parameter"},
        {"m", "2", "detected photon number (even)"},
        {"scale_min", "0.18", "smallest kept-port scale"},
        {"scale_max", "0.54", "largest kept-port scale"},
        {"scale_steps", "4", "grid points"},
        {"cutoff", "60", "number cutoff"}},
       {"two-mode fit above 0.95 for m in {2,4}", 0.0},
       detail::run_dakna_bell},
      {"dakna_gate",
       "teleported phase gate driven end to end by generated resources",
       {{"lambda", "0.6", "squeezing parameter"},
        {"m", "2", "detected photon number (even)"},
        {"scale", "0.3", "kept-port scale of the resource point"},
        {"phi", "pi/32", "enacted pole phase"},
        {"cutoff", "56", "number cutoff"}},
       {"generated-resource gate stays above 0.9 across the working region", 0.0},
       detail::run_dakna_gate},
      {"loss_reamp",
       "re-amplification of a decayed qubit onto a fresh resource",
       {{"alpha", "2", "restored pole amplitude"},
        {"eps_min", "0", "smallest decay 1 - kappa"},
        {"eps_max", "0.1", "largest decay"},
        {"eps_steps", "6", "grid points"},
        {"shots", "400", "sampled success shots per row, 0 to skip"}},
       {"success tracks exp(-eps^2 alpha^2 / 2) to 1e-3 at eps=0.1, alpha=2", 1e-3},
       detail::run_loss_reamp},
      {"three_qubit",
       "sign-flip code: syndrome comparison over brute-force loss placements",
       {{"alpha", "2", "per-mode pole amplitude"}},
       {"single-loss mean fidelity at least 1 - 1e-3; distinct double losses "
        "flagged uncorrectable",
        1e-3},
       detail::run_three_qubit},
      {"amplify",
       "amplitude growth by teleportation and the resource factory loop",
       {{"alpha", "2", "input pole amplitude"}},
       {"amplified output splits back onto the gate resource exactly", 1e-8},
       detail::run_amplify},
  };
  return defs;
}

inline const ExperimentDef* find_experiment(const std::string& name) {
  for (const ExperimentDef& d : experiments())
    if (d.name == name) return &d;
  return nullptr;
}

// Resolve parameters: declared defaults, then the config file, then CLI
// overrides.  Unknown keys are rejected with the full valid set named.
inline Params resolve_params(const ExperimentDef& def,
                             const std::map<std::string, std::string>& file_kv,
                             const std::map<std::string, std::string>& cli_kv) {
  Params out;
  for (const ParamDef& pd : def.params) out.kv[pd.key] = pd.fallback;
  const auto merge = [&](const std::map<std::string, std::string>& src,
                         const char* origin) {
    for (const auto& [k, v] : src) {
      if (out.kv.find(k) == out.kv.end()) {
        std::string valid;
        for (const ParamDef& pd : def.params)
          valid += (valid.empty() ? "" : ", ") + pd.key;
        throw InvalidArgument(std::string(origin) + " key '" + k + "' unknown to '" +
                              def.name + "' (valid: " + valid + ")");
      }
      out.kv[k] = v;
    }
  };
  merge(file_kv, "config");
  merge(cli_kv, "option");
  return out;
}

}  // namespace catsim
