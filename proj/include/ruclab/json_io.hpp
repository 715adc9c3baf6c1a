#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ruclab/lattice.hpp"
#include "ruclab/ruc.hpp"
#include "ruclab/semigroup.hpp"
#include "ruclab/spectral.hpp"
#include "ruclab/uoae.hpp"
#include "ruclab/uob.hpp"

namespace ruclab {

using json = nlohmann::json;

// --- vectors and norms -----------------------------------------------------

inline void to_json(json& j, const LatticeVector& x) { j = x.values(); }

inline void from_json(const json& j, LatticeVector& x) {
  x = LatticeVector(j.get<std::vector<double>>());
}

inline void to_json(json& j, const LatticeNorm& n) {
  j = json{{"kind", n.kind == LatticeNorm::Kind::Sup ? "sup" : "lp"}};
  if (n.kind == LatticeNorm::Kind::Lp) {
    j["p"] = n.p;
    if (!n.weights.empty()) j["weights"] = n.weights;
  }
}

inline void from_json(const json& j, LatticeNorm& n) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sup") {
    n = LatticeNorm::sup_norm();
  } else if (kind == "lp") {
    n = LatticeNorm::lp(j.at("p").get<double>(),
                        j.value("weights", std::vector<double>{}));
  } else {
    throw invalid_parameter("norm kind must be 'lp' or 'sup', got '" + kind + "'");
  }
}

// --- generators and grids --------------------------------------------------

inline json generator_to_json(const MetzlerGenerator& g) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(g.dim()));
  for (int i = 0; i < g.dim(); ++i) {
    rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(g.dim()));
    for (int k = 0; k < g.dim(); ++k)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = g.matrix()(i, k);
  }
  return json{{"matrix", rows}};
}

inline MetzlerGenerator generator_from_json(const json& j) {
  const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n)
      throw structural_error("matrix rows have inconsistent lengths");
    for (Eigen::Index k = 0; k < n; ++k)
      m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return MetzlerGenerator(m);
}

inline void to_json(json& j, const GridSpec& g) {
  j = json{{"d", g.d},
           {"L", g.L},
           {"N", g.N},
           {"boundary", g.boundary == Boundary::Periodic ? "periodic" : "zero-pad"},
           {"diffusion", g.diffusion},
           {"renormalize", g.renormalize}};
}

inline void from_json(const json& j, GridSpec& g) {
  g.d = j.value("d", 1);
  g.L = j.at("L").get<double>();
  g.N = j.at("N").get<int>();
  const std::string b = j.value("boundary", "periodic");
  if (b == "periodic") g.boundary = Boundary::Periodic;
  else if (b == "zero-pad") g.boundary = Boundary::ZeroPad;
  else throw invalid_parameter("boundary must be 'periodic' or 'zero-pad'");
  g.diffusion = j.value("diffusion", 1.0);
  g.renormalize = j.value("renormalize", true);
}

inline json grid_function_to_json(const GridSpec& g, const LatticeVector& values) {
  return json{{"grid", g}, {"values", values}};
}

// --- measure space and representatives -------------------------------------

inline void to_json(json& j, const MeasureSpaceModel& m) {
  json atoms = json::array();
  for (const auto& [label, mass] : m.atoms) atoms.push_back(json::array({label, mass}));
  j = json{{"atoms", atoms}, {"null_points", m.null_points}};
}

inline void from_json(const json& j, MeasureSpaceModel& m) {
  m.atoms.clear();
  for (const auto& a : j.at("atoms"))
    m.atoms.emplace_back(a.at(0).get<std::string>(), a.at(1).get<double>());
  m.null_points = j.value("null_points", std::vector<std::string>{});
  m.validate();
}

inline void to_json(json& j, const RepresentedFunction& f) {
  j = json{{"class_values", f.class_values}, {"null_values", f.null_values}};
}

inline void from_json(const json& j, RepresentedFunction& f) {
  f.class_values = j.at("class_values").get<LatticeVector>();
  f.null_values = j.value("null_values", LatticeVector());
}

// --- reports ----------------------------------------------------------------

inline void to_json(json& j, const SpectralReport& r) {
  j = json{{"s_A", r.s_A},
           {"omega_fit", r.omega_fit},
           {"fit_window", json::array({r.t1, r.t2})},
           {"n_points", r.n_points},
           {"discrepancy", r.discrepancy},
           {"near_defective", r.near_defective},
           {"window_shrunk", r.window_shrunk},
           {"norm", r.norm}};
}

inline void to_json(json& j, const LaplaceCheckReport& r) {
  j = json{{"t_end", r.t_end}, {"panels", r.panels}, {"residual", r.residual}};
}

inline void to_json(json& j, const OrbitBound& ob) {
  j = json{{"bound", ob.bound},
           {"t0", ob.t0},
           {"time_points", ob.times.size()},
           {"stability", ob.stability},
           {"norm_of_bound", ob.norm_of_bound},
           {"under_resolved_times", ob.under_resolved_times}};
}

inline void to_json(json& j, const RegulatorDomination& r) {
  j = json{{"regulator", r.regulator},
           {"max_violation", r.max_violation},
           {"tolerance", r.tolerance},
           {"certified", r.certified}};
}

inline void to_json(json& j, const RateReport& r) {
  j = json{{"violations", r.violations}, {"tolerance", r.tolerance}, {"certified", r.certified}};
}

inline void to_json(json& j, const ConditionVerdict& v) {
  j = json{{"certified", v.certified}, {"note", v.note}};
}

inline void to_json(json& j, const RucCertificate& c) {
  json samples = json::array();
  for (const auto& s : c.samples)
    samples.push_back(json{{"orbit", s.orbit},
                           {"eps_max", s.eps_max},
                           {"ru_certified", s.ru_certified},
                           {"regulator_route", s.regulator_route},
                           {"approx_errors", s.approx_errors},
                           {"derived_bound_holds", s.derived_bound_holds}});
  j = json{{"conditions",
            json{{"i", c.i}, {"ii", c.ii}, {"iii", c.iii}, {"iv", c.iv}}},
           {"regulator", c.regulator.u},
           {"eps_schedule", c.regulator.eps_schedule},
           {"stability", c.stability},
           {"eps_at_t0", c.eps_at_t0},
           {"regulator_tail_bound", c.regulator_tail_bound},
           {"implication_consistent", c.implication_consistent},
           {"samples", samples}};
}

inline void to_json(json& j, const UobEstimate& e) {
  j = json{{"M_lower", e.M_lower},
           {"witness", e.witness},
           {"method", e.method},
           {"n_evals", e.n_evals},
           {"running_max", e.running_max}};
}

inline void to_json(json& j, const NormBoundReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(json::array({row.t, row.violation}));
  j = json{{"rows", rows}, {"tolerance", r.tolerance}, {"certified", r.certified}};
}

inline void to_json(json& j, const GaussianDominationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back(json{{"f_index", row.f_index}, {"t", row.t},
                        {"max_positive_part", row.max_positive_part}});
  j = json{{"rows", rows}, {"certified", r.certified}};
}

inline void to_json(json& j, const DivergenceTable& t) {
  json rows = json::array();
  for (const auto& row : t.rows)
    rows.push_back(json{{"sigma", row.sigma}, {"p", row.p}, {"ratio", row.ratio}});
  j = json{{"rows", rows}, {"p1_strictly_increasing", t.p1_strictly_increasing}};
}

} // namespace ruclab
