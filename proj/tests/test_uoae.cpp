#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ruclab/uoae.hpp"

using namespace ruclab;
using Catch::Approx;

namespace {

MeasureSpaceModel small_model() {
  MeasureSpaceModel m;
  m.atoms = {{"a1", 0.5}, {"a2", 1.5}};
  m.null_points = {"n1"};
  return m;
}

/// Convergent net f_t = f + t*w on the atoms, with adversarial null values.
Net<ReversedUnitInterval, RepresentedFunction> adversarial_net(
    const RepresentedFunction& f, const LatticeVector& w, double offset) {
  return make_unit_interval_net<RepresentedFunction>(
      [f, w, offset](double t) {
        RepresentedFunction rf;
        rf.class_values = f.class_values + t * w;
        rf.null_values = f.null_values + LatticeVector::constant(f.null_values.size(), offset);
        return rf;
      },
      40);
}

} // namespace

TEST_CASE("measure space model validation") {
  REQUIRE_NOTHROW(small_model().validate());

  MeasureSpaceModel bad = small_model();
  bad.atoms[0].second = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), invalid_parameter);

  MeasureSpaceModel dup = small_model();
  dup.null_points = {"a1"};
  REQUIRE_THROWS_AS(dup.validate(), invalid_parameter);

  MeasureSpaceModel empty;
  REQUIRE_THROWS_AS(empty.validate(), structural_error);

  REQUIRE(small_model().lp(1.0)(LatticeVector{1.0, 1.0}) == Approx(2.0));
}

TEST_CASE("unbounded order convergence check") {
  const LatticeVector f{1.0, -1.0};
  const LatticeVector u = LatticeVector::ones(2);

  SECTION("constant net has an identically zero envelope") {
    auto net = make_unit_interval_net<LatticeVector>([&](double) { return f; }, 20);
    const auto report = uo_check(net, f, u);
    REQUIRE(report.converges);
    for (double e : report.envelope_sup) REQUIRE(e == 0.0);
  }

  SECTION("drifting net has envelope t_n") {
    auto net = make_unit_interval_net<LatticeVector>(
        [&](double t) { return f + LatticeVector::constant(2, t); }, 40);
    const auto report = uo_check(net, f, u);
    REQUIRE(report.converges);
    for (std::size_t n = 0; n < report.anchors.size(); ++n)
      REQUIRE(report.envelope_sup[n] == Approx(std::min(1.0, report.anchors[n])));
  }

  SECTION("moving spike does not uo-converge to 0") {
    auto net = moving_spike_net(3, 30);
    const auto report = uo_check(net, LatticeVector::zeros(3), LatticeVector::ones(3));
    REQUIRE_FALSE(report.converges);
    REQUIRE(report.envelope_sup.back() == Approx(1.0));
  }
}

TEST_CASE("cofinal envelope") {
  SECTION("linear net collapses to zero") {
    const auto net = linear_net(LatticeVector{1.0, 1.0});
    const auto env = cofinal_envelope(net);
    for (std::size_t n = 0; n < env.anchors.size(); ++n)
      REQUIRE(LatticeNorm::sup_norm()(env.y_n[n]) == Approx(env.anchors[n]));
    REQUIRE(env.y_sup_norm < 1e-8);
  }

  SECTION("band-alternating net keeps y = (1,1)") {
    const auto env = cofinal_envelope(band_alternating_net());
    REQUIRE(env.y == LatticeVector{1.0, 1.0});
  }

  SECTION("zero net") {
    const auto env = cofinal_envelope(linear_net(LatticeVector::zeros(2)));
    REQUIRE(env.y == LatticeVector::zeros(2));
  }

  SECTION("non-finite samples raise order_unbounded") {
    auto net = make_unit_interval_net<LatticeVector>(
        [](double t) { return LatticeVector{1.0 / t * 1e308}; }, 10);
    REQUIRE_THROWS_AS(cofinal_envelope(net), order_unbounded);
  }
}

TEST_CASE("cofinal witness") {
  SECTION("band-alternating net yields a witness with full limsup") {
    const auto net = band_alternating_net();
    const auto witness = cofinal_witness(net);
    REQUIRE(witness);
    REQUIRE(witness->limsup_bound == LatticeVector{1.0, 1.0});
    REQUIRE(witness->limsup_norm >= witness->envelope_norm / 2.0);
    // Co-final: each group sits inside the corresponding anchor's tail.
    for (std::size_t pos = 0; pos < witness->groups.size(); ++pos)
      for (double j : witness->groups[pos]) REQUIRE(j <= net.cofinal[pos]);
    // The witness alternates between both band kinds.
    bool saw_first = false, saw_second = false;
    for (double j : witness->sequence) {
      const LatticeVector v = net.eval(j);
      if (v == LatticeVector{1.0, 0.0}) saw_first = true;
      if (v == LatticeVector{0.0, 1.0}) saw_second = true;
    }
    REQUIRE(saw_first);
    REQUIRE(saw_second);
  }

  SECTION("moving spike witness cycles every coordinate") {
    const auto net = moving_spike_net(3, 30);
    const auto witness = cofinal_witness(net);
    REQUIRE(witness);
    REQUIRE(witness->limsup_bound == LatticeVector::ones(3));
  }

  SECTION("convergent nets need no witness") {
    REQUIRE_FALSE(cofinal_witness(linear_net(LatticeVector{2.0, 1.0})));
  }

  SECTION("random convergent nets never produce a witness") {
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> unif(0.5, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t dim = 1 + rng() % 5;
      LatticeVector v = LatticeVector::zeros(dim);
      for (std::size_t i = 0; i < dim; ++i) v[i] = unif(rng);
      const double alpha = 0.5 + unif(rng); // at least linear decay
      auto net = make_unit_interval_net<LatticeVector>(
          [v, alpha](double t) { return std::pow(t, alpha) * v; }, 40);
      REQUIRE_FALSE(cofinal_witness(net));
    }
  }
}

TEST_CASE("representative selection") {
  const MeasureSpaceModel model = small_model();
  RepresentedFunction f;
  f.class_values = LatticeVector{1.0, -0.5};
  f.null_values = LatticeVector{0.25};
  RepresentedFunction u;
  u.class_values = LatticeVector{1.0, 1.0};
  u.null_values = LatticeVector{1.0};

  SECTION("clean representatives are left alone") {
    auto net = adversarial_net(f, LatticeVector{1.0, 1.0}, 0.0);
    const auto result = select_representatives(net, model, f, u);
    REQUIRE(result.overrides == 0);
    REQUIRE(result.all_points_converged);
    for (std::size_t k = 0; k < result.indices.size(); ++k)
      REQUIRE(result.after[k] == result.before[k]);
  }

  SECTION("adversarial null values are overridden and convergence restored") {
    auto net = adversarial_net(f, LatticeVector{1.0, 1.0}, 1.0);
    const auto result = select_representatives(net, model, f, u);
    REQUIRE(result.overrides > 0);
    REQUIRE(result.class_values_untouched);
    REQUIRE(result.all_points_converged);

    const auto pre = pointwise_converged(net.order, result.indices, result.before,
                                         result.anchors, f);
    REQUIRE_FALSE(pre.back()); // null point diverges before selection
    const auto post = pointwise_converged(net.order, result.indices, result.after,
                                          result.anchors, f);
    REQUIRE(post.back());
  }

  SECTION("oscillating null values are removed once the envelope is small") {
    auto net = make_unit_interval_net<RepresentedFunction>(
        [&](double t) {
          RepresentedFunction rf;
          rf.class_values = f.class_values;
          const long k = static_cast<long>(std::llround(-std::log2(t) * 2.0));
          rf.null_values = f.null_values +
                           LatticeVector{(k % 2 == 0 ? 1.0 : -1.0)};
          return rf;
        },
        40);
    const auto result = select_representatives(net, model, f, u);
    REQUIRE(result.all_points_converged);
    // Oscillations in bands with envelope below 1 are gone.
    for (std::size_t k = 0; k < result.indices.size(); ++k) {
      const int band = result.partition[k];
      if (band >= 1 && result.g_null[static_cast<std::size_t>(band - 1)] < 1.0)
        REQUIRE(result.after[k].null_values[0] == f.null_values[0]);
    }
  }

  SECTION("idempotent") {
    auto net = adversarial_net(f, LatticeVector{1.0, 1.0}, 1.0);
    const auto first = select_representatives(net, model, f, u);

    Net<ReversedUnitInterval, RepresentedFunction> fixed;
    fixed.samples = net.samples;
    fixed.cofinal = net.cofinal;
    fixed.eval = [&first](double t) {
      for (std::size_t k = 0; k < first.indices.size(); ++k)
        if (first.indices[k] == t) return first.after[k];
      throw structural_error("index not tabulated");
    };
    const auto second = select_representatives(fixed, model, f, u);
    REQUIRE(second.overrides == 0);
    for (std::size_t k = 0; k < first.indices.size(); ++k)
      REQUIRE(second.after[k] == first.after[k]);
  }

  SECTION("vanishing u names the failing point") {
    RepresentedFunction u_bad = u;
    u_bad.null_values[0] = 0.0;
    auto net = adversarial_net(f, LatticeVector{1.0, 1.0}, 1.0);
    try {
      select_representatives(net, model, f, u_bad);
      FAIL("expected precondition_error");
    } catch (const precondition_error& e) {
      REQUIRE(std::string(e.what()).find("n1") != std::string::npos);
    }
  }

  SECTION("finite poset model reports its J_0 bucket") {
    // 0 <= 1 <= 2 is the co-final chain; 3 sits below 2 but is incomparable
    // to the anchors 1 and 2 taken from deeper in the chain.
    FinitePoset order;
    order.dominates = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 1}, {0, 0, 0, 1}};

    Net<FinitePoset, RepresentedFunction> net;
    net.order = order;
    net.samples = {0, 1, 2, 3};
    net.cofinal = {1, 2};
    const std::vector<double> class_dev{0.5, 1e-7, 0.0, 0.25};
    net.eval = [&](int j) {
      RepresentedFunction rf;
      rf.class_values = f.class_values +
                        LatticeVector::constant(2, class_dev[static_cast<std::size_t>(j)]);
      rf.null_values = f.null_values + LatticeVector{j == 2 ? 0.0 : 1.0};
      return rf;
    };
    const auto result = select_representatives(net, model, f, u);
    REQUIRE(result.j0_size == 2); // indices 0 and 3
    REQUIRE(result.partition == std::vector<int>{0, 1, 2, 0});
    // J_0 representatives stay arbitrary; deeper bands get overridden.
    REQUIRE(result.after[0].null_values[0] == result.before[0].null_values[0]);
    REQUIRE(result.after[3].null_values[0] == result.before[3].null_values[0]);
    REQUIRE(result.after[1].null_values[0] == f.null_values[0]);
  }

  SECTION("non-convergent class data is refused") {
    auto net = make_unit_interval_net<RepresentedFunction>(
        [&](double) {
          RepresentedFunction rf;
          rf.class_values = f.class_values + LatticeVector{1.0, 0.0};
          rf.null_values = f.null_values;
          return rf;
        },
        20);
    REQUIRE_THROWS_AS(select_representatives(net, model, f, u), precondition_error);
  }
}

TEST_CASE("order convergence implies uo convergence") {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t dim = 2 + rng() % 3;
    LatticeVector v = LatticeVector::zeros(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = unif(rng);
    auto net = make_unit_interval_net<LatticeVector>(
        [v](double t) { return t * v; }, 40);
    const auto env = cofinal_envelope(net);
    if (env.y_sup_norm > 1e-8) continue; // only order-convergent nets
    LatticeVector u = LatticeVector::zeros(dim);
    for (std::size_t i = 0; i < dim; ++i) u[i] = unif(rng);
    REQUIRE(uo_check(net, LatticeVector::zeros(dim), u).converges);
  }
}

TEST_CASE("pointwise-convergent nets pass uo_check for every test vector") {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t dim = 2 + rng() % 3;
    LatticeVector limit = LatticeVector::zeros(dim);
    LatticeVector slope = LatticeVector::zeros(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      limit[i] = unif(rng) - 1.0;
      slope[i] = unif(rng);
    }
    auto net = make_unit_interval_net<LatticeVector>(
        [limit, slope](double t) { return limit + t * slope; }, 40);
    for (int k = 0; k < 3; ++k) {
      LatticeVector u = LatticeVector::zeros(dim);
      for (std::size_t i = 0; i < dim; ++i) u[i] = unif(rng);
      REQUIRE(uo_check(net, limit, u).converges);
    }
  }
}

TEST_CASE("orbit continuity through representative selection") {
  SECTION("identity semigroup converges trivially once representatives are fixed") {
    MeasureSpaceModel model;
    model.atoms = {{"a1", 1.0}, {"a2", 2.0}};
    model.null_points = {"n1"};
    const SemigroupHandle handle = MatrixSemigroup(MetzlerGenerator(Matrix::Zero(2, 2)));
    RepresentedFunction f;
    f.class_values = LatticeVector{1.0, -2.0};
    f.null_values = LatticeVector{0.5};
    RepresentedFunction u;
    u.class_values = LatticeVector{1.0, 1.0};
    u.null_values = LatticeVector{1.0};
    const auto report = orbit_ae_continuity(handle, model, f, u, 3);
    REQUIRE(report.post_all_converged);
    REQUIRE_FALSE(report.pre_all_converged); // adversarial nulls corrupt the input
  }

  SECTION("matrix semigroup on three atoms and two null points") {
    MeasureSpaceModel model;
    model.atoms = {{"a1", 1.0}, {"a2", 0.5}, {"a3", 2.0}};
    model.null_points = {"n1", "n2"};

    Matrix m(3, 3);
    m << -2.0, 0.5, 0.0, 0.5, -1.5, 0.25, 0.0, 0.25, -1.0;
    const SemigroupHandle handle = MatrixSemigroup(MetzlerGenerator(m));

    RepresentedFunction f;
    f.class_values = LatticeVector{1.0, -1.0, 0.5};
    f.null_values = LatticeVector{0.0, 2.0};
    RepresentedFunction u;
    u.class_values = LatticeVector{1.0, 1.0, 1.0};
    u.null_values = LatticeVector{1.0, 1.0};

    const auto report = orbit_ae_continuity(handle, model, f, u, 7);
    REQUIRE_FALSE(report.pre_all_converged);
    REQUIRE(report.post_all_converged);
    REQUIRE(report.selection.class_values_untouched);
  }

  SECTION("grid cells as atoms with no null points reduce to plain convergence") {
    GridSpec spec;
    spec.L = 2.0;
    spec.N = 32;
    const HeatGrid grid(spec);
    MeasureSpaceModel model;
    for (int i = 0; i < spec.N; ++i)
      model.atoms.emplace_back("c" + std::to_string(i), grid.h());

    std::vector<double> fv(grid.total_points());
    for (int i = 0; i < spec.N; ++i) {
      const double x = grid.coordinate(i);
      fv[static_cast<std::size_t>(i)] = std::exp(-x * x);
    }
    RepresentedFunction f;
    f.class_values = LatticeVector(fv);
    f.null_values = LatticeVector();
    RepresentedFunction u;
    u.class_values = LatticeVector::ones(grid.total_points());
    u.null_values = LatticeVector();

    const auto report = orbit_ae_continuity(grid, model, f, u, 11);
    REQUIRE(report.selection.overrides == 0);
    REQUIRE(report.post_all_converged);
    REQUIRE(report.pre_all_converged); // nothing to corrupt without null points
  }
}
