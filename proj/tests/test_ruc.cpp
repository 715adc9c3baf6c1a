#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ruclab/ruc.hpp"

using namespace ruclab;
using Catch::Approx;

namespace {

MetzlerGenerator random_stable_metzler(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = i == j ? 0.0 : unif(rng);
  // Strictly dominant diagonal keeps s(A) < 0.
  for (int i = 0; i < n; ++i) m(i, i) = -(m.row(i).sum() + 0.5 + unif(rng));
  return MetzlerGenerator(m);
}

LatticeVector bump(const HeatGrid& grid, double center, double width) {
  std::vector<double> f(grid.total_points());
  for (int i = 0; i < grid.spec().N; ++i) {
    const double x = grid.coordinate(i) - center;
    f[static_cast<std::size_t>(i)] = std::exp(-x * x / (width * width));
  }
  return LatticeVector(std::move(f));
}

} // namespace

TEST_CASE("maximal function") {
  SECTION("identity semigroup gives |x|") {
    const SemigroupHandle handle = MatrixSemigroup(MetzlerGenerator(Matrix::Zero(3, 3)));
    const LatticeVector x{1.0, -2.0, 0.5};
    const auto ob = maximal_function(handle, x, 1.0);
    REQUIRE(ob.bound == abs(x));
    REQUIRE(ob.stability == 0.0);
  }

  SECTION("full shift sweep lights up every visited cell") {
    const ShiftGrid grid(16, 1.0);
    const SemigroupHandle handle = grid;
    TimeGrid sweep;
    for (int i = 0; i <= 16; ++i) sweep.times.push_back(i / 16.0);
    const auto ob = maximal_function(handle, LatticeVector::unit(16, 5), 1.0, sweep);
    REQUIRE(ob.bound == LatticeVector::ones(16));
  }

  SECTION("grid validation") {
    const SemigroupHandle handle = MatrixSemigroup(MetzlerGenerator(Matrix::Zero(2, 2)));
    const LatticeVector x{1.0, 1.0};
    REQUIRE_THROWS_AS(maximal_function(handle, x, 1.0, TimeGrid{}), structural_error);
    REQUIRE_THROWS_AS(maximal_function(handle, x, 1.0, TimeGrid{{0.0, 0.5}}),
                      invalid_parameter);
    REQUIRE_THROWS_AS(maximal_function(handle, x, 1.0, TimeGrid{{0.5, 1.0}}),
                      invalid_parameter);
  }
}

TEST_CASE("maximal function properties") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const auto gen = random_stable_metzler(rng, 5);
  const SemigroupHandle handle = MatrixSemigroup(gen);
  const TimeGrid grid = default_time_grid(handle, 1.0, 64);

  SECTION("monotone in t0 on nested grids") {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> xv(5);
      for (double& v : xv) v = unif(rng);
      const LatticeVector x(xv);
      // Truncate the full grid at an interior grid point, so the small grid
      // is a genuine subset of the large one.
      TimeGrid half;
      for (double t : grid.times)
        if (t <= 0.5) half.times.push_back(t);
      const double t0_small = half.times.back();
      const auto small = maximal_function(handle, x, t0_small, half);
      const auto large = maximal_function(handle, x, 1.0, grid);
      REQUIRE(leq(small.bound, large.bound));
    }
  }

  SECTION("sublinear and positively homogeneous") {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> xv(5), yv(5);
      for (double& v : xv) v = unif(rng);
      for (double& v : yv) v = unif(rng);
      const LatticeVector x(xv), y(yv);
      const auto mx = maximal_function(handle, x, 1.0, grid).bound;
      const auto my = maximal_function(handle, y, 1.0, grid).bound;
      const auto mxy = maximal_function(handle, x + y, 1.0, grid).bound;
      REQUIRE(leq(mxy, mx + my + LatticeVector::constant(5, 1e-12)));

      const double c = unif(rng);
      const auto mcx = maximal_function(handle, c * x, 1.0, grid).bound;
      for (std::size_t i = 0; i < 5; ++i)
        REQUIRE(mcx[i] == Approx(std::abs(c) * mx[i]).margin(1e-12));
    }
  }
}

TEST_CASE("regulator from the generator domain") {
  SECTION("A = -I reduces to the modulus") {
    const MetzlerGenerator a(-Matrix::Identity(2, 2));
    const auto result = regulator_from_domA(a, LatticeVector{1.0, -2.0});
    REQUIRE(result.regulator[0] == Approx(1.0));
    REQUIRE(result.regulator[1] == Approx(2.0));
    REQUIRE(result.certified);
  }

  SECTION("coupled case against the hand resolvent") {
    Matrix m(2, 2);
    m << -2.0, 1.0, 1.0, -2.0;
    const auto result = regulator_from_domA(MetzlerGenerator(m), LatticeVector{1.0, 0.0});
    REQUIRE(result.regulator[0] == Approx(5.0 / 3.0));
    REQUIRE(result.regulator[1] == Approx(4.0 / 3.0));
    REQUIRE(result.certified);
  }

  SECTION("zero vector gives the zero regulator") {
    const MetzlerGenerator a(-Matrix::Identity(3, 3));
    const auto result = regulator_from_domA(a, LatticeVector::zeros(3));
    REQUIRE(result.regulator == LatticeVector::zeros(3));
    REQUIRE(result.max_violation == 0.0);
  }

  SECTION("unstable generators are refused with the rescaling hint") {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    try {
      regulator_from_domA(MetzlerGenerator(m), LatticeVector{1.0, 1.0});
      FAIL("expected precondition_error");
    } catch (const precondition_error& e) {
      REQUIRE(std::string(e.what()).find("rescale") != std::string::npos);
    }
  }
}

TEST_CASE("rate bound through the squared generator") {
  SECTION("scalar inequality 1 - e^{-t} <= t") {
    const MetzlerGenerator a(-Matrix::Identity(2, 2));
    const auto report =
        rate_domA2(a, LatticeVector{1.0, 0.0}, {1e-4, 1e-2, 0.1, 1.0, 5.0, 10.0});
    REQUIRE(report.certified);
  }

  SECTION("coupled case") {
    Matrix m(2, 2);
    m << -2.0, 1.0, 1.0, -2.0;
    const auto report = rate_domA2(MetzlerGenerator(m), LatticeVector{1.0, 0.0},
                                   {0.1, 1.0, 10.0});
    REQUIRE(report.certified);
  }

  SECTION("zero vector") {
    const MetzlerGenerator a(-Matrix::Identity(2, 2));
    const auto report = rate_domA2(a, LatticeVector::zeros(2), {0.5});
    REQUIRE(report.certified);
    REQUIRE(report.violations.front().second == 0.0);
  }
}

TEST_CASE("ruc certification") {
  SECTION("matrix semigroups certify all four conditions") {
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    const auto gen = random_stable_metzler(rng, 4);
    const SemigroupHandle handle = MatrixSemigroup(gen);
    std::vector<LatticeVector> samples;
    for (int s = 0; s < 3; ++s) {
      std::vector<double> xv(4);
      for (double& v : xv) v = unif(rng);
      samples.emplace_back(xv);
    }
    const auto cert = certify_theorem21(handle, samples, 1.0);
    REQUIRE(cert.i.certified);
    REQUIRE(cert.ii.certified);
    REQUIRE(cert.iii.certified);
    REQUIRE(cert.iv.certified);
    REQUIRE(cert.implication_consistent);
    REQUIRE(cert.samples.front().regulator_route == "resolvent");
  }

  SECTION("growing matrix semigroups use the empirical route and still certify") {
    Matrix m(2, 2);
    m << 0.5, 1.0, 1.0, 0.5;
    const SemigroupHandle handle = MatrixSemigroup(MetzlerGenerator(m));
    const auto cert = certify_theorem21(handle, {LatticeVector{1.0, -1.0}}, 1.0);
    REQUIRE(cert.i.certified);
    REQUIRE(cert.samples.front().regulator_route == "empirical");
  }

  SECTION("heat grid with smooth bumps") {
    GridSpec spec;
    spec.L = 5.0;
    spec.N = 256;
    const HeatGrid grid(spec);
    const SemigroupHandle handle = grid;
    const auto cert =
        certify_theorem21(handle, {bump(grid, 0.0, 1.0), bump(grid, 1.5, 0.7)}, 1.0);
    REQUIRE(cert.i.certified);
    REQUIRE(cert.implication_consistent);
    REQUIRE(LatticeNorm::sup_norm()(cert.regulator.u) > 0.0);
  }

  SECTION("zero sample certifies with the zero regulator") {
    const SemigroupHandle handle = MatrixSemigroup(MetzlerGenerator(-Matrix::Identity(2, 2)));
    const auto cert = certify_theorem21(handle, {LatticeVector::zeros(2)}, 1.0);
    REQUIRE(cert.i.certified);
    REQUIRE(cert.eps_at_t0 == 0.0);
  }

  SECTION("derived bound property holds sample-wise") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
      const auto gen = random_stable_metzler(rng, 3 + static_cast<int>(rng() % 3));
      const SemigroupHandle handle = MatrixSemigroup(gen);
      std::vector<double> xv(static_cast<std::size_t>(gen.dim()));
      for (double& v : xv) v = unif(rng);
      const auto cert = certify_theorem21(handle, {LatticeVector(xv)}, 1.0);
      REQUIRE(cert.samples.front().derived_bound_holds);
    }
  }
}
