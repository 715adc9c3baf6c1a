#include <catch2/catch_amalgamated.hpp>

#include "ruclab/lattice.hpp"
#include "ruclab/net.hpp"

using namespace ruclab;

TEST_CASE("schedules") {
  const auto anchors = geometric_schedule(5, 0.5, 1.0);
  REQUIRE(anchors == std::vector<double>{1.0, 0.5, 0.25, 0.125, 0.0625});
  REQUIRE_THROWS_AS(geometric_schedule(0), invalid_parameter);

  const auto samples = default_samples(2);
  REQUIRE(samples.size() == 5);
  REQUIRE(samples.front() == 1.0);
  REQUIRE(samples.back() == Catch::Approx(0.25));
}

TEST_CASE("net validation") {
  Net<ReversedUnitInterval, LatticeVector> net;
  net.eval = [](double t) { return LatticeVector{t}; };
  REQUIRE_THROWS_AS(validate_net(net), structural_error);

  net.samples = {1.0, 0.5};
  REQUIRE_THROWS_AS(validate_net(net), structural_error);

  net.cofinal = {0.5, 1.0}; // not monotone for the reversed order
  REQUIRE_THROWS_AS(validate_net(net), structural_error);

  net.cofinal = {1.0, 0.5};
  REQUIRE_NOTHROW(validate_net(net));
  REQUIRE(net.tail(0.5) == std::vector<double>{0.5});
}

TEST_CASE("finite poset cofinality is checked exhaustively") {
  FinitePoset order;
  // 0 <= 1 <= 2, element 3 incomparable to everything.
  order.dominates = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 0}, {0, 0, 0, 1}};

  Net<FinitePoset, LatticeVector> net;
  net.order = order;
  net.eval = [](int) { return LatticeVector{0.0}; };
  net.samples = {0, 1, 2, 3};
  net.cofinal = {1, 2};
  REQUIRE_THROWS_AS(validate_net(net), structural_error);

  net.samples = {0, 1, 2};
  REQUIRE_NOTHROW(validate_net(net));
  REQUIRE(net.tail(1) == std::vector<int>{1, 2});
}
