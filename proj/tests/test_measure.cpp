#include <cmath>
#include <limits>

#include "doctest.h"
#include "kineq/errors.hpp"
#include "kineq/measure.hpp"
#include "kineq/rng.hpp"

using namespace kineq;

TEST_SUITE_BEGIN("measure");

TEST_CASE("pairing of constants, point masses and symmetric pairs") {
  const auto one = [](const Point&) { return 1.0; };
  const auto identity = [](const Point& x) { return x[0]; };
  const auto square = [](const Point& x) { return x[0] * x[0]; };

  const auto any = DiscreteMeasure::probability({{0.3}, {-1.2}, {4.0}},
                                                {0.2, 0.5, 0.3});
  CHECK(pairing(one, any) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK(pairing(identity, DiscreteMeasure::dirac({2.0})) == doctest::Approx(2.0));

  const auto symmetric =
      DiscreteMeasure::probability({{-1.0}, {1.0}}, {0.5, 0.5});
  CHECK(pairing(square, symmetric) == doctest::Approx(1.0));
}

TEST_CASE("pairing reports the offending atom for non-finite values") {
  const auto bad = [](const Point& x) {
    return x[0] == 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  };
  const auto mu = DiscreteMeasure::probability({{-1.0}, {0.0}}, {0.5, 0.5});
  CHECK_THROWS_AS(pairing(bad, mu), EvaluationError);
}

TEST_CASE("moments of point masses and symmetric pairs") {
  CHECK(moment(DiscreteMeasure::dirac({-3.0}), 1.7) ==
        doctest::Approx(std::pow(3.0, 1.7)));
  const auto pair = DiscreteMeasure::probability({{-2.0}, {2.0}}, {0.5, 0.5});
  CHECK(moment(pair, 1.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(moment(DiscreteMeasure::zero(1), 1.0), ValidationError);
  CHECK_THROWS_AS(moment(pair, 0.0), ValidationError);
}

TEST_CASE("coincident atoms merge without changing pairings") {
  const auto merged = DiscreteMeasure::probability(
      {{1.0}, {1.0 + 1e-14}, {2.0}}, {0.25, 0.25, 0.5});
  CHECK(merged.size() == 2);
  const auto f = [](const Point& x) { return std::sin(x[0]) + x[0] * x[0]; };
  const auto unmerged_value = 0.5 * f({1.0}) + 0.5 * f({2.0});
  CHECK(pairing(f, merged) == doctest::Approx(unmerged_value).epsilon(1e-12));
}

TEST_CASE("probability invariants are enforced") {
  CHECK_THROWS_AS(DiscreteMeasure::probability({{0.0}}, {0.9}), ValidationError);
  CHECK_THROWS_AS(DiscreteMeasure::probability({{0.0}, {1.0}}, {1.5, -0.5}),
                  ValidationError);
  CHECK_THROWS_AS(DiscreteMeasure({{0.0}, {1.0}}, {0.5}, MassKind::Probability),
                  StructuralError);
}

TEST_CASE("measure JSON round trip") {
  const auto mu = DiscreteMeasure::probability({{0.25}, {-1.5}, {3.0}},
                                               {0.125, 0.5, 0.375});
  const auto back = DiscreteMeasure::from_json(mu.to_json());
  CHECK(back == mu);
}

TEST_CASE("paths enforce uniform grids and matching kinds") {
  const auto mu = DiscreteMeasure::dirac({0.0});
  const MeasurePath path = MeasurePath::constant(1.0, 11, mu);
  CHECK(path.step() == doctest::Approx(0.1));
  CHECK(path.floor_index(0.0) == 0);
  CHECK(path.floor_index(0.25) == 2);
  CHECK(path.floor_index(1.0) == 10);
  CHECK(path.floor_index(0.9999999999999) == 10);

  const auto back = MeasurePath::from_json(path.to_json());
  CHECK(back.nodes() == path.nodes());
  CHECK(back.at(3) == path.at(3));

  CHECK_THROWS_AS(MeasurePath(1.0, {mu}), StructuralError);
}

TEST_CASE("coarsening preserves mass and caps the atom count") {
  std::vector<Point> atoms;
  std::vector<double> weights;
  for (int i = 0; i < 5000; ++i) {
    atoms.push_back({rng::gaussian(7, 0, static_cast<std::uint64_t>(i))});
    weights.push_back(1.0 / 5000.0);
  }
  const auto mu = DiscreteMeasure::probability(atoms, weights);
  double radius = 0.0;
  const auto binned = mu.coarsened(512, &radius);
  CHECK(binned.size() <= 512);
  CHECK(radius > 0.0);
  CHECK(binned.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(binned.mean()[0] - mu.mean()[0]) <= radius);
}

TEST_CASE("blend of paths is the node-wise convex combination") {
  const auto mu = DiscreteMeasure::dirac({0.0});
  const auto nu = DiscreteMeasure::dirac({1.0});
  const auto a = MeasurePath::constant(1.0, 3, mu);
  const auto b = MeasurePath::constant(1.0, 3, nu);
  const auto mixed = blend_paths(a, b, 0.25);
  CHECK(mixed.at(1).size() == 2);
  CHECK(mixed.at(1).weights()[0] == doctest::Approx(0.75));
  CHECK(mixed.at(1).weights()[1] == doctest::Approx(0.25));
}

TEST_SUITE_END();
