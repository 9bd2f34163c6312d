#pragma once

#include "kineq/measure.hpp"

namespace kineq {

/// Bounded-Lipschitz (flat) distance between discrete measures:
///   sup { (f, mu - nu) : |f(x_i)| <= 1, |f(x_i)-f(x_j)| <= |x_i-x_j| }
/// over the union support. Solved exactly: in 1-d by a concave
/// piecewise-linear dynamic program over the sorted support, otherwise via
/// the transportation dual (min-cost flow with unit-cost mass disposal).
/// A metric on probability measures; at most 2 for any probability pair.
double flat_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// sup over grid nodes of flat_distance; grids must match.
double path_distance(const MeasurePath& xi, const MeasurePath& eta);

}  // namespace kineq
