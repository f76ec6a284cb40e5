#pragma once

#include "weightflow/grid.hpp"

namespace weightflow {

// 1e-12 times the uniform density level 1 / area.
double default_floor(const Grid2D& grid);

// V = -log(max(P, floor)).
PotentialField potential_from_density(const Density& d, double floor);
inline PotentialField potential_from_density(const Density& d) { return potential_from_density(d, default_floor(d.grid())); }

// exp(-V), normalized to unit mass.
Density density_from_potential(const PotentialField& v);

// -grad V: central differences inside, second-order one-sided differences
// on boundary cells. Needs at least 3 cells per axis.
VectorField score_field(const PotentialField& v);

}  // namespace weightflow
