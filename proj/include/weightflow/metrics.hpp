#pragma once

#include "weightflow/grid.hpp"

namespace weightflow {

// Mean squared difference over the flattened cell values.
double grid_mse(const Density& a, const Density& b);

// Pearson correlation over the flattened cell values. Throws DegenerateInput
// when either field is constant.
double grid_pearson(const Density& a, const Density& b);

}  // namespace weightflow
