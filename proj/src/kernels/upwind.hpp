#pragma once

// Van Leer limited upwind face value. `up` is the upwind cell, `back` the cell
// behind it and `down` the cell across the face. The result lies between
// `up` and `down` and never exceeds 2 * up, which keeps the explicit step
// positive under the outflow bound in cfl_ratios.

namespace weightflow::kernels::detail {

inline double van_leer_face(double back, double up, double down) {
    const double a = up - back, b = down - up;
    if (a * b <= 0.0) return up;
    return up + a * b / (a + b);
}

}  // namespace weightflow::kernels::detail
