#pragma once

#include "qgraph/interval_map.hpp"

namespace qgraph {

/// S(x) = 2x mod 1.  Two branches of slope 2; p = 2.
inline PiecewiseLinearMap make_doubling_map() {
    return PiecewiseLinearMap(2, {{2, Rational(0)}, {2, Rational(-1)}});
}

/// Tent map with slope 2: x -> 2x on [0,1/2], 2 - 2x on [1/2,1].
inline PiecewiseLinearMap make_tent_map() {
    return PiecewiseLinearMap(2, {{2, Rational(0)}, {-2, Rational(2)}});
}

/// S(x) = 3x mod 1.  Three branches of slope 3; classes of size 3.
inline PiecewiseLinearMap make_tripling_map() {
    return PiecewiseLinearMap(3, {{3, Rational(0)}, {3, Rational(-1)}, {3, Rational(-2)}});
}

inline PiecewiseLinearMap make_builtin_map(const std::string& name) {
    if (name == "doubling") return make_doubling_map();
    if (name == "tent") return make_tent_map();
    if (name == "tripling") return make_tripling_map();
    throw ConfigError("unknown builtin map '" + name + "' (have: doubling, tent, tripling)");
}

}  // namespace qgraph
