#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qgraph {

/// Exact arbitrary-precision arithmetic for everything on the classical
/// side (maps, partitions, transition matrices, path measures).  Floating
/// point enters only at quantization.
using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) { return q.template convert_to<double>(); }

/// Parses "p/q" or "p" (decimal integers, optional leading '-').
inline Rational parse_rational(std::string_view text) {
    const auto bad = [&] {
        throw std::invalid_argument("not a rational 'p/q': '" + std::string(text) + "'");
    };
    if (text.empty()) bad();
    const auto slash = text.find('/');
    try {
        if (slash == std::string_view::npos) return Rational(Integer(std::string(text)));
        const Integer num{std::string(text.substr(0, slash))};
        const Integer den{std::string(text.substr(slash + 1))};
        if (den == 0) bad();
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        bad();
    }
    return Rational(0);  // unreachable
}

/// Canonical "p/q" form (denominator always present and positive).
inline std::string format_rational(const Rational& q) {
    return numerator(q).str() + "/" + denominator(q).str();
}

/// Floor of p/q for exact grid arithmetic.
inline Integer floor_rational(const Rational& q) {
    Integer quo = numerator(q) / denominator(q);
    if (numerator(q) < 0 && quo * denominator(q) != numerator(q)) --quo;
    return quo;
}

inline Integer ceil_rational(const Rational& q) {
    Integer quo = numerator(q) / denominator(q);
    if (numerator(q) > 0 && quo * denominator(q) != numerator(q)) ++quo;
    return quo;
}

/// True iff q is an integer multiple of 1/grid_size inside [0,1].
inline bool on_uniform_grid(const Rational& q, const Integer& grid_size) {
    if (q < 0 || q > 1) return false;
    const Rational scaled = q * grid_size;
    return denominator(scaled) == 1;
}

}  // namespace qgraph
