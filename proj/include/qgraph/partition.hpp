#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/interval_map.hpp"
#include "qgraph/rational.hpp"

#include <cstdint>
#include <set>
#include <vector>

namespace qgraph {

/// Level-n uniform partition of [0,1] into M_n = M0 * p^n equal atoms
/// E_j = ((j-1)/M, j/M], j = 1..M.  Atoms are implicit (index plus grid);
/// only the counters are stored.  Immutable.
class Partition {
  public:
    Partition(int level, std::int64_t atom_count, int primary_atom_count)
        : level_(level), atom_count_(atom_count), primary_atom_count_(primary_atom_count) {}

    int level() const { return level_; }
    std::int64_t atom_count() const { return atom_count_; }
    int primary_atom_count() const { return primary_atom_count_; }
    Rational atom_measure() const { return Rational(1, atom_count_); }

    /// k-th grid point, k = 0..M.
    Rational endpoint(std::int64_t k) const { return Rational(k, atom_count_); }

    Rational atom_left(std::int64_t j) const { return Rational(j - 1, atom_count_); }
    Rational atom_right(std::int64_t j) const { return Rational(j, atom_count_); }
    Rational atom_midpoint(std::int64_t j) const { return Rational(2 * j - 1, 2 * atom_count_); }

    /// Index j with x in ((j-1)/M, j/M]; grid points belong to the atom on
    /// their left, except x = 0 which maps to atom 1.
    std::int64_t atom_index(const Rational& x) const {
        if (x < 0 || x > 1) throw DomainError("atom_index: x outside [0,1]");
        if (x == 0) return 1;
        return ceil_rational(x * atom_count_).convert_to<std::int64_t>();
    }

  private:
    int level_;
    std::int64_t atom_count_;
    int primary_atom_count_;
};

namespace detail {

/// All exact preimages of y under the map (one per branch whose closed
/// domain solves slope*x + intercept = y inside it).
inline std::vector<Rational> preimages(const PiecewiseLinearMap& map, const Rational& y) {
    std::vector<Rational> result;
    for (const auto& b : map.branches()) {
        const Rational x = (y - b.intercept) / b.slope;
        if (x >= b.left && x <= b.right) result.push_back(x);
    }
    return result;
}

}  // namespace detail

/// Builds the level-n refinement with M_n = M0 * p^n atoms, p = lcm|slopes|,
/// then verifies exactly that (a) the grid is forward-invariant under S and
/// (b) it contains every j-th preimage of the primary endpoints, j = 1..n.
/// Throws ConstructionError naming the violated condition.
inline Partition build_partition(const PiecewiseLinearMap& map, int level) {
    if (level < 0) throw DomainError("partition level must be nonnegative");
    const std::int64_t p = map.lcm_slopes();
    Integer m = map.primary_atom_count();
    for (int i = 0; i < level; ++i) {
        m *= p;
        if (m > Integer(1) << 40)
            throw ResourceError("partition too fine: M_n exceeds 2^40 atoms");
    }
    const std::int64_t atom_count = m.convert_to<std::int64_t>();
    const Integer grid = atom_count;

    // (a) forward invariance of the grid: both one-sided images of every
    // grid point land on the grid.
    for (std::int64_t k = 0; k <= atom_count; ++k) {
        const Rational e(k, atom_count);
        for (const auto& b : map.branches()) {
            if (e < b.left || e > b.right) continue;
            const Rational image = b.slope * e + b.intercept;
            if (!on_uniform_grid(image, grid))
                throw ConstructionError(
                    "partition verification failed: grid is not forward-invariant at " +
                    format_rational(e) + " (image " + format_rational(image) + ")");
        }
    }

    // (b) preimage containment: S^{-j}(primary endpoints) on the grid for j <= n.
    std::set<Rational> current;
    for (int k = 0; k <= map.primary_atom_count(); ++k)
        current.insert(Rational(k, map.primary_atom_count()));
    for (int depth = 1; depth <= level; ++depth) {
        std::set<Rational> next;
        for (const auto& y : current)
            for (const auto& x : detail::preimages(map, y)) next.insert(x);
        for (const auto& x : next)
            if (!on_uniform_grid(x, grid))
                throw ConstructionError("partition verification failed: preimage " +
                                        format_rational(x) + " of order " +
                                        std::to_string(depth) + " is off the grid");
        current = std::move(next);
    }

    return Partition(level, atom_count, map.primary_atom_count());
}

}  // namespace qgraph
