#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/interval_map.hpp"
#include "qgraph/partition.hpp"
#include "qgraph/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace qgraph {

/// Discretized Frobenius-Perron operator: B_jk is the fraction of atom E_j
/// mapped by S into E_k, held as exact rationals.  Stored sparse by row;
/// each row has |slope over E_j| nonzero entries regardless of level, while
/// the dimension grows geometrically.  Doubly stochastic by construction
/// (verified exactly before an instance can exist).  Indices are 1-based.
class StochasticMatrix {
  public:
    using Row = std::vector<std::pair<std::int64_t, Rational>>;  // (col, value), sorted

    StochasticMatrix(std::vector<Row> rows, std::vector<std::int64_t> row_slopes)
        : rows_(std::move(rows)), row_slopes_(std::move(row_slopes)) {
        verify();
    }

    std::int64_t size() const { return static_cast<std::int64_t>(rows_.size()); }

    const Row& row(std::int64_t j) const { return rows_.at(static_cast<std::size_t>(j - 1)); }

    /// |slope| over atom E_j; every nonzero entry of row j equals 1/|s(j)|.
    std::int64_t row_slope(std::int64_t j) const {
        return row_slopes_.at(static_cast<std::size_t>(j - 1));
    }

    Rational entry(std::int64_t j, std::int64_t k) const {
        const Row& r = row(j);
        auto it = std::lower_bound(r.begin(), r.end(), k,
                                   [](const auto& e, std::int64_t col) { return e.first < col; });
        if (it != r.end() && it->first == k) return it->second;
        return Rational(0);
    }

    std::vector<std::int64_t> row_support(std::int64_t j) const {
        std::vector<std::int64_t> cols;
        for (const auto& [col, value] : row(j)) cols.push_back(col);
        return cols;
    }

    Rational row_sum(std::int64_t j) const {
        Rational s = 0;
        for (const auto& [col, value] : row(j)) s += value;
        return s;
    }

    std::vector<Rational> column_sums() const {
        std::vector<Rational> sums(static_cast<std::size_t>(size()), Rational(0));
        for (const auto& r : rows_)
            for (const auto& [col, value] : r) sums[static_cast<std::size_t>(col - 1)] += value;
        return sums;
    }

  private:
    void verify() const {
        const std::int64_t m = size();
        for (std::int64_t j = 1; j <= m; ++j) {
            if (row_sum(j) != 1)
                throw ContractError("row " + std::to_string(j) + " of B does not sum to 1");
            const Rational expected(1, row_slope(j));
            for (const auto& [col, value] : row(j)) {
                if (col < 1 || col > m)
                    throw ContractError("column index out of range in row " + std::to_string(j));
                if (value != expected)
                    throw ContractError("entry B[" + std::to_string(j) + "," +
                                        std::to_string(col) + "] = " + format_rational(value) +
                                        " != 1/|s(j)| = " + format_rational(expected));
            }
        }
        const auto cols = column_sums();
        for (std::int64_t k = 1; k <= m; ++k)
            if (cols[static_cast<std::size_t>(k - 1)] != 1)
                throw ContractError("column " + std::to_string(k) + " of B does not sum to 1");
    }

    std::vector<Row> rows_;
    std::vector<std::int64_t> row_slopes_;
};

/// B_jk = mu(E_j intersect S^-1(E_k)) / mu(E_j), by exact interval
/// intersection of S(E_j) with the level grid.
inline StochasticMatrix transition_matrix(const PiecewiseLinearMap& map,
                                          const Partition& partition) {
    if (partition.primary_atom_count() != map.primary_atom_count())
        throw ContractError("partition was built for a different map");
    const std::int64_t m = partition.atom_count();
    std::vector<StochasticMatrix::Row> rows(static_cast<std::size_t>(m));
    std::vector<std::int64_t> slopes(static_cast<std::size_t>(m));

    for (std::int64_t j = 1; j <= m; ++j) {
        const Rational left = partition.atom_left(j);
        const Rational right = partition.atom_right(j);
        const int bi = map.branch_index_at(left);  // E_j lies inside one branch
        const Branch& b = map.branches()[static_cast<std::size_t>(bi - 1)];
        if (right > b.right)
            throw ContractError("atom " + std::to_string(j) + " straddles a branch boundary");
        const std::int64_t abs_slope = b.slope < 0 ? -b.slope : b.slope;
        slopes[static_cast<std::size_t>(j - 1)] = abs_slope;

        const Rational y1 = b.slope * left + b.intercept;
        const Rational y2 = b.slope * right + b.intercept;
        const Rational lo = y1 < y2 ? y1 : y2;
        const Rational hi = y1 < y2 ? y2 : y1;

        const std::int64_t k_first =
            (floor_rational(lo * m) + 1).convert_to<std::int64_t>();
        const std::int64_t k_last = ceil_rational(hi * m).convert_to<std::int64_t>();
        StochasticMatrix::Row row;
        for (std::int64_t k = k_first; k <= k_last; ++k) {
            const Rational a = partition.atom_left(k);
            const Rational c = partition.atom_right(k);
            const Rational seg_lo = lo > a ? lo : a;
            const Rational seg_hi = hi < c ? hi : c;
            if (seg_hi > seg_lo) row.emplace_back(k, (seg_hi - seg_lo) * m / abs_slope);
        }
        rows[static_cast<std::size_t>(j - 1)] = std::move(row);
    }
    return StochasticMatrix(std::move(rows), std::move(slopes));
}

/// Product of transition probabilities along a path of atoms.  Equals the
/// relative measure of the cylinder set visiting those atoms in order.
/// A single-atom path is the empty product, 1.
inline Rational path_measure(const StochasticMatrix& b, std::span<const std::int64_t> path) {
    if (path.empty()) throw DomainError("path_measure: path must contain at least one atom");
    for (const std::int64_t j : path)
        if (j < 1 || j > b.size()) throw DomainError("path_measure: atom index out of range");
    Rational product = 1;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        product *= b.entry(path[i], path[i + 1]);
        if (product == 0) return product;
    }
    return product;
}

inline Rational path_measure(const StochasticMatrix& b,
                             std::initializer_list<std::int64_t> path) {
    return path_measure(b, std::span<const std::int64_t>(path.begin(), path.size()));
}

/// Atoms grouped by the relation "S(E_j) intersects S(E_k)", closed
/// transitively.  These classes are the vertices of the quantum graph; the
/// matrix B restricted to a class's rows and its column support is a square
/// doubly stochastic block.
struct EquivalenceClasses {
    /// Sorted members, classes ordered by smallest member.  1-based atoms.
    std::vector<std::vector<std::int64_t>> classes;
    /// Atom (1-based) -> class id (0-based position in `classes`).
    std::vector<std::size_t> class_of;
    /// Per class: sorted union of the members' row supports.
    std::vector<std::vector<std::int64_t>> column_support;
    /// Per class: true iff all member rows have identical support and all
    /// entries equal 1/|class| (the equal-slope situation; what the Fourier
    /// phase scheme requires).
    std::vector<bool> uniform_block;

    std::size_t class_id(std::int64_t atom) const {
        return class_of.at(static_cast<std::size_t>(atom - 1));
    }

    std::int64_t max_class_size() const {
        std::size_t best = 0;
        for (const auto& c : classes) best = std::max(best, c.size());
        return static_cast<std::int64_t>(best);
    }
};

inline EquivalenceClasses equivalence_classes(const StochasticMatrix& b) {
    const std::int64_t m = b.size();
    std::vector<std::int64_t> parent(static_cast<std::size_t>(m));
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](std::int64_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    const auto unite = [&](std::int64_t x, std::int64_t y) {
        x = find(x);
        y = find(y);
        if (x != y) parent[static_cast<std::size_t>(std::max(x, y))] = std::min(x, y);
    };

    // rows sharing any image atom are equivalent
    std::vector<std::int64_t> column_owner(static_cast<std::size_t>(m), -1);
    for (std::int64_t j = 1; j <= m; ++j)
        for (const auto& [col, value] : b.row(j)) {
            auto& owner = column_owner[static_cast<std::size_t>(col - 1)];
            if (owner < 0)
                owner = j - 1;
            else
                unite(owner, j - 1);
        }

    std::map<std::int64_t, std::vector<std::int64_t>> grouped;
    for (std::int64_t j = 0; j < m; ++j) grouped[find(j)].push_back(j + 1);

    EquivalenceClasses result;
    result.class_of.resize(static_cast<std::size_t>(m));
    for (auto& [root, members] : grouped) {
        const std::size_t id = result.classes.size();
        for (const std::int64_t atom : members)
            result.class_of[static_cast<std::size_t>(atom - 1)] = id;

        std::vector<std::int64_t> support;
        bool uniform = true;
        const auto& first_row = b.row(members.front());
        const Rational expected(1, static_cast<std::int64_t>(members.size()));
        for (const std::int64_t atom : members) {
            const auto& row = b.row(atom);
            if (row.size() != first_row.size()) uniform = false;
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (uniform &&
                    (row[i].first != first_row[i].first || row[i].second != expected))
                    uniform = false;
                support.push_back(row[i].first);
            }
        }
        std::sort(support.begin(), support.end());
        support.erase(std::unique(support.begin(), support.end()), support.end());

        result.classes.push_back(std::move(members));
        result.column_support.push_back(std::move(support));
        result.uniform_block.push_back(uniform);
    }
    return result;
}

}  // namespace qgraph
