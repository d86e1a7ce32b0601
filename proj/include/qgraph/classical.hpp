#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/observable.hpp"
#include "qgraph/stochastic_matrix.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace qgraph {

/// Cap on enumerated paths per computation; exceeded -> ResourceError.
struct PathBudget {
    std::int64_t max_paths = 10'000'000;
};

/// Depth-first enumeration of all geometry-compatible paths with `edges`
/// transitions starting at `start` (columns in ascending order, so results
/// are reproducible).  The callback receives the path (atom indices) and
/// the exact product of transition probabilities along it.
template <class Leaf>
void for_each_path(const StochasticMatrix& b, std::int64_t start, int edges,
                   const PathBudget& budget, std::int64_t& paths_used, Leaf&& leaf) {
    std::vector<std::int64_t> path(static_cast<std::size_t>(edges) + 1);
    std::vector<Rational> prefix(static_cast<std::size_t>(edges) + 1);
    path[0] = start;
    prefix[0] = 1;

    const std::function<void(int)> recurse = [&](int depth) {
        if (depth == edges) {
            if (++paths_used > budget.max_paths)
                throw ResourceError("path enumeration exceeded the budget of " +
                                    std::to_string(budget.max_paths) + " paths");
            leaf(std::span<const std::int64_t>(path.data(), path.size()),
                 prefix[static_cast<std::size_t>(edges)]);
            return;
        }
        const auto d = static_cast<std::size_t>(depth);
        for (const auto& [col, value] : b.row(path[d])) {
            path[d + 1] = col;
            prefix[d + 1] = prefix[d] * value;
            recurse(depth + 1);
        }
    };
    recurse(0);
}

/// Time-averaged classical variance of the discretized observable,
///   V_T = E[ (T^-1 sum_{t=1..T} phi_hat(S^t x) - E phi_hat)^2 ],
/// computed as an exact sum over length-T paths: each path contributes its
/// cylinder measure (1/M times the product of transition probabilities)
/// weighted by the squared centered trajectory average.
inline double classical_time_variance(const StochasticMatrix& b, const Observable& o, int horizon,
                                      const PathBudget& budget = {}) {
    if (horizon < 1) throw DomainError("classical_time_variance: T must be >= 1");
    if (b.size() != o.size())
        throw ContractError("classical_time_variance: observable built on a different partition");
    const double mean = o.mean();
    const double inv_m = 1.0 / static_cast<double>(b.size());
    double acc = 0.0;
    std::int64_t used = 0;
    for (std::int64_t start = 1; start <= b.size(); ++start) {
        for_each_path(b, start, horizon, budget, used,
                      [&](std::span<const std::int64_t> path, const Rational& product) {
                          double phi = 0.0;
                          for (int t = 1; t <= horizon; ++t)
                              phi += o.entry(path[static_cast<std::size_t>(t)]);
                          phi = phi / horizon - mean;
                          acc += phi * phi * to_double(product) * inv_m;
                      });
    }
    return acc;
}

inline double classical_time_variance(const PiecewiseLinearMap& map, const Partition& partition,
                                      const Observable& o, int horizon,
                                      const PathBudget& budget = {}) {
    return classical_time_variance(transition_matrix(map, partition), o, horizon, budget);
}

}  // namespace qgraph
