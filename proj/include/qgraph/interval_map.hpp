#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/rational.hpp"

#include <json.hpp>

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace qgraph {

/// One affine piece of the map: S(x) = slope*x + intercept on (left, right).
struct Branch {
    Rational left;
    Rational right;
    std::int64_t slope = 0;
    Rational intercept;

    Rational image_low() const {
        const Rational a = slope * left + intercept;
        const Rational b = slope * right + intercept;
        return a < b ? a : b;
    }
    Rational image_high() const {
        const Rational a = slope * left + intercept;
        const Rational b = slope * right + intercept;
        return a < b ? b : a;
    }
};

/// A Lebesgue-measure-preserving candidate map of [0,1]: piecewise linear
/// with integer slopes, one branch per atom of the uniform primary
/// partition into M0 equal pieces.  Immutable after construction.
///
/// Construction enforces the structural invariants (branches tile [0,1]
/// with width exactly 1/M0, nonzero integer slopes, image inside [0,1]).
/// Whether the map actually preserves Lebesgue measure and keeps the
/// primary endpoint set forward-invariant is reported by validate_map,
/// not thrown.
class PiecewiseLinearMap {
  public:
    struct BranchSpec {
        std::int64_t slope = 0;
        Rational intercept;
    };

    PiecewiseLinearMap(int primary_atom_count, const std::vector<BranchSpec>& specs)
        : m0_(primary_atom_count) {
        if (m0_ <= 0) throw DomainError("primary atom count M0 must be positive");
        if (specs.size() != static_cast<std::size_t>(m0_))
            throw DomainError("a map needs exactly M0 branches, one per primary atom");
        branches_.reserve(specs.size());
        for (int k = 0; k < m0_; ++k) {
            Branch b;
            b.left = Rational(k, m0_);
            b.right = Rational(k + 1, m0_);
            b.slope = specs[k].slope;
            b.intercept = specs[k].intercept;
            if (b.slope == 0)
                throw DomainError("branch " + std::to_string(k + 1) + " has zero slope");
            if (b.image_low() < 0 || b.image_high() > 1)
                throw DomainError("branch " + std::to_string(k + 1) +
                                  " maps outside [0,1]: image [" + format_rational(b.image_low()) +
                                  ", " + format_rational(b.image_high()) + "]");
            branches_.push_back(std::move(b));
        }
    }

    int primary_atom_count() const { return m0_; }
    const std::vector<Branch>& branches() const { return branches_; }

    /// lcm of |slope| over all branches; the refinement ratio p.
    std::int64_t lcm_slopes() const {
        std::int64_t p = 1;
        for (const auto& b : branches_) p = std::lcm(p, b.slope < 0 ? -b.slope : b.slope);
        return p;
    }

    /// Index (1-based) of the branch used to evaluate at x.  Interior
    /// breakpoints resolve to the right-adjacent branch; x = 1 uses the
    /// last branch, so evaluation is total on [0,1].
    int branch_index_at(const Rational& x) const {
        if (x < 0 || x > 1) throw DomainError("evaluate: x outside [0,1]");
        if (x == 1) return m0_;
        // x in [k/M0, (k+1)/M0)  =>  k = floor(x*M0)
        const Integer k = floor_rational(x * m0_);
        return k.convert_to<int>() + 1;
    }

    /// S(x), exactly.
    Rational evaluate(const Rational& x) const {
        const Branch& b = branches_[static_cast<std::size_t>(branch_index_at(x) - 1)];
        return b.slope * x + b.intercept;
    }

    static PiecewiseLinearMap from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("M0") || !j.contains("branches"))
            throw ConfigError("map file must be an object with fields 'M0' and 'branches'");
        const int m0 = j.at("M0").get<int>();
        std::vector<BranchSpec> specs;
        for (const auto& jb : j.at("branches")) {
            BranchSpec s;
            s.slope = jb.at("slope").get<std::int64_t>();
            s.intercept = parse_rational(jb.at("intercept").get<std::string>());
            specs.push_back(std::move(s));
        }
        return PiecewiseLinearMap(m0, specs);
    }

    nlohmann::json to_json() const {
        nlohmann::json jb = nlohmann::json::array();
        for (const auto& b : branches_)
            jb.push_back({{"slope", b.slope}, {"intercept", format_rational(b.intercept)}});
        return {{"M0", m0_}, {"branches", std::move(jb)}};
    }

  private:
    int m0_;
    std::vector<Branch> branches_;
};

/// Outcome of the measure-preservation and endpoint-invariance checks.
struct ValidationReport {
    bool measure_preserving = false;
    bool endpoints_forward_invariant = false;
    std::vector<std::int64_t> slopes;
    std::int64_t lcm_slope = 1;
    std::vector<std::string> failures;

    bool ok() const { return failures.empty(); }
};

/// Checks, in exact rational arithmetic, that the map preserves Lebesgue
/// measure (per primary atom: total preimage measure equals the atom
/// measure) and that S maps primary endpoints to primary endpoints (both
/// one-sided limits at interior breakpoints).
inline ValidationReport validate_map(const PiecewiseLinearMap& map) {
    ValidationReport report;
    const int m0 = map.primary_atom_count();
    for (const auto& b : map.branches()) report.slopes.push_back(b.slope);
    report.lcm_slope = map.lcm_slopes();

    report.measure_preserving = true;
    for (int k = 1; k <= m0; ++k) {
        const Rational a(k - 1, m0);
        const Rational c(k, m0);
        Rational preimage_measure = 0;
        for (const auto& b : map.branches()) {
            const Rational lo = b.image_low() > a ? b.image_low() : a;
            const Rational hi = b.image_high() < c ? b.image_high() : c;
            if (hi > lo) {
                const std::int64_t s = b.slope < 0 ? -b.slope : b.slope;
                preimage_measure += (hi - lo) / s;
            }
        }
        if (preimage_measure != Rational(1, m0)) {
            report.measure_preserving = false;
            report.failures.push_back("atom " + std::to_string(k) + ": preimage measure " +
                                      format_rational(preimage_measure) + " != " +
                                      format_rational(Rational(1, m0)));
        }
    }

    report.endpoints_forward_invariant = true;
    const Integer grid = m0;
    for (int k = 0; k <= m0; ++k) {
        const Rational e(k, m0);
        // one-sided limits: branch ending at e and branch starting at e
        for (const auto& b : map.branches()) {
            if (b.left != e && b.right != e) continue;
            const Rational image = b.slope * e + b.intercept;
            if (!on_uniform_grid(image, grid)) {
                report.endpoints_forward_invariant = false;
                report.failures.push_back("endpoint " + format_rational(e) + " maps to " +
                                          format_rational(image) +
                                          " which is not a primary endpoint");
            }
        }
    }

    return report;
}

}  // namespace qgraph
