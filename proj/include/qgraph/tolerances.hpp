#pragma once

#include "qgraph/errors.hpp"

#include <cstdint>

namespace qgraph {

/// Numerical tolerances used by construction-time invariant checks.
/// Overrides may only tighten the defaults.
struct Tolerances {
    double unitarity = 1e-10;          // ||U^dag U - I||_max
    double moduli = 1e-12;             // | |U_jk|^2 - B_jk | entrywise
    double spectral_residual = 1e-8;   // ||U psi - lambda psi||
    double orthonormality = 1e-8;      // ||Psi^dag Psi - I||_max
    double mean_identity = 1e-10;      // quantum mean vs M^-1 Tr O
    double diag_match = 1e-10;         // Egorov diagonal, trajectory totals
    double off_block = 1e-12;          // entries outside equivalence-class blocks
    double quadrature = 1e-10;         // user-table atom-average error estimate
    double root = 1e-10;               // metric-graph eigenvalue bisection width

    /// Exact-identity checks (majorant, diagonal term, classical variance):
    /// 1e-9 up to M = 2048, growing linearly with dimension beyond.
    double exact_identity(std::int64_t m) const {
        return m <= 2048 ? 1e-9 : static_cast<double>(m) * 1e-12;
    }

    void tighten_unitarity(double v) { unitarity = checked(v, unitarity, "unitarity"); }
    void tighten_moduli(double v) { moduli = checked(v, moduli, "moduli"); }
    void tighten_spectral_residual(double v) {
        spectral_residual = checked(v, spectral_residual, "spectral_residual");
    }
    void tighten_root(double v) { root = checked(v, root, "root"); }

  private:
    static double checked(double v, double current, const char* name) {
        if (!(v > 0.0) || v > current)
            throw ConfigError(std::string("tolerance override for '") + name +
                              "' must be positive and no looser than the default");
        return v;
    }
};

}  // namespace qgraph
