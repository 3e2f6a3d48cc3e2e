#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gplab {

/// y = A x for a real symmetric A given only through its action.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

struct LanczosOptions {
    /// Basis vectors kept per restart cycle (full reorthogonalisation).
    int krylov_dim = 60;
    /// Converged once ‖Ax - θx‖ ≤ tol·max(1, |θ|) for the unit Ritz vector x.
    double tol = 1e-10;
    int max_matvecs = 20000;
};

struct LanczosResult {
    double eigenvalue = 0.0;
    std::vector<double> vector;  // unit Euclidean norm
    double residual = 0.0;       // ‖Ax - θx‖
    int matvecs = 0;
    int restarts = 0;
    bool converged = false;
};

/// Lowest eigenpair by explicitly restarted Lanczos with full classical
/// Gram-Schmidt reorthogonalisation (repeated once when needed). Each cycle
/// restarts from the current lowest Ritz vector.
LanczosResult lanczos_lowest(const LinearOperator& op, std::vector<double> start,
                             const LanczosOptions& opts = {});

}  // namespace gplab
