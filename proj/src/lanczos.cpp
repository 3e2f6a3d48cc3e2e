#include "gplab/lanczos.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "gplab/error.hpp"
#include "gplab/summation.hpp"

namespace gplab {

namespace {

double norm(std::span<const double> v) { return std::sqrt(pairwise_dot(v, v)); }

void scale(std::span<double> v, double s) {
    for (auto& x : v) x *= s;
}

// w -= Σ_i (v_i·w) v_i; a second pass runs only when the first removed most
// of w (Daniel-Gragg-Kaufman-Stewart criterion).
void reorthogonalize(const std::vector<std::vector<double>>& basis, std::span<double> w) {
    std::vector<double> coef(basis.size());
    double before = norm(w);
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < basis.size(); ++i) coef[i] = pairwise_dot(basis[i], w);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const double c = coef[i];
            const auto& v = basis[i];
            for (std::size_t t = 0; t < w.size(); ++t) w[t] -= c * v[t];
        }
        const double after = norm(w);
        if (after > 0.7071 * before) break;
        before = after;
    }
}

}  // namespace

LanczosResult lanczos_lowest(const LinearOperator& op, std::vector<double> start, const LanczosOptions& opts) {
    const std::size_t dim = start.size();
    if (dim == 0) throw InvalidArgument("lanczos: empty start vector");
    if (opts.krylov_dim < 2) throw InvalidArgument("lanczos: Krylov dimension must be >= 2");
    const double n0 = norm(start);
    if (!(n0 > 0.0) || !std::isfinite(n0)) throw InvalidArgument("lanczos: start vector must be nonzero and finite");
    scale(start, 1.0 / n0);

    const int k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(opts.krylov_dim), dim));
    LanczosResult res;
    std::vector<double> x = std::move(start);
    std::vector<double> w(dim);
    std::vector<std::vector<double>> basis;
    basis.reserve(static_cast<std::size_t>(k));

    while (true) {
        basis.clear();
        basis.push_back(x);
        std::vector<double> alpha, beta;
        for (int j = 0; j < k; ++j) {
            op(basis[j], w);
            ++res.matvecs;
            const double a = pairwise_dot(basis[j], w);
            if (j == 0) {
                // True residual of the restart vector.
                double r2 = 0.0;
                {
                    std::vector<double> r(w);
                    for (std::size_t t = 0; t < dim; ++t) r[t] -= a * x[t];
                    r2 = norm(r);
                }
                res.eigenvalue = a;
                res.residual = r2;
                if (r2 <= opts.tol * std::max(1.0, std::abs(a))) {
                    res.converged = true;
                    res.vector = std::move(x);
                    return res;
                }
                if (res.matvecs >= opts.max_matvecs) {
                    res.vector = std::move(x);
                    return res;
                }
            }
            alpha.push_back(a);
            const auto& vj = basis[j];
            if (j == 0) {
                for (std::size_t t = 0; t < dim; ++t) w[t] -= a * vj[t];
            } else {
                const auto& vp = basis[j - 1];
                const double b = beta.back();
                for (std::size_t t = 0; t < dim; ++t) w[t] -= a * vj[t] + b * vp[t];
            }
            reorthogonalize(basis, w);
            const double b = norm(w);
            if (j + 1 == k || res.matvecs >= opts.max_matvecs || b <= 1e-14 * std::max(1.0, std::abs(a))) break;
            beta.push_back(b);
            basis.emplace_back(w.begin(), w.end());
            scale(basis.back(), 1.0 / b);
        }

        const int m = static_cast<int>(alpha.size());
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            t(i, i) = alpha[i];
            if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        const Eigen::VectorXd y = es.eigenvectors().col(0);
        std::fill(x.begin(), x.end(), 0.0);
        for (int i = 0; i < m; ++i) {
            const double c = y(i);
            const auto& v = basis[i];
            for (std::size_t s = 0; s < dim; ++s) x[s] += c * v[s];
        }
        scale(x, 1.0 / norm(x));
        ++res.restarts;
        if (res.matvecs >= opts.max_matvecs) {
            // One more application to report an honest residual.
            op(x, w);
            ++res.matvecs;
            const double a = pairwise_dot(x, w);
            for (std::size_t t = 0; t < dim; ++t) w[t] -= a * x[t];
            res.eigenvalue = a;
            res.residual = norm(w);
            res.converged = res.residual <= opts.tol * std::max(1.0, std::abs(a));
            res.vector = std::move(x);
            return res;
        }
    }
}

}  // namespace gplab
