#pragma once

#include <cstddef>
#include <span>

namespace gplab {

// Fixed-order pairwise reduction. Every reduction in the library goes through
// these so that results do not depend on evaluation order or thread count.

double pairwise_sum(std::span<const double> values);

/// Σ a[i]·b[i], summed pairwise.
double pairwise_dot(std::span<const double> a, std::span<const double> b);

/// Σ f(i) for i in [0, n), summed pairwise in index order.
template <class F>
double pairwise_reduce(std::size_t n, F&& term) {
    constexpr std::size_t kLeaf = 16;
    if (n <= kLeaf) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += term(i);
        return s;
    }
    // Recursion on [lo, hi) with a leaf block; depth is log2(n/kLeaf).
    struct Rec {
        F& f;
        double operator()(std::size_t lo, std::size_t hi) const {
            if (hi - lo <= kLeaf) {
                double s = 0.0;
                for (std::size_t i = lo; i < hi; ++i) s += f(i);
                return s;
            }
            const std::size_t mid = lo + (hi - lo) / 2;
            return (*this)(lo, mid) + (*this)(mid, hi);
        }
    };
    return Rec{term}(0, n);
}

}  // namespace gplab
