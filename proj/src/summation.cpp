#include "gplab/summation.hpp"

#include <stdexcept>

namespace gplab {

double pairwise_sum(std::span<const double> values) {
    return pairwise_reduce(values.size(), [&](std::size_t i) { return values[i]; });
}

double pairwise_dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("pairwise_dot: size mismatch");
    return pairwise_reduce(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

}  // namespace gplab
