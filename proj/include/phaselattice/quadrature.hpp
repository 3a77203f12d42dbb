#pragma once

#include <vector>

namespace phaselattice {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

/// Supported orders: 8, 12, 16, 20, 24, 32, 48, 64.
const GaussRule& gauss_legendre(int points);

struct Nodes {
    std::vector<double> x;
    std::vector<double> w;
    void clear() { x.clear(); w.clear(); }
    std::size_t size() const { return x.size(); }
};

/// Appends a composite rule over [lo, hi] using panels of width at most max_width.
void append_composite(Nodes& out, double lo, double hi, double max_width, int points);

/// Composite rule over consecutive break points, each interval split into panels of width at most max_width.
Nodes composite(const std::vector<double>& breaks, double max_width, int points);

}  // namespace phaselattice
