#include "phaselattice/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace phaselattice {

namespace {

template <unsigned P>
GaussRule make_rule()
{
    using G = boost::math::quadrature::gauss<double, P>;
    const auto& ab = G::abscissa();
    const auto& wt = G::weights();
    GaussRule r;
    for (std::size_t i = 0; i < ab.size(); ++i) {
        if (ab[i] == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(wt[i]);
            continue;
        }
        r.x.push_back(-ab[i]);
        r.w.push_back(wt[i]);
        r.x.push_back(ab[i]);
        r.w.push_back(wt[i]);
    }
    return r;
}

}  // namespace

const GaussRule& gauss_legendre(int points)
{
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(points);
    if (it != cache.end())
        return it->second;
    GaussRule r;
    switch (points) {
    case 8: r = make_rule<8>(); break;
    case 12: r = make_rule<12>(); break;
    case 16: r = make_rule<16>(); break;
    case 20: r = make_rule<20>(); break;
    case 24: r = make_rule<24>(); break;
    case 32: r = make_rule<32>(); break;
    case 48: r = make_rule<48>(); break;
    case 64: r = make_rule<64>(); break;
    default: throw std::invalid_argument("unsupported Gauss-Legendre order");
    }
    return cache.emplace(points, std::move(r)).first->second;
}

void append_composite(Nodes& out, double lo, double hi, double max_width, int points)
{
    if (!(hi > lo))
        return;
    const GaussRule& r = gauss_legendre(points);
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_width - 1e-9)));
    const double h = (hi - lo) / panels;
    for (int k = 0; k < panels; ++k) {
        const double c = lo + (k + 0.5) * h;
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            out.x.push_back(c + 0.5 * h * r.x[i]);
            out.w.push_back(0.5 * h * r.w[i]);
        }
    }
}

Nodes composite(const std::vector<double>& breaks, double max_width, int points)
{
    Nodes n;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        append_composite(n, breaks[i], breaks[i + 1], max_width, points);
    return n;
}

}  // namespace phaselattice
