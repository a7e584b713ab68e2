#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "bondheat/errors.hpp"

// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton iteration on
// the Legendre recurrence and cached per order.

namespace bondheat::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline Rule compute_gauss_legendre(int n) {
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-based initial guess for the i-th positive root
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

inline const Rule& gauss_legendre(int n) {
    if (n < 1) throw ValidationError("gauss_legendre: order must be >= 1");
    static std::map<int, Rule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

// Integrate f over [a, b] with an n-point rule.
template <typename F>
double integrate(F f, double a, double b, int n) {
    const Rule& rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b);
    const double halfw = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + halfw * rule.nodes[i]);
    return sum * halfw;
}

}  // namespace bondheat::quadrature
