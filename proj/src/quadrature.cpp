#include "chemrep/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace chemrep {

namespace {

QuadratureRule make_degree4() {
    QuadratureRule rule;
    rule.exactness = 4;
    // Two symmetric 3-orbits; weights are per-point fractions of the area.
    const double b1 = 0.4459484909159648863183;
    const double w1 = 0.2233815896780114656950;
    const double b2 = 0.0915762135097707434596;
    const double w2 = 0.1099517436553218676383;
    const auto add_orbit = [&rule](double b, double w) {
        const double a = 1.0 - 2.0 * b;
        rule.points.push_back({a, b, b});
        rule.points.push_back({b, a, b});
        rule.points.push_back({b, b, a});
        for (int k = 0; k < 3; ++k) rule.weights.push_back(0.5 * w);
    };
    add_orbit(b1, w1);
    add_orbit(b2, w2);
    return rule;
}

// Duffy-collapsed tensor Gauss rule: with n points per direction the rule is
// exact for all polynomials of total degree <= 2n - 2.
QuadratureRule make_collapsed(int n, int exactness) {
    std::vector<double> x, w;
    gauss_legendre_01(n, x, w);
    QuadratureRule rule;
    rule.exactness = exactness;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double xi = x[static_cast<std::size_t>(i)];
            const double eta = x[static_cast<std::size_t>(j)] * (1.0 - xi);
            const double wt = w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] *
                              (1.0 - xi);
            rule.points.push_back({1.0 - xi - eta, xi, eta});
            rule.weights.push_back(wt);
        }
    }
    return rule;
}

} // namespace

const QuadratureRule& QuadratureRule::degree4() {
    static const QuadratureRule rule = make_degree4();
    return rule;
}

const QuadratureRule& QuadratureRule::degree8() {
    static const QuadratureRule rule = make_collapsed(5, 8);
    return rule;
}

const QuadratureRule& QuadratureRule::degree14() {
    static const QuadratureRule rule = make_collapsed(8, 14);
    return rule;
}

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre_01: n must be positive");
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    // Newton iteration on P_n over [-1,1], then map to [0,1].
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x); // descending x -> ascending node
        weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
}

double integrate_rect(const std::function<double(double, double)>& f, double lx, double ly,
                      int panels_x, int panels_y, int n) {
    std::vector<double> x, w;
    gauss_legendre_01(n, x, w);
    const double hx = lx / panels_x, hy = ly / panels_y;
    double total = 0.0;
    for (int px = 0; px < panels_x; ++px) {
        for (int py = 0; py < panels_y; ++py) {
            double cell = 0.0;
            for (int i = 0; i < n; ++i) {
                const double gx = (px + x[static_cast<std::size_t>(i)]) * hx;
                for (int j = 0; j < n; ++j) {
                    const double gy = (py + x[static_cast<std::size_t>(j)]) * hy;
                    cell += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] *
                            f(gx, gy);
                }
            }
            total += cell * hx * hy;
        }
    }
    return total;
}

} // namespace chemrep
