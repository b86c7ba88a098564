#pragma once

#include <functional>
#include <vector>

namespace chemrep {

/// Quadrature rule on the reference triangle {(x,y): x,y >= 0, x+y <= 1},
/// stored in barycentric coordinates (l0, l1, l2) = (1-x-y, x, y).
/// Weights sum to the reference area 1/2.
struct QuadratureRule {
    struct Point {
        double l0, l1, l2;
    };
    std::vector<Point> points;
    std::vector<double> weights;
    int exactness = 0;

    /// 6-point rule, exact for polynomials of total degree <= 4.
    /// Used for every bilinear-form assembly in this project.
    static const QuadratureRule& degree4();

    /// Collapsed 5x5 Gauss rule, exact through total degree 8.
    static const QuadratureRule& degree8();

    /// Collapsed 8x8 Gauss rule, exact through total degree 14. Used for
    /// initial-data integrals where near-machine accuracy matters.
    static const QuadratureRule& degree14();
};

/// Gauss-Legendre nodes/weights on [0,1] (weights sum to 1).
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Composite tensor Gauss-Legendre integration of f over [0,lx] x [0,ly]
/// with panels_x * panels_y panels and an n-point rule per direction.
double integrate_rect(const std::function<double(double, double)>& f, double lx, double ly,
                      int panels_x, int panels_y, int n);

} // namespace chemrep
