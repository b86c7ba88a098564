#pragma once

// Shared test-side oracles. Field evaluation here goes through explicit
// point location and barycentric algebra, independent of the library's
// assembly path.

#include <cmath>
#include <random>

#include "chemrep/fe_space.hpp"

namespace chemrep::testutil {

/// Locates the triangle containing (x, y) on a structured mesh and returns
/// (element index, barycentric coordinates).
inline std::pair<int, std::array<double, 3>> locate(const StructuredMesh& m, double x, double y) {
    const double hx = m.lx / m.nx, hy = m.ly / m.ny;
    int i = std::min(static_cast<int>(x / hx), m.nx - 1);
    int j = std::min(static_cast<int>(y / hy), m.ny - 1);
    i = std::max(i, 0);
    j = std::max(j, 0);
    const double xi = (x - i * hx) / hx, eta = (y - j * hy) / hy;
    // Cells split along the lower-left -> upper-right diagonal: triangle
    // 2*(j*nx+i) is the lower-right half (xi >= eta), +1 the upper-left.
    const int cell = j * m.nx + i;
    const int e = 2 * cell + (xi >= eta ? 0 : 1);
    const auto& tri = m.triangles[static_cast<std::size_t>(e)];
    const Vec2 p0 = m.vertex(tri[0]), p1 = m.vertex(tri[1]), p2 = m.vertex(tri[2]);
    const double d = cross(p1 - p0, p2 - p0);
    const Vec2 p{x, y};
    const double l1 = cross(p - p0, p2 - p0) / d;
    const double l2 = cross(p1 - p0, p - p0) / d;
    return {e, {1.0 - l1 - l2, l1, l2}};
}

inline double eval_field(const ScalarField& f, double x, double y) {
    const auto [e, lam] = locate(f.space->mesh(), x, y);
    double vals[6];
    f.space->eval_basis(lam[0], lam[1], lam[2], vals);
    const auto dofs = f.space->element_dofs(e);
    double out = 0.0;
    for (int i = 0; i < f.space->dofs_per_element(); ++i)
        out += f.coeffs[dofs[static_cast<std::size_t>(i)]] * vals[i];
    return out;
}

inline Vec2 eval_field_grad(const ScalarField& f, double x, double y) {
    const auto [e, lam] = locate(f.space->mesh(), x, y);
    double dl[18];
    f.space->eval_basis_dlambda(lam[0], lam[1], lam[2], dl);
    const auto dofs = f.space->element_dofs(e);
    const auto& geom = f.space->geometry(e);
    Vec2 g{0.0, 0.0};
    for (int i = 0; i < f.space->dofs_per_element(); ++i) {
        const double c = f.coeffs[dofs[static_cast<std::size_t>(i)]];
        for (int k = 0; k < 3; ++k) {
            g.x += c * dl[i * 3 + k] * geom.grad_lambda[static_cast<std::size_t>(k)].x;
            g.y += c * dl[i * 3 + k] * geom.grad_lambda[static_cast<std::size_t>(k)].y;
        }
    }
    return g;
}

/// Exact integral of l1^a l2^b over the reference triangle.
inline double reference_monomial_integral(int a, int b) {
    // a! b! / (a + b + 2)!
    double num = 1.0;
    for (int i = 2; i <= a; ++i) num *= i;
    for (int i = 2; i <= b; ++i) num *= i;
    double den = 1.0;
    for (int i = 2; i <= a + b + 2; ++i) den *= i;
    return num / den;
}

inline Eigen::VectorXd random_vector(int n, std::mt19937& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

} // namespace chemrep::testutil
