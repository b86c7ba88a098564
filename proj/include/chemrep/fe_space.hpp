#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "chemrep/mesh.hpp"
#include "chemrep/quadrature.hpp"

namespace chemrep {

/// Per-element affine geometry: barycentric gradients and area.
struct ElementGeometry {
    std::array<Vec2, 3> grad_lambda;
    double area = 0.0;
};

/// Reference-element basis tables for one quadrature rule: values and
/// barycentric partials of every shape function at every quadrature point.
struct BasisTable {
    int n_points = 0;
    int n_basis = 0;
    std::vector<double> values;    // [q * n_basis + i]
    std::vector<double> dlambda;   // [(q * n_basis + i) * 3 + k]

    double value(int q, int i) const { return values[static_cast<std::size_t>(q * n_basis + i)]; }
    double dl(int q, int i, int k) const {
        return dlambda[static_cast<std::size_t>((q * n_basis + i) * 3 + k)];
    }
};

/// Continuous Lagrange space of degree 1 or 2 on a StructuredMesh.
/// P1 dofs are the vertices; P2 adds edge midpoints. Dof enumeration is
/// deterministic given the mesh.
class FESpace {
public:
    FESpace(const StructuredMesh& mesh, int degree);

    const StructuredMesh& mesh() const { return *mesh_; }
    int degree() const { return degree_; }
    int n_dofs() const { return n_dofs_; }
    int dofs_per_element() const { return degree_ == 1 ? 3 : 6; }
    const std::vector<Vec2>& dof_coords() const { return dof_coords_; }

    std::span<const int> element_dofs(int e) const {
        const int nd = dofs_per_element();
        return {dof_map_.data() + static_cast<std::size_t>(e) * nd, static_cast<std::size_t>(nd)};
    }
    const ElementGeometry& geometry(int e) const {
        return geometry_[static_cast<std::size_t>(e)];
    }

    /// Shape-function values at a barycentric point.
    void eval_basis(double l0, double l1, double l2, double* vals) const;
    /// Barycentric partials dN_i/dlambda_k at a barycentric point.
    void eval_basis_dlambda(double l0, double l1, double l2, double* dl) const;

    /// Cached reference tables for a rule (owned by the space).
    const BasisTable& basis_table(const QuadratureRule& rule) const;

    /// Physical gradient of shape i at quad point q of element e.
    Vec2 physical_grad(const BasisTable& tab, const ElementGeometry& geom, int q, int i) const {
        Vec2 g{0.0, 0.0};
        for (int k = 0; k < 3; ++k) {
            const double d = tab.dl(q, i, k);
            g.x += d * geom.grad_lambda[static_cast<std::size_t>(k)].x;
            g.y += d * geom.grad_lambda[static_cast<std::size_t>(k)].y;
        }
        return g;
    }

private:
    const StructuredMesh* mesh_;
    int degree_;
    int n_dofs_ = 0;
    std::vector<int> dof_map_;
    std::vector<Vec2> dof_coords_;
    std::vector<ElementGeometry> geometry_;
    mutable std::vector<std::pair<const QuadratureRule*, BasisTable>> table_cache_;
};

/// P1 vector-valued space with zero normal trace on the rectangle boundary.
/// Dof layout is interleaved: (2*vertex + component). On the left/right
/// boundary the x-component is pinned, on bottom/top the y-component, and
/// both at corners; pinned coefficients are identically zero.
struct SigmaSpace {
    const FESpace* scalar = nullptr;      // degree-1 space
    std::vector<std::uint8_t> constrained; // per vector dof

    int n_dofs() const { return 2 * scalar->n_dofs(); }
    bool is_constrained(int dof) const {
        return constrained[static_cast<std::size_t>(dof)] != 0;
    }
};

SigmaSpace build_sigma_space(const FESpace& p1_space);

struct ScalarField {
    const FESpace* space = nullptr;
    Eigen::VectorXd coeffs;

    /// Evaluate at quad point q of element e using a basis table.
    double eval(const BasisTable& tab, int e, int q) const {
        const auto dofs = space->element_dofs(e);
        double v = 0.0;
        for (int i = 0; i < tab.n_basis; ++i) v += coeffs[dofs[static_cast<std::size_t>(i)]] * tab.value(q, i);
        return v;
    }
    Vec2 eval_grad(const BasisTable& tab, int e, int q) const {
        const auto dofs = space->element_dofs(e);
        const auto& geom = space->geometry(e);
        Vec2 g{0.0, 0.0};
        for (int i = 0; i < tab.n_basis; ++i) {
            const Vec2 gi = space->physical_grad(tab, geom, q, i);
            const double c = coeffs[dofs[static_cast<std::size_t>(i)]];
            g.x += c * gi.x;
            g.y += c * gi.y;
        }
        return g;
    }
};

struct VectorField {
    const SigmaSpace* space = nullptr;
    Eigen::VectorXd coeffs; // interleaved (x0, y0, x1, y1, ...)

    Vec2 eval(const BasisTable& tab, int e, int q) const {
        const auto dofs = space->scalar->element_dofs(e);
        Vec2 v{0.0, 0.0};
        for (int i = 0; i < tab.n_basis; ++i) {
            const double phi = tab.value(q, i);
            v.x += coeffs[2 * dofs[static_cast<std::size_t>(i)]] * phi;
            v.y += coeffs[2 * dofs[static_cast<std::size_t>(i)] + 1] * phi;
        }
        return v;
    }
};

/// Nodal (Lagrange) interpolation of a pointwise function.
ScalarField interpolate(const FESpace& space, const std::function<double(double, double)>& f);

} // namespace chemrep
