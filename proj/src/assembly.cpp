#include "chemrep/assembly.hpp"

#include <stdexcept>

namespace chemrep {

namespace {

using Triplet = Eigen::Triplet<double>;

SpMat from_triplets(int rows, int cols, std::vector<Triplet>& trip) {
    SpMat m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

} // namespace

double quadratic_form(const SparseOperator& A, const Eigen::VectorXd& x) {
    return x.dot(A.mat * x);
}

SparseOperator assemble_mass(const FESpace& space) {
    const auto& rule = QuadratureRule::degree4();
    const auto& tab = space.basis_table(rule);
    const int nt = space.mesh().n_triangles();
    const int nd = space.dofs_per_element();

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(nt) * nd * nd);
    for (int e = 0; e < nt; ++e) {
        const auto dofs = space.element_dofs(e);
        const double scale = 2.0 * space.geometry(e).area; // weights carry the 1/2
        for (int q = 0; q < tab.n_points; ++q) {
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            for (int i = 0; i < nd; ++i)
                for (int j = 0; j < nd; ++j)
                    trip.emplace_back(dofs[static_cast<std::size_t>(i)], dofs[static_cast<std::size_t>(j)],
                                      w * tab.value(q, i) * tab.value(q, j));
        }
    }
    return {from_triplets(space.n_dofs(), space.n_dofs(), trip), true};
}

SparseOperator assemble_lumped_mass(const FESpace& space) {
    if (space.degree() != 1)
        throw std::invalid_argument("assemble_lumped_mass: lumping is defined for P1 only");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(space.n_dofs());
    for (int e = 0; e < space.mesh().n_triangles(); ++e) {
        const auto dofs = space.element_dofs(e);
        const double third = space.geometry(e).area / 3.0;
        for (int i = 0; i < 3; ++i) diag[dofs[static_cast<std::size_t>(i)]] += third;
    }
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(space.n_dofs()));
    for (int i = 0; i < space.n_dofs(); ++i) trip.emplace_back(i, i, diag[i]);
    return {from_triplets(space.n_dofs(), space.n_dofs(), trip), true};
}

SparseOperator assemble_stiffness(const FESpace& space) {
    const auto& rule = QuadratureRule::degree4();
    const auto& tab = space.basis_table(rule);
    const int nt = space.mesh().n_triangles();
    const int nd = space.dofs_per_element();

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(nt) * nd * nd);
    std::array<Vec2, 6> g{};
    for (int e = 0; e < nt; ++e) {
        const auto dofs = space.element_dofs(e);
        const auto& geom = space.geometry(e);
        const double scale = 2.0 * geom.area;
        for (int q = 0; q < tab.n_points; ++q) {
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            for (int i = 0; i < nd; ++i) g[static_cast<std::size_t>(i)] = space.physical_grad(tab, geom, q, i);
            for (int i = 0; i < nd; ++i)
                for (int j = 0; j < nd; ++j)
                    trip.emplace_back(dofs[static_cast<std::size_t>(i)], dofs[static_cast<std::size_t>(j)],
                                      w * dot(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)]));
        }
    }
    return {from_triplets(space.n_dofs(), space.n_dofs(), trip), true};
}

SparseOperator assemble_mixed_mass(const FESpace& test, const FESpace& trial) {
    if (&test.mesh() != &trial.mesh())
        throw std::invalid_argument("assemble_mixed_mass: spaces live on different meshes");
    const auto& rule = QuadratureRule::degree4();
    const auto& ttab = test.basis_table(rule);
    const auto& utab = trial.basis_table(rule);
    const int nt = test.mesh().n_triangles();

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(nt) * ttab.n_basis * utab.n_basis);
    for (int e = 0; e < nt; ++e) {
        const auto tdofs = test.element_dofs(e);
        const auto udofs = trial.element_dofs(e);
        const double scale = 2.0 * test.geometry(e).area;
        for (int q = 0; q < ttab.n_points; ++q) {
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            for (int i = 0; i < ttab.n_basis; ++i)
                for (int j = 0; j < utab.n_basis; ++j)
                    trip.emplace_back(tdofs[static_cast<std::size_t>(i)], udofs[static_cast<std::size_t>(j)],
                                      w * ttab.value(q, i) * utab.value(q, j));
        }
    }
    return {from_triplets(test.n_dofs(), trial.n_dofs(), trip), false};
}

SparseOperator assemble_sigma_mass(const SigmaSpace& sigma) {
    const SparseOperator scalar_mass = assemble_mass(*sigma.scalar);
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(2 * scalar_mass.mat.nonZeros()));
    for (int r = 0; r < scalar_mass.mat.outerSize(); ++r)
        for (SpMat::InnerIterator it(scalar_mass.mat, r); it; ++it)
            for (int c = 0; c < 2; ++c)
                trip.emplace_back(2 * static_cast<int>(it.row()) + c,
                                  2 * static_cast<int>(it.col()) + c, it.value());
    return {from_triplets(sigma.n_dofs(), sigma.n_dofs(), trip), true};
}

SparseOperator assemble_B(const SigmaSpace& sigma) {
    const FESpace& sp = *sigma.scalar;
    const auto& rule = QuadratureRule::degree4();
    const auto& tab = sp.basis_table(rule);
    const int nt = sp.mesh().n_triangles();

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(nt) * 36);
    std::array<Vec2, 3> g{};
    for (int e = 0; e < nt; ++e) {
        const auto dofs = sp.element_dofs(e);
        const auto& geom = sp.geometry(e);
        const double area = geom.area;
        for (int i = 0; i < 3; ++i) g[static_cast<std::size_t>(i)] = geom.grad_lambda[static_cast<std::size_t>(i)];

        // div(e_c phi_i) and rot(e_c phi_i) are constant on the element.
        const auto div_of = [&g](int i, int c) {
            return c == 0 ? g[static_cast<std::size_t>(i)].x : g[static_cast<std::size_t>(i)].y;
        };
        const auto rot_of = [&g](int i, int c) {
            return c == 0 ? -g[static_cast<std::size_t>(i)].y : g[static_cast<std::size_t>(i)].x;
        };

        for (int i = 0; i < 3; ++i)
            for (int ci = 0; ci < 2; ++ci)
                for (int j = 0; j < 3; ++j)
                    for (int cj = 0; cj < 2; ++cj) {
                        const double val =
                            area * (div_of(i, ci) * div_of(j, cj) + rot_of(i, ci) * rot_of(j, cj));
                        trip.emplace_back(2 * dofs[static_cast<std::size_t>(i)] + ci,
                                          2 * dofs[static_cast<std::size_t>(j)] + cj, val);
                    }

        // (s, t) part via the degree-4 rule (exact for P1 x P1).
        const double scale = 2.0 * area;
        for (int q = 0; q < tab.n_points; ++q) {
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double m = w * tab.value(q, i) * tab.value(q, j);
                    for (int c = 0; c < 2; ++c)
                        trip.emplace_back(2 * dofs[static_cast<std::size_t>(i)] + c,
                                          2 * dofs[static_cast<std::size_t>(j)] + c, m);
                }
        }
    }
    return {from_triplets(sigma.n_dofs(), sigma.n_dofs(), trip), true};
}

void pin_constrained(SparseOperator& op, const SigmaSpace& sigma) {
    for (int r = 0; r < op.mat.outerSize(); ++r) {
        const bool row_pinned = sigma.is_constrained(r);
        for (SpMat::InnerIterator it(op.mat, r); it; ++it) {
            const bool col_pinned = sigma.is_constrained(static_cast<int>(it.col()));
            if (row_pinned || col_pinned)
                it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
        }
    }
    op.mat.prune(0.0);
}

void zero_constrained(Eigen::VectorXd& rhs, const SigmaSpace& sigma) {
    for (int i = 0; i < rhs.size(); ++i)
        if (sigma.is_constrained(i)) rhs[i] = 0.0;
}

Eigen::VectorXd assemble_trilinear_uv(const ScalarField& u, const ScalarField& v,
                                      const FESpace& test) {
    if (&u.space->mesh() != &v.space->mesh() || &u.space->mesh() != &test.mesh())
        throw std::invalid_argument("assemble_trilinear_uv: spaces live on different meshes");
    const auto& rule = QuadratureRule::degree4();
    const auto& utab = u.space->basis_table(rule);
    const auto& vtab = v.space->basis_table(rule);
    const auto& ttab = test.basis_table(rule);
    const int nt = test.mesh().n_triangles();

    Eigen::VectorXd b = Eigen::VectorXd::Zero(test.n_dofs());
    for (int e = 0; e < nt; ++e) {
        const auto tdofs = test.element_dofs(e);
        const auto& geom = test.geometry(e);
        const double scale = 2.0 * geom.area;
        for (int q = 0; q < ttab.n_points; ++q) {
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            const double uq = u.eval(utab, e, q);
            const Vec2 gv = v.eval_grad(vtab, e, q);
            for (int i = 0; i < ttab.n_basis; ++i) {
                const Vec2 gt = test.physical_grad(ttab, geom, q, i);
                b[tdofs[static_cast<std::size_t>(i)]] += w * uq * dot(gv, gt);
            }
        }
    }
    return b;
}

Eigen::VectorXd assemble_load(const FESpace& space, const std::function<double(double, double)>& f,
                              const QuadratureRule& rule) {
    const auto& tab = space.basis_table(rule);
    const int nt = space.mesh().n_triangles();

    Eigen::VectorXd b = Eigen::VectorXd::Zero(space.n_dofs());
    for (int e = 0; e < nt; ++e) {
        const auto dofs = space.element_dofs(e);
        const auto& tri = space.mesh().triangles[static_cast<std::size_t>(e)];
        const Vec2 p0 = space.mesh().vertex(tri[0]), p1 = space.mesh().vertex(tri[1]),
                   p2 = space.mesh().vertex(tri[2]);
        const double scale = 2.0 * space.geometry(e).area;
        for (int q = 0; q < tab.n_points; ++q) {
            const auto& p = rule.points[static_cast<std::size_t>(q)];
            const double x = p.l0 * p0.x + p.l1 * p1.x + p.l2 * p2.x;
            const double y = p.l0 * p0.y + p.l1 * p1.y + p.l2 * p2.y;
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale * f(x, y);
            for (int i = 0; i < tab.n_basis; ++i) b[dofs[static_cast<std::size_t>(i)]] += w * tab.value(q, i);
        }
    }
    return b;
}

double integrate_mesh(const StructuredMesh& mesh, const std::function<double(double, double)>& f,
                      const QuadratureRule& rule) {
    double total = 0.0;
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(e)];
        const Vec2 p0 = mesh.vertex(tri[0]), p1 = mesh.vertex(tri[1]), p2 = mesh.vertex(tri[2]);
        const double scale = 2.0 * mesh.triangle_area(e);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& p = rule.points[q];
            const double x = p.l0 * p0.x + p.l1 * p1.x + p.l2 * p2.x;
            const double y = p.l0 * p0.y + p.l1 * p1.y + p.l2 * p2.y;
            total += rule.weights[q] * scale * f(x, y);
        }
    }
    return total;
}

ScalarField l2_project_lumped(const FESpace& p1_space,
                              const std::function<double(double, double)>& f,
                              const QuadratureRule& rule) {
    const SparseOperator lumped = assemble_lumped_mass(p1_space);
    const Eigen::VectorXd b = assemble_load(p1_space, f, rule);
    ScalarField out;
    out.space = &p1_space;
    out.coeffs = b.cwiseQuotient(lumped.mat.diagonal());
    return out;
}

ScalarField l2_project(const FESpace& space, const std::function<double(double, double)>& f,
                       const QuadratureRule& rule) {
    const SparseOperator mass = assemble_mass(space);
    const Eigen::VectorXd b = assemble_load(space, f, rule);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(Eigen::SparseMatrix<double>(mass.mat));
    ScalarField out;
    out.space = &space;
    out.coeffs = solver.solve(b);
    return out;
}

VectorField l2_project_sigma(const SigmaSpace& sigma,
                             const std::function<Vec2(double, double)>& g,
                             const QuadratureRule& rule) {
    const FESpace& sp = *sigma.scalar;
    const auto& tab = sp.basis_table(rule);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(sigma.n_dofs());
    for (int e = 0; e < sp.mesh().n_triangles(); ++e) {
        const auto dofs = sp.element_dofs(e);
        const auto& tri = sp.mesh().triangles[static_cast<std::size_t>(e)];
        const Vec2 p0 = sp.mesh().vertex(tri[0]), p1 = sp.mesh().vertex(tri[1]),
                   p2 = sp.mesh().vertex(tri[2]);
        const double scale = 2.0 * sp.geometry(e).area;
        for (int q = 0; q < tab.n_points; ++q) {
            const auto& p = rule.points[static_cast<std::size_t>(q)];
            const double x = p.l0 * p0.x + p.l1 * p1.x + p.l2 * p2.x;
            const double y = p.l0 * p0.y + p.l1 * p1.y + p.l2 * p2.y;
            const Vec2 val = g(x, y);
            const double w = rule.weights[static_cast<std::size_t>(q)] * scale;
            for (int i = 0; i < 3; ++i) {
                b[2 * dofs[static_cast<std::size_t>(i)]] += w * tab.value(q, i) * val.x;
                b[2 * dofs[static_cast<std::size_t>(i)] + 1] += w * tab.value(q, i) * val.y;
            }
        }
    }
    SparseOperator mass = assemble_sigma_mass(sigma);
    pin_constrained(mass, sigma);
    zero_constrained(b, sigma);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(Eigen::SparseMatrix<double>(mass.mat));
    VectorField out;
    out.space = &sigma;
    out.coeffs = solver.solve(b);
    return out;
}

AhOperator::AhOperator(const FESpace& space)
    : space_(&space), mass_(assemble_mass(space)), stiffness_(assemble_stiffness(space)) {
    mass_solver_.compute(Eigen::SparseMatrix<double>(mass_.mat));
    if (mass_solver_.info() != Eigen::Success)
        throw std::runtime_error("AhOperator: mass factorization failed");
}

Eigen::VectorXd AhOperator::apply(const Eigen::VectorXd& v) const {
    return mass_solver_.solve(stiffness_.mat * v + mass_.mat * v);
}

Eigen::VectorXd AhOperator::apply_minus_identity(const Eigen::VectorXd& v) const {
    return mass_solver_.solve(stiffness_.mat * v);
}

double AhOperator::minus_identity_norm_sq(const Eigen::VectorXd& v) const {
    const Eigen::VectorXd kv = stiffness_.mat * v;
    return kv.dot(mass_solver_.solve(kv));
}

} // namespace chemrep
