#include "chemrep/fe_space.hpp"

#include <map>
#include <stdexcept>
#include <utility>

namespace chemrep {

FESpace::FESpace(const StructuredMesh& mesh, int degree) : mesh_(&mesh), degree_(degree) {
    if (degree != 1 && degree != 2)
        throw std::invalid_argument("FESpace: only degrees 1 and 2 are supported");

    const int nv = mesh.n_vertices();
    const int nt = mesh.n_triangles();
    const int nd = dofs_per_element();
    dof_map_.resize(static_cast<std::size_t>(nt) * nd);

    if (degree == 1) {
        n_dofs_ = nv;
        dof_coords_ = mesh.vertices;
        for (int e = 0; e < nt; ++e)
            for (int k = 0; k < 3; ++k)
                dof_map_[static_cast<std::size_t>(e) * 3 + k] = mesh.triangles[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)];
    } else {
        // Edge midpoints enumerated in element order; local dofs 3,4,5 sit
        // opposite local vertices 0,1,2.
        dof_coords_ = mesh.vertices;
        std::map<std::pair<int, int>, int> edge_ids;
        const auto edge_dof = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = edge_ids.find(key);
            if (it == edge_ids.end()) {
                const int id = nv + static_cast<int>(edge_ids.size());
                edge_ids.emplace(key, id);
                const Vec2 pa = mesh_->vertex(a), pb = mesh_->vertex(b);
                dof_coords_.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
                return id;
            }
            return it->second;
        };
        for (int e = 0; e < nt; ++e) {
            const auto& tri = mesh.triangles[static_cast<std::size_t>(e)];
            int* dofs = dof_map_.data() + static_cast<std::size_t>(e) * 6;
            for (int k = 0; k < 3; ++k) dofs[k] = tri[static_cast<std::size_t>(k)];
            dofs[3] = edge_dof(tri[1], tri[2]);
            dofs[4] = edge_dof(tri[0], tri[2]);
            dofs[5] = edge_dof(tri[0], tri[1]);
        }
        n_dofs_ = nv + static_cast<int>(edge_ids.size());
    }

    geometry_.resize(static_cast<std::size_t>(nt));
    for (int e = 0; e < nt; ++e) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(e)];
        const Vec2 p0 = mesh.vertex(tri[0]), p1 = mesh.vertex(tri[1]), p2 = mesh.vertex(tri[2]);
        const double d = cross(p1 - p0, p2 - p0); // twice the (positive) area
        auto& g = geometry_[static_cast<std::size_t>(e)];
        g.area = 0.5 * d;
        g.grad_lambda[0] = {(p1.y - p2.y) / d, (p2.x - p1.x) / d};
        g.grad_lambda[1] = {(p2.y - p0.y) / d, (p0.x - p2.x) / d};
        g.grad_lambda[2] = {(p0.y - p1.y) / d, (p1.x - p0.x) / d};
    }
}

void FESpace::eval_basis(double l0, double l1, double l2, double* vals) const {
    if (degree_ == 1) {
        vals[0] = l0;
        vals[1] = l1;
        vals[2] = l2;
    } else {
        vals[0] = l0 * (2.0 * l0 - 1.0);
        vals[1] = l1 * (2.0 * l1 - 1.0);
        vals[2] = l2 * (2.0 * l2 - 1.0);
        vals[3] = 4.0 * l1 * l2;
        vals[4] = 4.0 * l0 * l2;
        vals[5] = 4.0 * l0 * l1;
    }
}

void FESpace::eval_basis_dlambda(double l0, double l1, double l2, double* dl) const {
    const auto set = [dl](int i, double d0, double d1, double d2) {
        dl[i * 3 + 0] = d0;
        dl[i * 3 + 1] = d1;
        dl[i * 3 + 2] = d2;
    };
    if (degree_ == 1) {
        set(0, 1.0, 0.0, 0.0);
        set(1, 0.0, 1.0, 0.0);
        set(2, 0.0, 0.0, 1.0);
    } else {
        set(0, 4.0 * l0 - 1.0, 0.0, 0.0);
        set(1, 0.0, 4.0 * l1 - 1.0, 0.0);
        set(2, 0.0, 0.0, 4.0 * l2 - 1.0);
        set(3, 0.0, 4.0 * l2, 4.0 * l1);
        set(4, 4.0 * l2, 0.0, 4.0 * l0);
        set(5, 4.0 * l1, 4.0 * l0, 0.0);
    }
}

const BasisTable& FESpace::basis_table(const QuadratureRule& rule) const {
    for (const auto& entry : table_cache_)
        if (entry.first == &rule) return entry.second;

    BasisTable tab;
    tab.n_points = static_cast<int>(rule.points.size());
    tab.n_basis = dofs_per_element();
    tab.values.resize(static_cast<std::size_t>(tab.n_points) * tab.n_basis);
    tab.dlambda.resize(static_cast<std::size_t>(tab.n_points) * tab.n_basis * 3);
    for (int q = 0; q < tab.n_points; ++q) {
        const auto& p = rule.points[static_cast<std::size_t>(q)];
        eval_basis(p.l0, p.l1, p.l2, tab.values.data() + static_cast<std::size_t>(q) * tab.n_basis);
        eval_basis_dlambda(p.l0, p.l1, p.l2,
                           tab.dlambda.data() + static_cast<std::size_t>(q) * tab.n_basis * 3);
    }
    table_cache_.emplace_back(&rule, std::move(tab));
    return table_cache_.back().second;
}

SigmaSpace build_sigma_space(const FESpace& p1_space) {
    if (p1_space.degree() != 1)
        throw std::invalid_argument("build_sigma_space: requires a degree-1 space");
    SigmaSpace s;
    s.scalar = &p1_space;
    s.constrained.assign(static_cast<std::size_t>(2 * p1_space.n_dofs()), 0);
    const auto& mesh = p1_space.mesh();
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        const int i = v % (mesh.nx + 1);
        const int j = v / (mesh.nx + 1);
        if (i == 0 || i == mesh.nx) s.constrained[static_cast<std::size_t>(2 * v)] = 1;
        if (j == 0 || j == mesh.ny) s.constrained[static_cast<std::size_t>(2 * v + 1)] = 1;
    }
    return s;
}

ScalarField interpolate(const FESpace& space, const std::function<double(double, double)>& f) {
    ScalarField out;
    out.space = &space;
    out.coeffs.resize(space.n_dofs());
    const auto& coords = space.dof_coords();
    for (int i = 0; i < space.n_dofs(); ++i)
        out.coeffs[i] = f(coords[static_cast<std::size_t>(i)].x, coords[static_cast<std::size_t>(i)].y);
    return out;
}

} // namespace chemrep
