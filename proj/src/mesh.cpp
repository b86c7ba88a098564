#include "chemrep/mesh.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace chemrep {

bool StructuredMesh::is_boundary_vertex(int v) const {
    const int i = v % (nx + 1);
    const int j = v / (nx + 1);
    return i == 0 || i == nx || j == 0 || j == ny;
}

double StructuredMesh::triangle_area(int t) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    const Vec2 a = vertex(tri[0]), b = vertex(tri[1]), c = vertex(tri[2]);
    return 0.5 * cross(b - a, c - a);
}

double StructuredMesh::triangle_diameter(int t) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    const Vec2 a = vertex(tri[0]), b = vertex(tri[1]), c = vertex(tri[2]);
    return std::max({norm(b - a), norm(c - b), norm(a - c)});
}

std::array<double, 3> StructuredMesh::triangle_angles(int t) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    std::array<double, 3> angles{};
    for (int k = 0; k < 3; ++k) {
        const Vec2 p = vertex(tri[k]);
        const Vec2 q = vertex(tri[(k + 1) % 3]);
        const Vec2 r = vertex(tri[(k + 2) % 3]);
        const Vec2 e1 = q - p, e2 = r - p;
        angles[static_cast<std::size_t>(k)] =
            std::atan2(std::abs(cross(e1, e2)), dot(e1, e2));
    }
    return angles;
}

StructuredMesh build_rect_mesh(double lx, double ly, int nx, int ny) {
    if (!(lx > 0.0) || !(ly > 0.0))
        throw std::invalid_argument("build_rect_mesh: domain side lengths must be positive");
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("build_rect_mesh: cell counts must be at least 1");

    StructuredMesh m;
    m.lx = lx;
    m.ly = ly;
    m.nx = nx;
    m.ny = ny;

    m.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.vertices.push_back({lx * i / nx, ly * j / ny});

    // Each cell splits along the lower-left -> upper-right diagonal.
    // Right-angle vertex first, then counterclockwise.
    m.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = m.vertex_index(i, j);
            const int v10 = m.vertex_index(i + 1, j);
            const int v01 = m.vertex_index(i, j + 1);
            const int v11 = m.vertex_index(i + 1, j + 1);
            m.triangles.push_back({v10, v11, v00});
            m.triangles.push_back({v01, v00, v11});
        }
    }

    for (int v = 0; v < m.n_vertices(); ++v)
        if (m.is_boundary_vertex(v)) m.boundary_vertices.push_back(v);

    for (int i = 0; i < nx; ++i) {
        m.boundary_edges.push_back({m.vertex_index(i, 0), m.vertex_index(i + 1, 0), {0.0, -1.0}});
        m.boundary_edges.push_back({m.vertex_index(i + 1, ny), m.vertex_index(i, ny), {0.0, 1.0}});
    }
    for (int j = 0; j < ny; ++j) {
        m.boundary_edges.push_back({m.vertex_index(nx, j), m.vertex_index(nx, j + 1), {1.0, 0.0}});
        m.boundary_edges.push_back({m.vertex_index(0, j + 1), m.vertex_index(0, j), {-1.0, 0.0}});
    }

    return m;
}

MeshMetrics mesh_metrics(const StructuredMesh& mesh) {
    MeshMetrics out;
    out.min_angle = 4.0; // > pi
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        out.h = std::max(out.h, mesh.triangle_diameter(t));
        out.total_area += mesh.triangle_area(t);
        const auto ang = mesh.triangle_angles(t);
        out.min_angle = std::min(out.min_angle, *std::min_element(ang.begin(), ang.end()));
    }
    return out;
}

void write_mesh_vtk(const StructuredMesh& mesh, std::ostream& os, const std::string& title) {
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.n_vertices() << " double\n";
    for (const auto& v : mesh.vertices) os << v.x << " " << v.y << " 0\n";
    os << "CELLS " << mesh.n_triangles() << " " << 4 * mesh.n_triangles() << "\n";
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    os << "CELL_TYPES " << mesh.n_triangles() << "\n";
    for (int t = 0; t < mesh.n_triangles(); ++t) os << "5\n";
}

} // namespace chemrep
