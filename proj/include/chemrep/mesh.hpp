#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace chemrep {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

/// Oriented boundary edge with its outward unit normal.
struct BoundaryEdge {
    int v0 = -1, v1 = -1;
    Vec2 normal;
};

/// Structured triangulation of the rectangle [0,lx] x [0,ly].
///
/// Every cell of the nx-by-ny grid is split along the lower-left to
/// upper-right diagonal, so all triangles are congruent right triangles.
/// Triangles store the right-angle vertex first; the two legs emanating
/// from it are axis-aligned and orthogonal. All triangles are positively
/// oriented.
struct StructuredMesh {
    double lx = 0.0, ly = 0.0;
    int nx = 0, ny = 0;

    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> boundary_vertices;
    std::vector<BoundaryEdge> boundary_edges;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }

    int vertex_index(int i, int j) const { return j * (nx + 1) + i; }
    bool is_boundary_vertex(int v) const;

    Vec2 vertex(int v) const { return vertices[static_cast<std::size_t>(v)]; }

    /// Signed area of triangle t (positive for this mesh).
    double triangle_area(int t) const;
    /// Longest edge (hypotenuse) of triangle t.
    double triangle_diameter(int t) const;
    /// The three interior angles of triangle t, in radians.
    std::array<double, 3> triangle_angles(int t) const;
};

struct MeshMetrics {
    double h = 0.0;          // max triangle diameter
    double min_angle = 0.0;  // over all triangles
    double total_area = 0.0; // sum of triangle areas
};

/// Builds the structured right-triangle mesh of [0,lx] x [0,ly].
/// Throws std::invalid_argument for non-positive dimensions or cell counts.
StructuredMesh build_rect_mesh(double lx, double ly, int nx, int ny);

MeshMetrics mesh_metrics(const StructuredMesh& mesh);

/// Writes the mesh as a legacy-VTK ASCII unstructured grid (no fields).
void write_mesh_vtk(const StructuredMesh& mesh, std::ostream& os,
                    const std::string& title = "mesh");

} // namespace chemrep
