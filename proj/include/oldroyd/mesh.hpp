#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oldroyd {

enum class BoundaryLabel : std::uint8_t { inflow, outflow, wall, symmetry };

inline const char* to_string(BoundaryLabel l) {
    switch (l) {
        case BoundaryLabel::inflow: return "inflow";
        case BoundaryLabel::outflow: return "outflow";
        case BoundaryLabel::wall: return "wall";
        case BoundaryLabel::symmetry: return "symmetry";
    }
    return "?";
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct BoundaryEdge {
    int v0;
    int v1;
    BoundaryLabel label;
};

/// Conforming 2D triangulation. Triangles are stored counterclockwise and the
/// labeled boundary edges cover the whole boundary exactly once.
struct TriMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    double h_max = 0.0;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }

    double signed_area(int t) const {
        const auto& tri = triangles[t];
        const Vec2& a = vertices[tri[0]];
        const Vec2& b = vertices[tri[1]];
        const Vec2& c = vertices[tri[2]];
        return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    }
};

namespace detail {

inline double edge_length(const TriMesh& m, int a, int b) {
    const double dx = m.vertices[a].x - m.vertices[b].x;
    const double dy = m.vertices[a].y - m.vertices[b].y;
    return std::sqrt(dx * dx + dy * dy);
}

inline double longest_edge(const TriMesh& m) {
    double h = 0.0;
    for (const auto& t : m.triangles)
        for (int e = 0; e < 3; ++e)
            h = std::max(h, edge_length(m, t[e], t[(e + 1) % 3]));
    return h;
}

/// Splits the axis-aligned cells of a structured block into two CCW triangles
/// each, with the diagonal running from the lower-left to the upper-right
/// corner of the cell.
struct StructuredBlock {
    int nx = 0;
    int ny = 0;
    std::vector<int> vertex_ids;  // (nx+1)*(ny+1), row-major in i (x index)

    int vid(int i, int j) const { return vertex_ids[std::size_t(j) * (nx + 1) + i]; }
};

inline void triangulate_block(const StructuredBlock& b, std::vector<std::array<int, 3>>& tris) {
    for (int j = 0; j < b.ny; ++j) {
        for (int i = 0; i < b.nx; ++i) {
            const int v00 = b.vid(i, j);
            const int v10 = b.vid(i + 1, j);
            const int v01 = b.vid(i, j + 1);
            const int v11 = b.vid(i + 1, j + 1);
            tris.push_back({v00, v10, v11});
            tris.push_back({v00, v11, v01});
        }
    }
}

}  // namespace detail

/// Uniform n x n triangulation of the unit square; every boundary edge is
/// labeled wall. h_max = sqrt(2)/n.
inline TriMesh build_unit_square(int n) {
    if (n < 1) throw std::invalid_argument("build_unit_square: n must be >= 1");
    TriMesh mesh;
    mesh.vertices.reserve(std::size_t(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            mesh.vertices.push_back({double(i) / n, double(j) / n});

    detail::StructuredBlock block;
    block.nx = n;
    block.ny = n;
    block.vertex_ids.resize(std::size_t(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            block.vertex_ids[std::size_t(j) * (n + 1) + i] = j * (n + 1) + i;
    detail::triangulate_block(block, mesh.triangles);

    auto vid = [&](int i, int j) { return j * (n + 1) + i; };
    for (int i = 0; i < n; ++i) {
        mesh.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), BoundaryLabel::wall});
        mesh.boundary_edges.push_back({vid(i, n), vid(i + 1, n), BoundaryLabel::wall});
        mesh.boundary_edges.push_back({vid(0, i), vid(0, i + 1), BoundaryLabel::wall});
        mesh.boundary_edges.push_back({vid(n, i), vid(n, i + 1), BoundaryLabel::wall});
    }
    mesh.h_max = detail::longest_edge(mesh);
    return mesh;
}

/// Geometry of the 4:1 planar contraction, half channel above the symmetry
/// line y = 0. Upstream rectangle [-upstream_length, 0] x [0, 4*half_width],
/// downstream rectangle [0, downstream_length] x [0, half_width]. Defaults
/// reproduce the benchmark configuration: downstream half-width 1/4, channel
/// lengths 4, so a 32x16 grid has dx = 0.25 and dy = 0.0625.
struct ContractionGeometry {
    double half_width = 0.25;
    double upstream_length = 4.0;
    double downstream_length = 4.0;
};

/// L-shaped contraction mesh. nx counts cells along the full channel length
/// (split evenly between the upstream and downstream sections), ny counts
/// cells across the upstream height 4W; the downstream section uses ny/4 cells
/// across W so the grid is conforming along the shared segment {0} x [0, W].
inline TriMesh build_contraction_mesh(int nx, int ny, const ContractionGeometry& geo = {}) {
    if (nx < 2 || nx % 2 != 0) throw std::invalid_argument("build_contraction_mesh: nx must be even and >= 2");
    if (ny < 4 || ny % 4 != 0) throw std::invalid_argument("build_contraction_mesh: ny must be a positive multiple of 4");
    if (geo.half_width <= 0.0 || geo.upstream_length <= 0.0 || geo.downstream_length <= 0.0)
        throw std::invalid_argument("build_contraction_mesh: geometry dimensions must be positive");

    const int mx = nx / 2;       // cells per section in x
    const int uy = ny;           // upstream cells in y
    const int dy_cells = ny / 4; // downstream cells in y
    const double W = geo.half_width;
    const double H = 4.0 * W;

    TriMesh mesh;
    detail::StructuredBlock up, down;
    up.nx = mx;
    up.ny = uy;
    up.vertex_ids.resize(std::size_t(mx + 1) * (uy + 1));
    down.nx = mx;
    down.ny = dy_cells;
    down.vertex_ids.resize(std::size_t(mx + 1) * (dy_cells + 1));

    for (int j = 0; j <= uy; ++j) {
        for (int i = 0; i <= mx; ++i) {
            up.vertex_ids[std::size_t(j) * (mx + 1) + i] = mesh.n_vertices();
            mesh.vertices.push_back({-geo.upstream_length + geo.upstream_length * i / mx, H * j / uy});
        }
    }
    // Both sections use the same spacing dy = 4W/ny, so downstream row j sits
    // at the height of upstream row j and the column x = 0, y in [0, W] is
    // shared without hanging nodes.
    for (int j = 0; j <= dy_cells; ++j) {
        for (int i = 0; i <= mx; ++i) {
            int id;
            if (i == 0) {
                id = up.vid(mx, j);
            } else {
                id = mesh.n_vertices();
                mesh.vertices.push_back({geo.downstream_length * i / mx, W * j / dy_cells});
            }
            down.vertex_ids[std::size_t(j) * (mx + 1) + i] = id;
        }
    }

    detail::triangulate_block(up, mesh.triangles);
    detail::triangulate_block(down, mesh.triangles);

    for (int j = 0; j < uy; ++j)
        mesh.boundary_edges.push_back({up.vid(0, j), up.vid(0, j + 1), BoundaryLabel::inflow});
    for (int j = 0; j < dy_cells; ++j)
        mesh.boundary_edges.push_back({down.vid(mx, j), down.vid(mx, j + 1), BoundaryLabel::outflow});
    for (int i = 0; i < mx; ++i) {
        mesh.boundary_edges.push_back({up.vid(i, 0), up.vid(i + 1, 0), BoundaryLabel::symmetry});
        mesh.boundary_edges.push_back({down.vid(i, 0), down.vid(i + 1, 0), BoundaryLabel::symmetry});
        mesh.boundary_edges.push_back({up.vid(i, uy), up.vid(i + 1, uy), BoundaryLabel::wall});
        mesh.boundary_edges.push_back({down.vid(i, dy_cells), down.vid(i + 1, dy_cells), BoundaryLabel::wall});
    }
    // Re-entrant contraction face x = 0, y in [W, 4W].
    for (int j = dy_cells; j < uy; ++j)
        mesh.boundary_edges.push_back({up.vid(mx, j), up.vid(mx, j + 1), BoundaryLabel::wall});

    mesh.h_max = detail::longest_edge(mesh);
    return mesh;
}

/// Red refinement: each triangle is split into 4 congruent children through
/// its edge midpoints. Boundary children inherit the parent edge's label.
inline TriMesh refine_uniform(const TriMesh& mesh) {
    TriMesh fine;
    fine.vertices = mesh.vertices;

    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int id = fine.n_vertices();
        fine.vertices.push_back({0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
                                 0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)});
        midpoint.emplace(key, id);
        return id;
    };

    fine.triangles.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
        const int m01 = mid(t[0], t[1]);
        const int m12 = mid(t[1], t[2]);
        const int m20 = mid(t[2], t[0]);
        fine.triangles.push_back({t[0], m01, m20});
        fine.triangles.push_back({m01, t[1], m12});
        fine.triangles.push_back({m20, m12, t[2]});
        fine.triangles.push_back({m01, m12, m20});
    }

    fine.boundary_edges.reserve(mesh.boundary_edges.size() * 2);
    for (const auto& e : mesh.boundary_edges) {
        const int m = mid(e.v0, e.v1);
        fine.boundary_edges.push_back({e.v0, m, e.label});
        fine.boundary_edges.push_back({m, e.v1, e.label});
    }

    fine.h_max = detail::longest_edge(fine);
    return fine;
}

/// Edge table shared by the P2 space and conformity checks: global edge list
/// plus the three edge ids of each triangle (local edge e connects triangle
/// vertices e and (e+1)%3).
struct EdgeTopology {
    std::vector<std::array<int, 2>> edges;              // vertex pairs, v0 < v1
    std::vector<std::array<int, 3>> triangle_edges;     // per triangle
    std::vector<int> edge_use_count;                    // #adjacent triangles

    int n_edges() const { return static_cast<int>(edges.size()); }
};

inline EdgeTopology build_edge_topology(const TriMesh& mesh) {
    EdgeTopology topo;
    std::map<std::pair<int, int>, int> ids;
    topo.triangle_edges.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            const auto key = std::minmax(tri[e], tri[(e + 1) % 3]);
            auto it = ids.find(key);
            int id;
            if (it == ids.end()) {
                id = topo.n_edges();
                ids.emplace(key, id);
                topo.edges.push_back({key.first, key.second});
                topo.edge_use_count.push_back(0);
            } else {
                id = it->second;
            }
            topo.triangle_edges[t][e] = id;
            ++topo.edge_use_count[id];
        }
    }
    return topo;
}

}  // namespace oldroyd
