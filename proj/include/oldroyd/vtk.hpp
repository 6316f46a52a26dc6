#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "oldroyd/fe_space.hpp"
#include "oldroyd/mesh.hpp"

namespace oldroyd {

namespace detail {

inline void vtk_num(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);  // normalize -0
    os << buf;
}

inline void vtk_geometry(std::ostream& os, const TriMesh& mesh, const std::string& title) {
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.n_vertices() << " double\n";
    for (const Vec2& v : mesh.vertices) {
        vtk_num(os, v.x);
        os << ' ';
        vtk_num(os, v.y);
        os << " 0\n";
    }
    os << "CELLS " << mesh.n_triangles() << ' ' << 4 * mesh.n_triangles() << '\n';
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.n_triangles() << '\n';
    for (int t = 0; t < mesh.n_triangles(); ++t) os << "5\n";
}

}  // namespace detail

/// Legacy-VTK ASCII export of the triangulation alone.
inline void write_vtk_mesh(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_vtk_mesh: cannot open " + path);
    detail::vtk_geometry(f, mesh, "mesh");
}

/// Legacy-VTK ASCII export of a solution state: velocity as point vectors
/// (vertex values of the P2 field), pressure as point scalars, stress as
/// per-cell tensors (element means). Output is byte-stable for fixed inputs.
inline void write_vtk_fields(const DiscreteState& state, const std::string& path) {
    const DofLayout& layout = *state.layout;
    const TriMesh& mesh = layout.mesh();
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_vtk_fields: cannot open " + path);
    detail::vtk_geometry(f, mesh, "velocity/stress/pressure fields");

    f << "POINT_DATA " << mesh.n_vertices() << "\n";
    f << "VECTORS velocity double\n";
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        detail::vtk_num(f, state.coeffs[layout.velocity_dof(v, 0)]);
        f << ' ';
        detail::vtk_num(f, state.coeffs[layout.velocity_dof(v, 1)]);
        f << " 0\n";
    }
    f << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        detail::vtk_num(f, state.coeffs[layout.pressure_dof(v)]);
        f << '\n';
    }

    f << "CELL_DATA " << mesh.n_triangles() << "\n";
    f << "TENSORS stress double\n";
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        double mean[3] = {0.0, 0.0, 0.0};
        for (int corner = 0; corner < 3; ++corner)
            for (int c = 0; c < 3; ++c) mean[c] += state.coeffs[layout.stress_dof(t, corner, c)] / 3.0;
        detail::vtk_num(f, mean[0]);
        f << ' ';
        detail::vtk_num(f, mean[1]);
        f << " 0\n";
        detail::vtk_num(f, mean[1]);
        f << ' ';
        detail::vtk_num(f, mean[2]);
        f << " 0\n";
        f << "0 0 0\n";
    }
}

}  // namespace oldroyd
