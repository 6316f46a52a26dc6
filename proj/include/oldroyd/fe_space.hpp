#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "oldroyd/mesh.hpp"
#include "oldroyd/quadrature.hpp"

namespace oldroyd {

// ---------------------------------------------------------------------------
// Reference bases.
//
// P2 node order: the three vertices followed by the midpoints of local edges
// (0-1), (1-2), (2-0). P1 nodes are the vertices.
// ---------------------------------------------------------------------------

inline std::array<double, 6> p2_values(double a, double b) {
    const double l0 = 1.0 - a - b, l1 = a, l2 = b;
    return {l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0),
            4.0 * l0 * l1, 4.0 * l1 * l2, 4.0 * l2 * l0};
}

inline std::array<Vec2, 6> p2_ref_grads(double a, double b) {
    const double l0 = 1.0 - a - b, l1 = a, l2 = b;
    // dl0 = (-1,-1), dl1 = (1,0), dl2 = (0,1)
    return {{{-(4.0 * l0 - 1.0), -(4.0 * l0 - 1.0)},
             {4.0 * l1 - 1.0, 0.0},
             {0.0, 4.0 * l2 - 1.0},
             {4.0 * (l0 - l1), -4.0 * l1},
             {4.0 * l2, 4.0 * l1},
             {-4.0 * l2, 4.0 * (l0 - l2)}}};
}

inline std::array<double, 3> p1_values(double a, double b) {
    return {1.0 - a - b, a, b};
}

inline constexpr std::array<Vec2, 3> p1_ref_grads = {{{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}}};

/// Affine map and gradient transform of one triangle.
struct ElementGeom {
    double x0, y0;
    double j00, j01, j10, j11;  // [v1-v0 | v2-v0]
    double det;                 // = 2 * area, positive for CCW triangles
    double g00, g01, g10, g11;  // J^{-T}

    ElementGeom(const TriMesh& mesh, int t) {
        const auto& tri = mesh.triangles[t];
        const Vec2& p0 = mesh.vertices[tri[0]];
        const Vec2& p1 = mesh.vertices[tri[1]];
        const Vec2& p2 = mesh.vertices[tri[2]];
        x0 = p0.x;
        y0 = p0.y;
        j00 = p1.x - p0.x;
        j10 = p1.y - p0.y;
        j01 = p2.x - p0.x;
        j11 = p2.y - p0.y;
        det = j00 * j11 - j01 * j10;
        const double inv = 1.0 / det;
        // J^{-1} = inv * [j11 -j01; -j10 j00]; transpose for gradients.
        g00 = j11 * inv;
        g01 = -j10 * inv;
        g10 = -j01 * inv;
        g11 = j00 * inv;
    }

    Vec2 map(double a, double b) const { return {x0 + j00 * a + j01 * b, y0 + j10 * a + j11 * b}; }
    Vec2 grad(const Vec2& ref) const { return {g00 * ref.x + g01 * ref.y, g10 * ref.x + g11 * ref.y}; }
    double area() const { return 0.5 * det; }
};

// ---------------------------------------------------------------------------
// Degrees of freedom.
// ---------------------------------------------------------------------------

enum class Field { velocity, stress, pressure };

/// Index map for the mixed space: continuous P2 velocity (2 components on
/// vertex and edge-midpoint nodes), element-local P1 symmetric stress
/// (components s11, s12, s22 at the three corners of each triangle, nothing
/// shared between triangles), continuous P1 pressure. The global coefficient
/// vector is ordered (velocity | stress | pressure).
class DofLayout {
public:
    explicit DofLayout(const TriMesh& mesh) : mesh_(&mesh), topo_(build_edge_topology(mesh)) {
        n_vel_nodes_ = mesh.n_vertices() + topo_.n_edges();
        n_velocity_ = 2 * n_vel_nodes_;
        n_stress_ = 9 * mesh.n_triangles();
        n_pressure_ = mesh.n_vertices();
    }

    const TriMesh& mesh() const { return *mesh_; }
    const EdgeTopology& topology() const { return topo_; }

    int n_velocity() const { return n_velocity_; }
    int n_stress() const { return n_stress_; }
    int n_pressure() const { return n_pressure_; }
    int n_total() const { return n_velocity_ + n_stress_ + n_pressure_; }

    int velocity_offset() const { return 0; }
    int stress_offset() const { return n_velocity_; }
    int pressure_offset() const { return n_velocity_ + n_stress_; }

    int n_velocity_nodes() const { return n_vel_nodes_; }

    /// node: vertex id for node < #vertices, else #vertices + edge id.
    int velocity_dof(int node, int comp) const { return 2 * node + comp; }

    Vec2 velocity_node_coord(int node) const {
        const int nv = mesh_->n_vertices();
        if (node < nv) return mesh_->vertices[node];
        const auto& e = topo_.edges[node - nv];
        return {0.5 * (mesh_->vertices[e[0]].x + mesh_->vertices[e[1]].x),
                0.5 * (mesh_->vertices[e[0]].y + mesh_->vertices[e[1]].y)};
    }

    /// comp: 0 = s11, 1 = s12, 2 = s22.
    int stress_dof(int tri, int corner, int comp) const {
        return stress_offset() + 9 * tri + 3 * corner + comp;
    }

    int pressure_dof(int vertex) const { return pressure_offset() + vertex; }

    /// P2 velocity nodes of triangle t in reference order.
    std::array<int, 6> velocity_nodes(int t) const {
        const auto& tri = mesh_->triangles[t];
        const auto& te = topo_.triangle_edges[t];
        const int nv = mesh_->n_vertices();
        return {tri[0], tri[1], tri[2], nv + te[0], nv + te[1], nv + te[2]};
    }

    Field field_of(int dof) const {
        if (dof < stress_offset()) return Field::velocity;
        if (dof < pressure_offset()) return Field::stress;
        return Field::pressure;
    }

private:
    const TriMesh* mesh_;
    EdgeTopology topo_;
    int n_vel_nodes_;
    int n_velocity_;
    int n_stress_;
    int n_pressure_;
};

/// One iterate of the coupled solve: the concatenated (u | sigma | p)
/// coefficient vector together with its layout.
struct DiscreteState {
    Eigen::VectorXd coeffs;
    const DofLayout* layout = nullptr;

    static DiscreteState zero(const DofLayout& layout) {
        return {Eigen::VectorXd::Zero(layout.n_total()), &layout};
    }

    auto velocity() { return coeffs.segment(layout->velocity_offset(), layout->n_velocity()); }
    auto velocity() const { return coeffs.segment(layout->velocity_offset(), layout->n_velocity()); }
    auto stress() { return coeffs.segment(layout->stress_offset(), layout->n_stress()); }
    auto stress() const { return coeffs.segment(layout->stress_offset(), layout->n_stress()); }
    auto pressure() { return coeffs.segment(layout->pressure_offset(), layout->n_pressure()); }
    auto pressure() const { return coeffs.segment(layout->pressure_offset(), layout->n_pressure()); }
};

// ---------------------------------------------------------------------------
// Interpolation.
// ---------------------------------------------------------------------------

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<Vec2(double, double)>;
/// Returns (s11, s12, s22).
using TensorField = std::function<std::array<double, 3>(double, double)>;

/// Nodal interpolant of an analytic velocity field; returns the velocity
/// coefficient block.
inline Eigen::VectorXd interpolate_velocity(const VectorField& f, const DofLayout& layout) {
    Eigen::VectorXd block(layout.n_velocity());
    for (int n = 0; n < layout.n_velocity_nodes(); ++n) {
        const Vec2 x = layout.velocity_node_coord(n);
        const Vec2 v = f(x.x, x.y);
        block[layout.velocity_dof(n, 0)] = v.x;
        block[layout.velocity_dof(n, 1)] = v.y;
    }
    return block;
}

inline Eigen::VectorXd interpolate_pressure(const ScalarField& f, const DofLayout& layout) {
    Eigen::VectorXd block(layout.n_pressure());
    const TriMesh& mesh = layout.mesh();
    for (int v = 0; v < mesh.n_vertices(); ++v) block[v] = f(mesh.vertices[v].x, mesh.vertices[v].y);
    return block;
}

/// Per-element corner values; discontinuous across elements by construction.
inline Eigen::VectorXd interpolate_stress(const TensorField& f, const DofLayout& layout) {
    Eigen::VectorXd block(layout.n_stress());
    const TriMesh& mesh = layout.mesh();
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        for (int corner = 0; corner < 3; ++corner) {
            const Vec2& x = mesh.vertices[mesh.triangles[t][corner]];
            const auto s = f(x.x, x.y);
            for (int c = 0; c < 3; ++c) block[9 * t + 3 * corner + c] = s[c];
        }
    }
    return block;
}

// ---------------------------------------------------------------------------
// Norms.
// ---------------------------------------------------------------------------

struct FieldNorms {
    double L2_u = 0.0;
    double H1semi_u = 0.0;
    double L2_sigma = 0.0;
    double L2_p = 0.0;
    double Dnorm_u = 0.0;  // ||D(u)||
    double star = 0.0;     // (||D(u)||^2 + ||sigma||^2)^{1/2}

    double H1_u() const { return std::sqrt(L2_u * L2_u + H1semi_u * H1semi_u); }
};

/// Quadrature-exact L2/H1 norms of a discrete state (all integrands are
/// polynomials of degree <= 4).
inline FieldNorms norms(const DiscreteState& state) {
    const DofLayout& layout = *state.layout;
    const TriMesh& mesh = layout.mesh();
    double u2 = 0.0, gu2 = 0.0, s2 = 0.0, p2 = 0.0, d2 = 0.0;
    const auto& rule = tri_rule_deg4();
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeom geom(mesh, t);
        const auto nodes = layout.velocity_nodes(t);
        const auto& tri = mesh.triangles[t];
        for (const QuadPoint& q : rule) {
            const double wq = q.w * geom.area();  // rule weights sum to 1
            const auto N = p2_values(q.a, q.b);
            const auto dN = p2_ref_grads(q.a, q.b);
            double ux = 0, uy = 0;
            double g00 = 0, g01 = 0, g10 = 0, g11 = 0;  // (grad u)_{ij} = du_i/dx_j
            for (int a = 0; a < 6; ++a) {
                const double cx = state.coeffs[layout.velocity_dof(nodes[a], 0)];
                const double cy = state.coeffs[layout.velocity_dof(nodes[a], 1)];
                const Vec2 g = geom.grad(dN[a]);
                ux += cx * N[a];
                uy += cy * N[a];
                g00 += cx * g.x;
                g01 += cx * g.y;
                g10 += cy * g.x;
                g11 += cy * g.y;
            }
            const auto L = p1_values(q.a, q.b);
            double s11 = 0, s12 = 0, s22 = 0, p = 0;
            for (int c = 0; c < 3; ++c) {
                s11 += state.coeffs[layout.stress_dof(t, c, 0)] * L[c];
                s12 += state.coeffs[layout.stress_dof(t, c, 1)] * L[c];
                s22 += state.coeffs[layout.stress_dof(t, c, 2)] * L[c];
                p += state.coeffs[layout.pressure_dof(tri[c])] * L[c];
            }
            const double d11 = g00, d22 = g11, d12 = 0.5 * (g01 + g10);
            u2 += wq * (ux * ux + uy * uy);
            gu2 += wq * (g00 * g00 + g01 * g01 + g10 * g10 + g11 * g11);
            d2 += wq * (d11 * d11 + 2.0 * d12 * d12 + d22 * d22);
            s2 += wq * (s11 * s11 + 2.0 * s12 * s12 + s22 * s22);
            p2 += wq * p * p;
        }
    }
    FieldNorms out;
    out.L2_u = std::sqrt(u2);
    out.H1semi_u = std::sqrt(gu2);
    out.L2_sigma = std::sqrt(s2);
    out.L2_p = std::sqrt(p2);
    out.Dnorm_u = std::sqrt(d2);
    out.star = std::sqrt(d2 + s2);
    return out;
}

inline double domain_area(const TriMesh& mesh) {
    double a = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) a += mesh.signed_area(t);
    return a;
}

inline double pressure_mean(const DiscreteState& state) {
    const DofLayout& layout = *state.layout;
    const TriMesh& mesh = layout.mesh();
    double integral = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        double sum = 0.0;
        for (int c = 0; c < 3; ++c) sum += state.coeffs[layout.pressure_dof(tri[c])];
        integral += mesh.signed_area(t) * sum / 3.0;
    }
    return integral / domain_area(mesh);
}

/// Shifts the pressure block so the (piecewise-linear, hence exactly
/// integrated) mean of p over the domain is zero.
inline void shift_pressure_to_zero_mean(DiscreteState& state) {
    state.pressure().array() -= pressure_mean(state);
}

// ---------------------------------------------------------------------------
// Velocity boundary conditions.
// ---------------------------------------------------------------------------

enum class BcKind {
    dirichlet,  // both components prescribed by the registered function
    symmetry,   // normal (y) component set to zero, tangential free
    natural,    // nothing constrained (do-nothing outflow)
};

struct VelocityBc {
    BcKind kind = BcKind::natural;
    VectorField value;  // required for dirichlet

    static VelocityBc dirichlet(VectorField f) { return {BcKind::dirichlet, std::move(f)}; }
    static VelocityBc zero() {
        return {BcKind::dirichlet, [](double, double) { return Vec2{0.0, 0.0}; }};
    }
    static VelocityBc symmetry() { return {BcKind::symmetry, {}}; }
    static VelocityBc natural() { return {BcKind::natural, {}}; }
};

using BcRegistry = std::map<BoundaryLabel, VelocityBc>;

/// Constrained velocity coefficients implied by a registry on a mesh.
/// Throws if a boundary label has no registered condition or two conditions
/// disagree at a shared node.
inline std::map<int, double> dirichlet_values(const BcRegistry& bcs, const DofLayout& layout) {
    const TriMesh& mesh = layout.mesh();
    const EdgeTopology& topo = layout.topology();
    std::map<std::pair<int, int>, int> edge_ids;
    for (int e = 0; e < topo.n_edges(); ++e)
        edge_ids.emplace(std::make_pair(topo.edges[e][0], topo.edges[e][1]), e);

    std::map<int, double> values;
    auto set_value = [&](int dof, double v) {
        auto [it, inserted] = values.emplace(dof, v);
        if (!inserted && std::abs(it->second - v) > 1e-12 * (1.0 + std::abs(v)))
            throw std::invalid_argument("dirichlet_values: conflicting boundary values at dof " +
                                        std::to_string(dof));
    };

    for (const BoundaryEdge& be : mesh.boundary_edges) {
        const auto bc_it = bcs.find(be.label);
        if (bc_it == bcs.end())
            throw std::invalid_argument(std::string("dirichlet_values: no condition registered for label ") +
                                        to_string(be.label));
        const VelocityBc& bc = bc_it->second;
        if (bc.kind == BcKind::natural) continue;

        const auto eid_it = edge_ids.find(std::minmax(be.v0, be.v1));
        if (eid_it == edge_ids.end())
            throw std::logic_error("dirichlet_values: boundary edge not found in topology");
        const int mid_node = mesh.n_vertices() + eid_it->second;

        const std::array<int, 3> nodes = {be.v0, be.v1, mid_node};
        for (int node : nodes) {
            const Vec2 x = layout.velocity_node_coord(node);
            if (bc.kind == BcKind::dirichlet) {
                const Vec2 v = bc.value(x.x, x.y);
                set_value(layout.velocity_dof(node, 0), v.x);
                set_value(layout.velocity_dof(node, 1), v.y);
            } else {  // symmetry
                set_value(layout.velocity_dof(node, 1), 0.0);
            }
        }
    }
    return values;
}

/// Row replacement with symmetric column elimination: constrained rows become
/// identity rows carrying the boundary value, and the matching columns are
/// folded into the right-hand side so the elimination is exact. Requires the
/// matrix to carry explicit diagonal entries (the assembler guarantees this).
/// Applying the same constraints twice is a no-op.
inline void apply_constraints(const std::map<int, double>& constraints,
                              Eigen::SparseMatrix<double>& matrix, Eigen::VectorXd& rhs) {
    std::vector<char> constrained(matrix.rows(), 0);
    for (const auto& [dof, value] : constraints) constrained[dof] = 1;

    for (int col = 0; col < matrix.outerSize(); ++col) {
        const bool col_fixed = constrained[col];
        const double col_value = col_fixed ? constraints.at(col) : 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, col); it; ++it) {
            const int row = static_cast<int>(it.row());
            if (constrained[row]) {
                it.valueRef() = (row == col) ? 1.0 : 0.0;
            } else if (col_fixed) {
                rhs[row] -= it.value() * col_value;
                it.valueRef() = 0.0;
            }
        }
    }
    for (const auto& [dof, value] : constraints) rhs[dof] = value;
}

/// Velocity Dirichlet/symmetry enforcement on an assembled system.
inline void apply_dirichlet_velocity(const BcRegistry& bcs, Eigen::SparseMatrix<double>& matrix,
                                     Eigen::VectorXd& rhs, const DofLayout& layout) {
    apply_constraints(dirichlet_values(bcs, layout), matrix, rhs);
}

/// True when every boundary segment constrains the normal velocity, i.e. the
/// pressure is only determined up to a constant and must be pinned.
inline bool is_enclosed(const BcRegistry& bcs, const TriMesh& mesh) {
    for (const BoundaryEdge& be : mesh.boundary_edges) {
        const auto it = bcs.find(be.label);
        if (it == bcs.end() || it->second.kind == BcKind::natural) return false;
    }
    return true;
}

}  // namespace oldroyd
