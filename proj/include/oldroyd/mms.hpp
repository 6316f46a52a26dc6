#pragma once

#include <array>
#include <cmath>

#include "oldroyd/assembly.hpp"
#include "oldroyd/fe_space.hpp"
#include "oldroyd/quadrature.hpp"

namespace oldroyd {

/// Manufactured problem on the unit square with homogeneous velocity walls:
/// u = curl(psi) with psi = x^2(1-x)^2 y^2(1-y)^2 (divergence-free, vanishing
/// gradient on the boundary), p = x^3 + y^3 - 1/2 (zero mean), and the stress
/// of the Stokes limit sigma = 2 alpha D(u). The body force f = -Laplace(u)
/// + grad(p) makes (u, sigma, p) the exact solution at lambda = 0; for
/// lambda > 0 the same force defines a nearby fixed point that the iteration
/// tests measure against a fully converged discrete reference.
struct MmsProblem {
    double alpha = 0.5;

    static double g(double t) { return t * t * (1.0 - t) * (1.0 - t); }
    static double dg(double t) { return 2.0 * t - 6.0 * t * t + 4.0 * t * t * t; }
    static double d2g(double t) { return 2.0 - 12.0 * t + 12.0 * t * t; }
    static double d3g(double t) { return -12.0 + 24.0 * t; }

    Vec2 velocity(double x, double y) const { return {g(x) * dg(y), -dg(x) * g(y)}; }

    /// (du1/dx, du1/dy, du2/dx, du2/dy)
    std::array<double, 4> velocity_gradient(double x, double y) const {
        return {dg(x) * dg(y), g(x) * d2g(y), -d2g(x) * g(y), -dg(x) * dg(y)};
    }

    double pressure(double x, double y) const { return x * x * x + y * y * y - 0.5; }

    /// Stokes-limit stress 2 alpha D(u) as (s11, s12, s22).
    std::array<double, 3> stress(double x, double y) const {
        const double d11 = dg(x) * dg(y);
        const double d12 = 0.5 * (g(x) * d2g(y) - d2g(x) * g(y));
        return {2.0 * alpha * d11, 2.0 * alpha * d12, -2.0 * alpha * d11};
    }

    Vec2 body_force(double x, double y) const {
        const double lap_u1 = d2g(x) * dg(y) + g(x) * d3g(y);
        const double lap_u2 = -(d3g(x) * g(y) + dg(x) * d2g(y));
        return {-lap_u1 + 3.0 * x * x, -lap_u2 + 3.0 * y * y};
    }

    PhysicalParams params(double lambda) const {
        PhysicalParams p;
        p.lambda = lambda;
        p.alpha_frac = alpha;
        p.body_force = [*this](double x, double y) { return body_force(x, y); };
        return p;
    }

    BcRegistry bcs() const { return {{BoundaryLabel::wall, VelocityBc::zero()}}; }
};

struct MmsErrors {
    double u_L2 = 0.0;
    double u_H1semi = 0.0;
    double sigma_L2 = 0.0;
};

/// Discretization errors against the analytic fields, integrated with a
/// subdivided degree-5 rule so quadrature error stays far below the h^3
/// convergence floor being measured.
inline MmsErrors mms_errors(const DiscreteState& state, const MmsProblem& mms) {
    const DofLayout& layout = *state.layout;
    const TriMesh& mesh = layout.mesh();
    double eu2 = 0.0, egu2 = 0.0, es2 = 0.0;
    const auto& rule = tri_rule_subdivided<2>();
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeom geom(mesh, t);
        const auto nodes = layout.velocity_nodes(t);
        for (const QuadPoint& q : rule) {
            const double wq = q.w * geom.area();
            const auto N = p2_values(q.a, q.b);
            const auto dN = p2_ref_grads(q.a, q.b);
            double ux = 0, uy = 0, a00 = 0, a01 = 0, a10 = 0, a11 = 0;
            for (int a = 0; a < 6; ++a) {
                const double cx = state.coeffs[layout.velocity_dof(nodes[a], 0)];
                const double cy = state.coeffs[layout.velocity_dof(nodes[a], 1)];
                const Vec2 gp = geom.grad(dN[a]);
                ux += cx * N[a];
                uy += cy * N[a];
                a00 += cx * gp.x;
                a01 += cx * gp.y;
                a10 += cy * gp.x;
                a11 += cy * gp.y;
            }
            const auto L = p1_values(q.a, q.b);
            double s[3] = {0, 0, 0};
            for (int c = 0; c < 3; ++c)
                for (int i = 0; i < 3; ++i) s[c] += state.coeffs[layout.stress_dof(t, i, c)] * L[i];

            const Vec2 x = geom.map(q.a, q.b);
            const Vec2 ue = mms.velocity(x.x, x.y);
            const auto ge = mms.velocity_gradient(x.x, x.y);
            const auto se = mms.stress(x.x, x.y);
            eu2 += wq * ((ux - ue.x) * (ux - ue.x) + (uy - ue.y) * (uy - ue.y));
            egu2 += wq * ((a00 - ge[0]) * (a00 - ge[0]) + (a01 - ge[1]) * (a01 - ge[1]) +
                          (a10 - ge[2]) * (a10 - ge[2]) + (a11 - ge[3]) * (a11 - ge[3]));
            es2 += wq * ((s[0] - se[0]) * (s[0] - se[0]) + 2.0 * (s[1] - se[1]) * (s[1] - se[1]) +
                         (s[2] - se[2]) * (s[2] - se[2]));
        }
    }
    return {std::sqrt(eu2), std::sqrt(egu2), std::sqrt(es2)};
}

}  // namespace oldroyd
