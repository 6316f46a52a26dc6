#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "oldroyd/fe_space.hpp"

namespace oldroyd {

struct PhysicalParams {
    double lambda = 0.0;      // Weissenberg number, >= 0
    double alpha_frac = 0.5;  // viscoelastic viscosity fraction, in (0,1)
    VectorField body_force;   // defaults to zero

    void validate() const {
        if (!(lambda >= 0.0)) throw std::invalid_argument("PhysicalParams: lambda must be >= 0");
        if (!(alpha_frac > 0.0 && alpha_frac < 1.0))
            throw std::invalid_argument("PhysicalParams: alpha_frac must satisfy 0 < alpha < 1");
    }

    Vec2 force(double x, double y) const { return body_force ? body_force(x, y) : Vec2{0.0, 0.0}; }
};

struct SparseSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
};

// Frobenius weights of the symmetric-tensor component order (s11, s12, s22):
// the off-diagonal entry appears twice in S:T.
inline constexpr double kStressWeight[3] = {1.0, 2.0, 1.0};

namespace detail {

/// Per-quadrature-point evaluation shared by the element kernels.
struct VelocityEval {
    double ux = 0, uy = 0;
    double a00 = 0, a01 = 0, a10 = 0, a11 = 0;  // (grad u)_{ij} = du_i/dx_j
};

template <class Coeff>
VelocityEval eval_velocity(const Coeff& u, const DofLayout& layout, const std::array<int, 6>& nodes,
                           const std::array<double, 6>& N, const std::array<Vec2, 6>& gN) {
    VelocityEval v;
    for (int a = 0; a < 6; ++a) {
        const double cx = u[layout.velocity_dof(nodes[a], 0)];
        const double cy = u[layout.velocity_dof(nodes[a], 1)];
        v.ux += cx * N[a];
        v.uy += cy * N[a];
        v.a00 += cx * gN[a].x;
        v.a01 += cx * gN[a].y;
        v.a10 += cy * gN[a].x;
        v.a11 += cy * gN[a].y;
    }
    return v;
}

/// Symmetric deformation-rate components (d11, d12, d22) of velocity basis
/// function (node a, component e), plus its divergence.
struct BasisD {
    double d[3];
    double div;
};

inline BasisD basis_deformation(const Vec2& g, int e) {
    BasisD out;
    if (e == 0) {
        out.d[0] = g.x;
        out.d[1] = 0.5 * g.y;
        out.d[2] = 0.0;
        out.div = g.x;
    } else {
        out.d[0] = 0.0;
        out.d[1] = 0.5 * g.x;
        out.d[2] = g.y;
        out.div = g.y;
    }
    return out;
}

}  // namespace detail

/// Assembles the parts of the linearized system that do not depend on the
/// Picard background velocity, and the convection/rotation block that enters
/// with a factor lambda, so one background update per step only rebuilds the
/// latter. Unknown ordering matches DofLayout: (u | sigma | p).
///
/// Rows are test functions:
///   stress row:    (sigma,tau) + lambda*[ b(u_k,sigma,tau) - (grad(u_k) sigma,tau)
///                  - (sigma grad(u_k)^T,tau) ] - 2 alpha (D(u),tau) = 0
///   momentum row:  (sigma,D(v)) + 2(1-alpha)(D(u),D(v)) - (p,div v) = (f,v)
///   continuity row:(q,div u) = 0
///
/// The convection form b is integrated elementwise in its skew-symmetrized
/// form 1/2[((u.grad)sigma,tau) - ((u.grad)tau,sigma)], which vanishes
/// identically for sigma = tau on the broken stress space; for conforming
/// fields with impermeable boundaries it coincides with the divergence form
/// ((u.grad)sigma,tau) + 1/2((div u)sigma,tau).
class PicardAssembler {
public:
    PicardAssembler(const DofLayout& layout, const PhysicalParams& params)
        : layout_(&layout), params_(params) {
        params_.validate();
        build_base();
    }

    const DofLayout& layout() const { return *layout_; }
    const PhysicalParams& params() const { return params_; }
    const Eigen::SparseMatrix<double>& base_matrix() const { return base_; }
    const Eigen::VectorXd& load() const { return load_; }

    /// Stress-stress convection + rotation block for background u_k, without
    /// the lambda factor.
    Eigen::SparseMatrix<double> convection_rotation(const Eigen::VectorXd& u_k) const {
        check_velocity_block(u_k);
        const DofLayout& layout = *layout_;
        const TriMesh& mesh = layout.mesh();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(std::size_t(mesh.n_triangles()) * 90);
        const auto& rule = tri_rule_deg4();
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const ElementGeom geom(mesh, t);
            const auto nodes = layout.velocity_nodes(t);
            std::array<Vec2, 3> gL;
            for (int i = 0; i < 3; ++i) gL[i] = geom.grad(p1_ref_grads[i]);
            double conv[3][3] = {};   // pairs (test i, trial j), componentwise
            double rot[3][3][3][3];   // [i][j][c][d]
            for (auto& a : rot)
                for (auto& b : a)
                    for (auto& c : b) c[0] = c[1] = c[2] = 0.0;
            for (const QuadPoint& q : rule) {
                const double wq = q.w * geom.area();
                const auto N = p2_values(q.a, q.b);
                const auto gN = p2_ref_grads_phys(geom, q.a, q.b);
                const auto v = detail::eval_velocity(u_k, layout, nodes, N, gN);
                const auto L = p1_values(q.a, q.b);
                // R maps (s11,s12,s22) to the components of A S + S A^T.
                const double R[3][3] = {{2.0 * v.a00, 2.0 * v.a01, 0.0},
                                        {v.a10, v.a00 + v.a11, v.a01},
                                        {0.0, 2.0 * v.a10, 2.0 * v.a11}};
                for (int i = 0; i < 3; ++i) {
                    const double udgi = v.ux * gL[i].x + v.uy * gL[i].y;
                    for (int j = 0; j < 3; ++j) {
                        const double udgj = v.ux * gL[j].x + v.uy * gL[j].y;
                        conv[i][j] += wq * 0.5 * (udgj * L[i] - udgi * L[j]);
                        const double mass_ij = wq * L[i] * L[j];
                        for (int c = 0; c < 3; ++c)
                            for (int d = 0; d < 3; ++d) rot[i][j][c][d] -= mass_ij * R[c][d];
                    }
                }
            }
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    for (int c = 0; c < 3; ++c) {
                        const int row = layout.stress_dof(t, i, c);
                        trip.emplace_back(row, layout.stress_dof(t, j, c), kStressWeight[c] * conv[i][j]);
                        for (int d = 0; d < 3; ++d) {
                            const double val = kStressWeight[c] * rot[i][j][c][d];
                            if (val != 0.0) trip.emplace_back(row, layout.stress_dof(t, j, d), val);
                        }
                    }
        }
        Eigen::SparseMatrix<double> P(layout.n_total(), layout.n_total());
        P.setFromTriplets(trip.begin(), trip.end());
        return P;
    }

    /// Full linearized system for the given background velocity block,
    /// base + lambda * convection_rotation(u_k). No boundary conditions yet.
    SparseSystem assemble(const Eigen::VectorXd& u_k) const {
        check_velocity_block(u_k);
        if (!u_k.allFinite()) throw std::domain_error("assemble: non-finite background velocity");
        SparseSystem sys;
        if (params_.lambda == 0.0) {
            sys.matrix = base_;
        } else {
            sys.matrix = base_ + params_.lambda * convection_rotation(u_k);
        }
        sys.rhs = load_;
        return sys;
    }

private:
    void check_velocity_block(const Eigen::VectorXd& u_k) const {
        if (u_k.size() != layout_->n_velocity())
            throw std::invalid_argument("PicardAssembler: velocity block has wrong dimension");
    }

    static std::array<Vec2, 6> p2_ref_grads_phys(const ElementGeom& geom, double a, double b) {
        const auto ref = p2_ref_grads(a, b);
        std::array<Vec2, 6> out;
        for (int i = 0; i < 6; ++i) out[i] = geom.grad(ref[i]);
        return out;
    }

    void build_base() {
        const DofLayout& layout = *layout_;
        const TriMesh& mesh = layout.mesh();
        const double alpha = params_.alpha_frac;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(std::size_t(mesh.n_triangles()) * 700 + std::size_t(layout.n_total()));
        load_ = Eigen::VectorXd::Zero(layout.n_total());
        const auto& rule = tri_rule_deg4();

        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const ElementGeom geom(mesh, t);
            const auto nodes = layout.velocity_nodes(t);
            const auto& tri = mesh.triangles[t];

            double mass[3][3] = {};        // P1 x P1
            double kuu[12][12] = {};       // 2(1-alpha)(D(u),D(v))
            double kus[12][9] = {};        // (sigma, D(v))
            double kup[12][3] = {};        // -(p, div v)
            double rhs_loc[12] = {};

            for (const QuadPoint& q : rule) {
                const double wq = q.w * geom.area();
                const auto N = p2_values(q.a, q.b);
                const auto gN = p2_ref_grads_phys(geom, q.a, q.b);
                const auto L = p1_values(q.a, q.b);
                const Vec2 x = geom.map(q.a, q.b);
                const Vec2 f = params_.force(x.x, x.y);

                detail::BasisD D[12];
                for (int a = 0; a < 6; ++a)
                    for (int e = 0; e < 2; ++e) D[2 * a + e] = detail::basis_deformation(gN[a], e);

                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) mass[i][j] += wq * L[i] * L[j];

                for (int la = 0; la < 12; ++la) {
                    rhs_loc[la] += wq * ((la % 2 == 0) ? f.x : f.y) * N[la / 2];
                    for (int lb = 0; lb < 12; ++lb) {
                        const double dd = D[la].d[0] * D[lb].d[0] + 2.0 * D[la].d[1] * D[lb].d[1] +
                                          D[la].d[2] * D[lb].d[2];
                        kuu[la][lb] += wq * 2.0 * (1.0 - alpha) * dd;
                    }
                    for (int j = 0; j < 3; ++j) {
                        for (int d = 0; d < 3; ++d)
                            kus[la][3 * j + d] += wq * kStressWeight[d] * L[j] * D[la].d[d];
                        kup[la][j] -= wq * L[j] * D[la].div;
                    }
                }
            }

            auto vdof = [&](int l) { return layout.velocity_dof(nodes[l / 2], l % 2); };
            for (int la = 0; la < 12; ++la) {
                const int row = vdof(la);
                load_[row] += rhs_loc[la];
                for (int lb = 0; lb < 12; ++lb) trip.emplace_back(row, vdof(lb), kuu[la][lb]);
                for (int ls = 0; ls < 9; ++ls) {
                    const int sdof = layout.stress_dof(t, ls / 3, ls % 3);
                    // momentum <- stress, and the stress-row coupling -2 alpha (D(u),tau)
                    trip.emplace_back(row, sdof, kus[la][ls]);
                    trip.emplace_back(sdof, row, -2.0 * alpha * kus[la][ls]);
                }
                for (int j = 0; j < 3; ++j) {
                    const int pdof = layout.pressure_dof(tri[j]);
                    trip.emplace_back(row, pdof, kup[la][j]);
                    trip.emplace_back(pdof, row, -kup[la][j]);  // continuity = -(pressure column)^T
                }
            }
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    for (int c = 0; c < 3; ++c)
                        trip.emplace_back(layout.stress_dof(t, i, c), layout.stress_dof(t, j, c),
                                          kStressWeight[c] * mass[i][j]);
        }

        // Explicit diagonal everywhere so constraint rows can be written
        // in place later without changing the sparsity pattern.
        for (int i = 0; i < layout.n_total(); ++i) trip.emplace_back(i, i, 0.0);

        base_.resize(layout.n_total(), layout.n_total());
        base_.setFromTriplets(trip.begin(), trip.end());
    }

    const DofLayout* layout_;
    PhysicalParams params_;
    Eigen::SparseMatrix<double> base_;
    Eigen::VectorXd load_;
};

/// One-shot assembly of the linearized Picard system.
inline SparseSystem assemble_picard_system(const DofLayout& layout, const PhysicalParams& params,
                                           const Eigen::VectorXd& u_k) {
    return PicardAssembler(layout, params).assemble(u_k);
}

/// Discrete convection form b(u, sigma, tau) as assembled (elementwise
/// skew-symmetrized divergence form); exactly zero when sigma == tau.
inline double evaluate_form_b(const Eigen::VectorXd& u, const Eigen::VectorXd& sigma,
                              const Eigen::VectorXd& tau, const DofLayout& layout) {
    if (u.size() != layout.n_velocity() || sigma.size() != layout.n_stress() ||
        tau.size() != layout.n_stress())
        throw std::invalid_argument("evaluate_form_b: block dimension mismatch");
    const TriMesh& mesh = layout.mesh();
    double value = 0.0;
    const auto& rule = tri_rule_deg4();
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeom geom(mesh, t);
        const auto nodes = layout.velocity_nodes(t);
        std::array<Vec2, 3> gL;
        for (int i = 0; i < 3; ++i) gL[i] = geom.grad(p1_ref_grads[i]);
        // Constant (broken) gradients of the P1 stress components.
        double gs[3][2] = {}, gt[3][2] = {};
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 3; ++i) {
                gs[c][0] += sigma[9 * t + 3 * i + c] * gL[i].x;
                gs[c][1] += sigma[9 * t + 3 * i + c] * gL[i].y;
                gt[c][0] += tau[9 * t + 3 * i + c] * gL[i].x;
                gt[c][1] += tau[9 * t + 3 * i + c] * gL[i].y;
            }
        for (const QuadPoint& q : rule) {
            const double wq = q.w * geom.area();
            const auto N = p2_values(q.a, q.b);
            const auto gN = [&] {
                const auto ref = p2_ref_grads(q.a, q.b);
                std::array<Vec2, 6> out;
                for (int i = 0; i < 6; ++i) out[i] = geom.grad(ref[i]);
                return out;
            }();
            const auto v = detail::eval_velocity(u, layout, nodes, N, gN);
            const auto L = p1_values(q.a, q.b);
            double integrand = 0.0;
            for (int c = 0; c < 3; ++c) {
                double sc = 0.0, tc = 0.0;
                for (int i = 0; i < 3; ++i) {
                    sc += sigma[9 * t + 3 * i + c] * L[i];
                    tc += tau[9 * t + 3 * i + c] * L[i];
                }
                const double uds = v.ux * gs[c][0] + v.uy * gs[c][1];
                const double udt = v.ux * gt[c][0] + v.uy * gt[c][1];
                integrand += kStressWeight[c] * 0.5 * (uds * tc - udt * sc);
            }
            value += wq * integrand;
        }
    }
    return value;
}

/// Magnitude reference for relative comparisons against evaluate_form_b:
/// the quadrature sum of |((u.grad)sigma):tau| + 1/2|(div u)(sigma:tau)|.
inline double form_b_magnitude(const Eigen::VectorXd& u, const Eigen::VectorXd& sigma,
                               const Eigen::VectorXd& tau, const DofLayout& layout) {
    const TriMesh& mesh = layout.mesh();
    double value = 0.0;
    const auto& rule = tri_rule_deg4();
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeom geom(mesh, t);
        const auto nodes = layout.velocity_nodes(t);
        std::array<Vec2, 3> gL;
        for (int i = 0; i < 3; ++i) gL[i] = geom.grad(p1_ref_grads[i]);
        double gs[3][2] = {};
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 3; ++i) {
                gs[c][0] += sigma[9 * t + 3 * i + c] * gL[i].x;
                gs[c][1] += sigma[9 * t + 3 * i + c] * gL[i].y;
            }
        for (const QuadPoint& q : rule) {
            const double wq = q.w * geom.area();
            const auto N = p2_values(q.a, q.b);
            const auto gN = [&] {
                const auto ref = p2_ref_grads(q.a, q.b);
                std::array<Vec2, 6> out;
                for (int i = 0; i < 6; ++i) out[i] = geom.grad(ref[i]);
                return out;
            }();
            const auto v = detail::eval_velocity(u, layout, nodes, N, gN);
            const auto L = p1_values(q.a, q.b);
            double conv = 0.0, st = 0.0;
            for (int c = 0; c < 3; ++c) {
                double sc = 0.0, tc = 0.0;
                for (int i = 0; i < 3; ++i) {
                    sc += sigma[9 * t + 3 * i + c] * L[i];
                    tc += tau[9 * t + 3 * i + c] * L[i];
                }
                conv += kStressWeight[c] * (v.ux * gs[c][0] + v.uy * gs[c][1]) * tc;
                st += kStressWeight[c] * sc * tc;
            }
            value += wq * (std::abs(conv) + 0.5 * std::abs((v.a00 + v.a11) * st));
        }
    }
    return value;
}

/// Residual of the per-step energy identity
///   ||sigma||^2 + 4 alpha(1-alpha)||D(u)||^2
///     = 2 alpha (f,u) + lambda (grad(u_k) sigma, sigma) + lambda (sigma grad(u_k)^T, sigma),
/// which the solution of the assembled system satisfies to linear-solver
/// precision when the velocity boundary data is homogeneous.
inline double energy_identity_residual(const DiscreteState& state_next, const Eigen::VectorXd& u_k,
                                       const PhysicalParams& params, const DofLayout& layout) {
    const TriMesh& mesh = layout.mesh();
    const double alpha = params.alpha_frac;
    double s2 = 0.0, d2 = 0.0, fu = 0.0, rot = 0.0;
    const auto& rule = tri_rule_deg4();
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeom geom(mesh, t);
        const auto nodes = layout.velocity_nodes(t);
        for (const QuadPoint& q : rule) {
            const double wq = q.w * geom.area();
            const auto N = p2_values(q.a, q.b);
            const auto gN = [&] {
                const auto ref = p2_ref_grads(q.a, q.b);
                std::array<Vec2, 6> out;
                for (int i = 0; i < 6; ++i) out[i] = geom.grad(ref[i]);
                return out;
            }();
            const auto vnext = detail::eval_velocity(state_next.velocity(), layout, nodes, N, gN);
            const auto vk = detail::eval_velocity(u_k, layout, nodes, N, gN);
            const auto L = p1_values(q.a, q.b);
            double s[3] = {0.0, 0.0, 0.0};
            for (int c = 0; c < 3; ++c)
                for (int i = 0; i < 3; ++i)
                    s[c] += state_next.coeffs[layout.stress_dof(t, i, c)] * L[i];
            const double d11 = vnext.a00, d22 = vnext.a11, d12 = 0.5 * (vnext.a01 + vnext.a10);
            s2 += wq * (s[0] * s[0] + 2.0 * s[1] * s[1] + s[2] * s[2]);
            d2 += wq * (d11 * d11 + 2.0 * d12 * d12 + d22 * d22);
            const Vec2 x = geom.map(q.a, q.b);
            const Vec2 f = params.force(x.x, x.y);
            fu += wq * (f.x * vnext.ux + f.y * vnext.uy);
            const double R[3] = {2.0 * (vk.a00 * s[0] + vk.a01 * s[1]),
                                 vk.a10 * s[0] + (vk.a00 + vk.a11) * s[1] + vk.a01 * s[2],
                                 2.0 * (vk.a10 * s[1] + vk.a11 * s[2])};
            rot += wq * (R[0] * s[0] + 2.0 * R[1] * s[1] + R[2] * s[2]);
        }
    }
    return std::abs(s2 + 4.0 * alpha * (1.0 - alpha) * d2 - 2.0 * alpha * fu - params.lambda * rot);
}

}  // namespace oldroyd
