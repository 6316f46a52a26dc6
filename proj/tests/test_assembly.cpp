#include "oldroyd/assembly.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oldroyd/linear_solver.hpp"
#include "oldroyd/mms.hpp"

using namespace oldroyd;
using Eigen::VectorXd;

namespace {

VectorXd random_vector(int n, std::mt19937& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

/// Independent quadrature of the rotation term
/// (grad(u) S_s + S_s grad(u)^T, S_t); used as an oracle for the assembled
/// convection/rotation block.
double rotation_form(const VectorXd& u, const VectorXd& s, const VectorXd& t_blk,
                     const DofLayout& layout) {
    const TriMesh& mesh = layout.mesh();
    double value = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeom geom(mesh, t);
        const auto nodes = layout.velocity_nodes(t);
        for (const QuadPoint& q : tri_rule_deg4()) {
            const double wq = q.w * geom.area();
            const auto N = p2_values(q.a, q.b);
            const auto refg = p2_ref_grads(q.a, q.b);
            double a00 = 0, a01 = 0, a10 = 0, a11 = 0;
            for (int a = 0; a < 6; ++a) {
                const Vec2 g = geom.grad(refg[a]);
                const double cx = u[layout.velocity_dof(nodes[a], 0)];
                const double cy = u[layout.velocity_dof(nodes[a], 1)];
                a00 += cx * g.x;
                a01 += cx * g.y;
                a10 += cy * g.x;
                a11 += cy * g.y;
            }
            const auto L = p1_values(q.a, q.b);
            double sv[3] = {0, 0, 0}, tv[3] = {0, 0, 0};
            for (int c = 0; c < 3; ++c)
                for (int i = 0; i < 3; ++i) {
                    sv[c] += s[9 * t + 3 * i + c] * L[i];
                    tv[c] += t_blk[9 * t + 3 * i + c] * L[i];
                }
            const double R[3] = {2.0 * (a00 * sv[0] + a01 * sv[1]),
                                 a10 * sv[0] + (a00 + a11) * sv[1] + a01 * sv[2],
                                 2.0 * (a10 * sv[1] + a11 * sv[2])};
            value += wq * (R[0] * tv[0] + 2.0 * R[1] * tv[1] + R[2] * tv[2]);
        }
    }
    return value;
}

}  // namespace

TEST(Params, ValidatesViscosityFraction) {
    PhysicalParams p;
    p.alpha_frac = 1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.alpha_frac = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.alpha_frac = 0.3;
    p.lambda = -0.1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Assembly, ZeroBackgroundMatchesStokesLimitMatrix) {
    const TriMesh mesh = build_unit_square(3);
    const DofLayout layout(mesh);
    PhysicalParams params;
    params.alpha_frac = 0.4;
    params.lambda = 0.7;
    const PicardAssembler assembler(layout, params);

    // All lambda-terms carry the background velocity.
    const auto P0 = assembler.convection_rotation(VectorXd::Zero(layout.n_velocity()));
    EXPECT_EQ(P0.norm(), 0.0);
    const SparseSystem sys = assembler.assemble(VectorXd::Zero(layout.n_velocity()));
    EXPECT_NEAR((sys.matrix - assembler.base_matrix()).norm(), 0.0, 0.0);
}

TEST(Assembly, LambdaEntersLinearly) {
    const TriMesh mesh = build_unit_square(3);
    const DofLayout layout(mesh);
    std::mt19937 rng(31);
    const VectorXd u_k = random_vector(layout.n_velocity(), rng);

    auto matrix_at = [&](double lambda) {
        PhysicalParams params;
        params.alpha_frac = 0.4;
        params.lambda = lambda;
        return PicardAssembler(layout, params).assemble(u_k).matrix;
    };
    const auto A0 = matrix_at(0.0);
    const auto A1 = matrix_at(1.0);
    const auto A2 = matrix_at(2.0);
    const double scale = A1.norm();
    EXPECT_LT(((A2 - A0) - 2.0 * (A1 - A0)).norm(), 1e-12 * scale);
}

TEST(Assembly, ContinuityBlockIsNegativeTransposeOfPressureGradient) {
    const TriMesh mesh = build_unit_square(3);
    const DofLayout layout(mesh);
    PhysicalParams params;
    params.alpha_frac = 0.5;
    std::mt19937 rng(32);
    const SparseSystem sys =
        PicardAssembler(layout, params).assemble(random_vector(layout.n_velocity(), rng));

    for (int col = 0; col < sys.matrix.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, col); it; ++it) {
            const int r = int(it.row()), c = col;
            const bool vel_pressure = layout.field_of(r) == Field::velocity &&
                                      layout.field_of(c) == Field::pressure;
            if (!vel_pressure) continue;
            EXPECT_EQ(it.value(), -sys.matrix.coeff(c, r));  // exact, same quadrature path
        }
    }
}

TEST(Assembly, ViscousBlockIsPositiveSemidefinite) {
    const TriMesh mesh = build_unit_square(3);
    const DofLayout layout(mesh);
    PhysicalParams params;
    params.alpha_frac = 0.3;
    const PicardAssembler assembler(layout, params);
    std::mt19937 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        VectorXd full = VectorXd::Zero(layout.n_total());
        full.head(layout.n_velocity()) = random_vector(layout.n_velocity(), rng);
        const VectorXd Av = assembler.base_matrix() * full;
        const double rayleigh = full.head(layout.n_velocity()).dot(Av.head(layout.n_velocity()));
        EXPECT_GE(rayleigh, -1e-12 * full.squaredNorm());
    }
}

TEST(FormB, VanishesForEqualArguments) {
    const TriMesh mesh = build_unit_square(4);
    const DofLayout layout(mesh);
    std::mt19937 rng(34);
    for (int trial = 0; trial < 10; ++trial) {
        const VectorXd u = random_vector(layout.n_velocity(), rng);  // not divergence-free
        const VectorXd s = random_vector(layout.n_stress(), rng);
        const double b = evaluate_form_b(u, s, s, layout);
        const double scale = form_b_magnitude(u, s, s, layout);
        ASSERT_GT(scale, 0.0);
        EXPECT_LT(std::abs(b), 1e-12 * scale);
    }
}

TEST(FormB, ZeroVelocityGivesExactZero) {
    const TriMesh mesh = build_unit_square(3);
    const DofLayout layout(mesh);
    std::mt19937 rng(35);
    const VectorXd s = random_vector(layout.n_stress(), rng);
    const VectorXd t = random_vector(layout.n_stress(), rng);
    EXPECT_EQ(evaluate_form_b(VectorXd::Zero(layout.n_velocity()), s, t, layout), 0.0);
}

TEST(FormB, ConstantFieldsUnderUniformTransportGiveZero) {
    const TriMesh mesh = build_unit_square(3);
    const DofLayout layout(mesh);
    const VectorXd u =
        interpolate_velocity([](double, double) { return Vec2{1.0, 0.0}; }, layout);
    const VectorXd s = interpolate_stress(
        [](double, double) { return std::array<double, 3>{2.0, -1.0, 0.5}; }, layout);
    const VectorXd t = interpolate_stress(
        [](double, double) { return std::array<double, 3>{-3.0, 0.25, 1.0}; }, layout);
    EXPECT_NEAR(evaluate_form_b(u, s, t, layout), 0.0, 1e-14);
}

TEST(FormB, AssembledBlockMatchesQuadratureOracle) {
    // t^T P(u) s = b(u, s, t) - (grad(u) S_s + S_s grad(u)^T, S_t) with the
    // rotation term integrated independently.
    const TriMesh mesh = build_unit_square(3);
    const DofLayout layout(mesh);
    PhysicalParams params;
    params.alpha_frac = 0.5;
    const PicardAssembler assembler(layout, params);
    std::mt19937 rng(36);
    for (int trial = 0; trial < 5; ++trial) {
        const VectorXd u = random_vector(layout.n_velocity(), rng);
        const VectorXd s = random_vector(layout.n_stress(), rng);
        const VectorXd t = random_vector(layout.n_stress(), rng);
        VectorXd s_full = VectorXd::Zero(layout.n_total());
        s_full.segment(layout.stress_offset(), layout.n_stress()) = s;
        VectorXd t_full = VectorXd::Zero(layout.n_total());
        t_full.segment(layout.stress_offset(), layout.n_stress()) = t;

        const double assembled = t_full.dot(assembler.convection_rotation(u) * s_full);
        const double oracle = evaluate_form_b(u, s, t, layout) - rotation_form(u, s, t, layout);
        const double scale = std::abs(oracle) + form_b_magnitude(u, s, t, layout);
        EXPECT_LT(std::abs(assembled - oracle), 1e-12 * scale);
    }
}

TEST(Assembly, StokesLimitStressIsExactlyTwoAlphaD) {
    // At lambda = 0 the stress equation decouples into an L2 projection of
    // 2 alpha D(u) onto the broken P1 space, which contains it.
    const TriMesh mesh = build_unit_square(4);
    const DofLayout layout(mesh);
    const MmsProblem mms{0.4};
    const PhysicalParams params = mms.params(0.0);
    const PicardAssembler assembler(layout, params);
    SparseSystem sys = assembler.assemble(VectorXd::Zero(layout.n_velocity()));
    std::map<int, double> constraints = dirichlet_values(mms.bcs(), layout);
    constraints.emplace(layout.pressure_dof(0), 0.0);
    apply_constraints(constraints, sys.matrix, sys.rhs);
    const Factorization fact(sys.matrix);
    DiscreteState state{fact.solve(sys.rhs), &layout};

    double max_err = 0.0, scale = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeom geom(mesh, t);
        const auto nodes = layout.velocity_nodes(t);
        const std::array<std::pair<double, double>, 3> corners = {{{0, 0}, {1, 0}, {0, 1}}};
        for (int c = 0; c < 3; ++c) {
            const auto refg = p2_ref_grads(corners[c].first, corners[c].second);
            double a00 = 0, a01 = 0, a10 = 0, a11 = 0;
            for (int a = 0; a < 6; ++a) {
                const Vec2 g = geom.grad(refg[a]);
                const double cx = state.coeffs[layout.velocity_dof(nodes[a], 0)];
                const double cy = state.coeffs[layout.velocity_dof(nodes[a], 1)];
                a00 += cx * g.x;
                a01 += cx * g.y;
                a10 += cy * g.x;
                a11 += cy * g.y;
            }
            const double target[3] = {2 * 0.4 * a00, 2 * 0.4 * 0.5 * (a01 + a10), 2 * 0.4 * a11};
            for (int comp = 0; comp < 3; ++comp) {
                max_err = std::max(max_err,
                                   std::abs(state.coeffs[layout.stress_dof(t, c, comp)] - target[comp]));
                scale = std::max(scale, std::abs(target[comp]));
            }
        }
    }
    EXPECT_LT(max_err, 1e-10 * (1.0 + scale));
}

TEST(EnergyIdentity, ZeroDataGivesZeroStateAndZeroResidual) {
    const TriMesh mesh = build_unit_square(3);
    const DofLayout layout(mesh);
    PhysicalParams params;
    params.alpha_frac = 0.5;
    params.lambda = 0.3;
    const PicardAssembler assembler(layout, params);
    SparseSystem sys = assembler.assemble(VectorXd::Zero(layout.n_velocity()));
    std::map<int, double> constraints =
        dirichlet_values({{BoundaryLabel::wall, VelocityBc::zero()}}, layout);
    constraints.emplace(layout.pressure_dof(0), 0.0);
    apply_constraints(constraints, sys.matrix, sys.rhs);
    const Factorization fact(sys.matrix);
    const DiscreteState state{fact.solve(sys.rhs), &layout};
    EXPECT_NEAR(state.coeffs.cwiseAbs().maxCoeff(), 0.0, 1e-14);
    EXPECT_NEAR(energy_identity_residual(state, VectorXd::Zero(layout.n_velocity()), params, layout),
                0.0, 1e-14);
}

TEST(EnergyIdentity, HoldsAtSolverPrecisionForOneLinearizedSolve) {
    const TriMesh mesh = build_unit_square(4);
    const DofLayout layout(mesh);
    const MmsProblem mms{0.5};
    const PhysicalParams params = mms.params(0.2);
    const PicardAssembler assembler(layout, params);

    // Background velocity: interpolant of the manufactured field (zero on the
    // boundary, like a genuine Picard iterate).
    const VectorXd u_k =
        interpolate_velocity([&](double x, double y) { return mms.velocity(x, y); }, layout);

    SparseSystem sys = assembler.assemble(u_k);
    std::map<int, double> constraints = dirichlet_values(mms.bcs(), layout);
    constraints.emplace(layout.pressure_dof(0), 0.0);
    apply_constraints(constraints, sys.matrix, sys.rhs);
    const Factorization fact(sys.matrix);
    DiscreteState state{fact.solve(sys.rhs), &layout};
    shift_pressure_to_zero_mean(state);

    const FieldNorms n = norms(state);
    const double scale = n.L2_sigma * n.L2_sigma + n.Dnorm_u * n.Dnorm_u;
    EXPECT_LT(energy_identity_residual(state, u_k, params, layout), 1e-10 * scale);
}

TEST(Assembly, RejectsNonFiniteBackground) {
    const TriMesh mesh = build_unit_square(2);
    const DofLayout layout(mesh);
    PhysicalParams params;
    params.alpha_frac = 0.5;
    params.lambda = 0.5;
    const PicardAssembler assembler(layout, params);
    VectorXd u_k = VectorXd::Zero(layout.n_velocity());
    u_k[3] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(assembler.assemble(u_k), std::domain_error);
    EXPECT_THROW(assembler.assemble(VectorXd::Zero(3)), std::invalid_argument);
}
