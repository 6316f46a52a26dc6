#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oldroyd/anderson.hpp"
#include "oldroyd/assembly.hpp"
#include "oldroyd/fe_space.hpp"
#include "oldroyd/linear_solver.hpp"

namespace oldroyd {

struct TraceRow {
    int k = 0;
    double res_inf = 0.0;
    double res_l2 = 0.0;
    double theta = std::numeric_limits<double>::quiet_NaN();
    bool restart = false;
    double ms = 0.0;
};

struct IterationTrace {
    std::vector<TraceRow> rows;
    TerminalStatus status = TerminalStatus::max_iter;
    std::string note;  // e.g. linear-solver breakdown treated as divergence

    int iterations() const { return rows.empty() ? 0 : rows.back().k; }
    double final_res_inf() const {
        return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().res_inf;
    }

    void write_csv(std::ostream& os) const {
        os << "k,res_inf,res_l2,theta,restart,ms\n";
        for (const TraceRow& r : rows) {
            os << r.k << ',';
            write_num(os, r.res_inf);
            os << ',';
            write_num(os, r.res_l2);
            os << ',';
            if (std::isfinite(r.theta)) write_num(os, r.theta);
            os << ',' << (r.restart ? 1 : 0) << ',';
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", r.ms);
            os << buf << '\n';
        }
    }

    void save_csv(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("IterationTrace: cannot write " + path);
        write_csv(f);
    }

private:
    static void write_num(std::ostream& os, double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        os << buf;
    }
};

struct GEvaluationError : std::runtime_error {
    GEvaluationError(const std::string& what, long step) : std::runtime_error(what), step_index(step) {}
    long step_index = 0;
};

/// The fixed-point operator: one application assembles the system linearized
/// at the iterate's velocity block, enforces the velocity boundary conditions
/// (plus a pressure pin on enclosed flows), solves, and shifts the pressure
/// to zero mean. The stress and pressure blocks of the input are carried but
/// never enter the assembly.
class PicardOperator {
public:
    PicardOperator(const DofLayout& layout, const PhysicalParams& params, BcRegistry bcs)
        : assembler_(layout, params), bcs_(std::move(bcs)) {
        constraints_ = dirichlet_values(bcs_, layout);
        enclosed_ = is_enclosed(bcs_, layout.mesh());
        if (enclosed_) constraints_.emplace(layout.pressure_dof(0), 0.0);
    }

    const DofLayout& layout() const { return assembler_.layout(); }
    const PhysicalParams& params() const { return assembler_.params(); }
    const BcRegistry& bcs() const { return bcs_; }
    bool enclosed() const { return enclosed_; }
    long solves_issued() const { return solves_; }

    DofLabeler labeler() const {
        const DofLayout* layout = &assembler_.layout();
        return [layout](int dof) {
            switch (layout->field_of(dof)) {
                case Field::velocity: return std::string("velocity");
                case Field::stress: return std::string("stress");
                case Field::pressure: return std::string("pressure");
            }
            return std::string("?");
        };
    }

    DiscreteState apply(const DiscreteState& x) const {
        if (x.layout != &layout() || x.coeffs.size() != layout().n_total())
            throw std::invalid_argument("PicardOperator: state layout mismatch");
        return solve_linearized(x.velocity());
    }

    Eigen::VectorXd apply_vector(const Eigen::VectorXd& coeffs) const {
        if (coeffs.size() != layout().n_total())
            throw std::invalid_argument("PicardOperator: coefficient vector dimension mismatch");
        return solve_linearized(coeffs.head(layout().n_velocity())).coeffs;
    }

    /// Solution of the lambda = 0 system (identical for every background
    /// velocity), the default warm start.
    DiscreteState stokes_state() const {
        SparseSystem sys{assembler_.base_matrix(), assembler_.load()};
        return constrain_and_solve(sys);
    }

private:
    DiscreteState solve_linearized(const Eigen::VectorXd& u_k) const {
        try {
            SparseSystem sys = assembler_.assemble(u_k);
            return constrain_and_solve(sys);
        } catch (const SingularSystemError& e) {
            throw GEvaluationError(std::string("linear solve failed at step ") +
                                       std::to_string(solves_ + 1) + ": " + e.what(),
                                   solves_ + 1);
        }
    }

    DiscreteState constrain_and_solve(SparseSystem& sys) const {
        apply_constraints(constraints_, sys.matrix, sys.rhs);
        const Factorization fact(sys.matrix, labeler());
        DiscreteState out{fact.solve(sys.rhs), &layout()};
        shift_pressure_to_zero_mean(out);
        ++solves_;
        return out;
    }

    PicardAssembler assembler_;
    BcRegistry bcs_;
    std::map<int, double> constraints_;
    bool enclosed_ = false;
    mutable long solves_ = 0;
};

enum class InitialGuess { zero, stokes, provided };

struct SolveConfig {
    PhysicalParams params;
    AaConfig aa;  // tol_inf, max_iter and divergence_threshold govern both solvers
    BcRegistry bcs;
    InitialGuess init = InitialGuess::stokes;
    DiscreteState provided;  // used when init == provided
};

struct SolveResult {
    DiscreteState state;
    IterationTrace trace;
};

namespace detail {

inline DiscreteState initial_state(const PicardOperator& op, const SolveConfig& cfg) {
    switch (cfg.init) {
        case InitialGuess::zero: return DiscreteState::zero(op.layout());
        case InitialGuess::stokes: return op.stokes_state();
        case InitialGuess::provided:
            if (cfg.provided.layout != &op.layout())
                throw std::invalid_argument("SolveConfig: provided state has wrong layout");
            return cfg.provided;
    }
    throw std::logic_error("initial_state: bad enum");
}

class StepTimer {
public:
    void start() { t0_ = std::chrono::steady_clock::now(); }
    double stop_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

/// Plain Picard iteration x <- G(x), stopping on ||G(x) - x||_inf < tol_inf,
/// divergence, or max_iter residual evaluations. Linear-solver breakdown mid-
/// iteration is reported as divergence (with a note), not as an exception, so
/// parameter sweeps can tabulate it.
inline SolveResult solve_picard(const PicardOperator& op, const SolveConfig& cfg) {
    cfg.aa.validate();
    SolveResult result;
    DiscreteState x = detail::initial_state(op, cfg);
    result.state = x;
    detail::StepTimer timer;
    for (int k = 1; k <= cfg.aa.max_iter; ++k) {
        timer.start();
        DiscreteState y;
        try {
            y = op.apply(x);
        } catch (const GEvaluationError& e) {
            result.trace.rows.push_back({k, std::numeric_limits<double>::quiet_NaN(),
                                         std::numeric_limits<double>::quiet_NaN(),
                                         std::numeric_limits<double>::quiet_NaN(), false,
                                         timer.stop_ms()});
            result.trace.status = TerminalStatus::diverged;
            result.trace.note = e.what();
            return result;
        }
        const double ms = timer.stop_ms();
        const Eigen::VectorXd w = y.coeffs - x.coeffs;
        const bool finite = w.allFinite();
        const double res_inf = finite ? w.lpNorm<Eigen::Infinity>() : std::numeric_limits<double>::quiet_NaN();
        const double res_l2 = finite ? w.norm() : std::numeric_limits<double>::quiet_NaN();
        result.trace.rows.push_back({k, res_inf, res_l2, std::numeric_limits<double>::quiet_NaN(), false, ms});
        if (!finite || res_inf > cfg.aa.divergence_threshold) {
            result.trace.status = TerminalStatus::diverged;
            result.state = x;
            return result;
        }
        x = std::move(y);
        result.state = x;
        if (res_inf < cfg.aa.tol_inf) {
            result.trace.status = TerminalStatus::converged;
            return result;
        }
    }
    result.trace.status = TerminalStatus::max_iter;
    return result;
}

/// Anderson-accelerated Picard over the full concatenated (u | sigma | p)
/// coefficient vector. With depth_m = 0 and beta = 1 this issues the same
/// linear solves as solve_picard and reproduces its iterates bitwise.
inline SolveResult solve_aa_picard(const PicardOperator& op, const SolveConfig& cfg) {
    cfg.aa.validate();
    SolveResult result;
    DiscreteState x0 = detail::initial_state(op, cfg);

    detail::StepTimer timer;
    double last_ms = 0.0;
    bool solver_failed = false;
    std::string failure_note;
    FixedPointMap g = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        timer.start();
        Eigen::VectorXd out;
        if (!v.allFinite()) {
            out = Eigen::VectorXd::Constant(v.size(), std::numeric_limits<double>::quiet_NaN());
        } else {
            try {
                out = op.apply_vector(v);
            } catch (const GEvaluationError& e) {
                solver_failed = true;
                failure_note = e.what();
                out = Eigen::VectorXd::Constant(v.size(), std::numeric_limits<double>::quiet_NaN());
            }
        }
        last_ms = timer.stop_ms();
        return out;
    };

    AaTraceCallback trace_cb = [&](const AaTraceRow& r) {
        result.trace.rows.push_back({r.k, r.res_inf, r.res_l2, r.theta, r.restart, last_ms});
    };

    const AndersonResult aa = run_anderson(x0.coeffs, g, cfg.aa, trace_cb);
    result.state = DiscreteState{aa.x, &op.layout()};
    result.trace.status = aa.status;
    if (solver_failed) result.trace.note = failure_note;
    return result;
}

/// Per-step contraction ratios rho_k = ||e_{k+1}||_* / ||e_k||_* of the plain
/// iteration against a fully converged reference on the same mesh, in the
/// problem norm (||D(e_u)||^2 + ||e_sigma||^2)^{1/2}. The sequence truncates
/// once the error reaches the resolution floor of the reference.
inline std::vector<double> estimate_contraction_ratio(const PicardOperator& op, const SolveConfig& cfg,
                                                      const DiscreteState& reference) {
    if (reference.layout != &op.layout())
        throw std::invalid_argument("estimate_contraction_ratio: reference layout mismatch");
    DiscreteState x = detail::initial_state(op, cfg);
    auto star_error = [&](const DiscreteState& s) {
        DiscreteState diff{s.coeffs - reference.coeffs, &op.layout()};
        return norms(diff).star;
    };
    std::vector<double> ratios;
    double e_prev = star_error(x);
    // Keep the denominator well above the accuracy of the reference itself.
    const double floor = std::max(1e-11, 1e-8 * e_prev);
    for (int k = 1; k <= cfg.aa.max_iter; ++k) {
        if (e_prev <= floor) break;
        x = op.apply(x);
        const double e = star_error(x);
        ratios.push_back(e / e_prev);
        if (!std::isfinite(e) || e <= floor) break;
        e_prev = e;
    }
    return ratios;
}

}  // namespace oldroyd
