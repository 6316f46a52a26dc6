#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

namespace oldroyd {

/// Fixed-point map g acting on finite-dimensional coefficient vectors.
using FixedPointMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Damping schedule k -> beta_k; every value must lie in (0, 1].
using DampingSchedule = std::function<double(int)>;

enum class TerminalStatus { converged, diverged, max_iter };

inline const char* to_string(TerminalStatus s) {
    switch (s) {
        case TerminalStatus::converged: return "converged";
        case TerminalStatus::diverged: return "diverged";
        case TerminalStatus::max_iter: return "max_iter";
    }
    return "?";
}

/// Anderson acceleration parameters. depth_m = 0 reduces the engine to the
/// plain (possibly damped) fixed-point iteration; with beta = 1 the iterates
/// are then bitwise identical to repeated application of g.
struct AaConfig {
    int depth_m = 0;
    DampingSchedule damping;          // empty = undamped (beta_k = 1)
    double ridge_alpha = 0.0;         // Tikhonov shift applied to the R factor
    double safeguard_sigma = 0.0;     // restart threshold, 0 disables
    bool first_step_damped = false;   // damp the k = 1 update as well
    int max_iter = 100;
    double tol_inf = 1e-6;
    double divergence_threshold = 1e8;

    double beta(int k) const {
        const double b = damping ? damping(k) : 1.0;
        if (!(b > 0.0 && b <= 1.0))
            throw std::invalid_argument("AaConfig: damping beta_k must be in (0,1]");
        return b;
    }

    void validate() const {
        if (depth_m < 0) throw std::invalid_argument("AaConfig: depth_m must be >= 0");
        if (!(ridge_alpha >= 0.0)) throw std::invalid_argument("AaConfig: ridge_alpha must be >= 0");
        if (!(safeguard_sigma >= 0.0)) throw std::invalid_argument("AaConfig: safeguard_sigma must be >= 0");
        if (max_iter < 1) throw std::invalid_argument("AaConfig: max_iter must be >= 1");
        if (!(tol_inf > 0.0)) throw std::invalid_argument("AaConfig: tol_inf must be > 0");
    }

    static AaConfig constant(int m, double beta_value) {
        AaConfig cfg;
        cfg.depth_m = m;
        cfg.damping = [beta_value](int) { return beta_value; };
        return cfg;
    }
};

/// Iteration history. Residuals are numbered w_k = g(x_{k-1}) - x_{k-1};
/// E and F hold up to depth_m of the most recent iterate and residual
/// differences, newest column first and index-aligned, so after step k the
/// window width is min(k-1, depth_m).
struct AaState {
    Eigen::VectorXd x_prev, x_curr;
    Eigen::VectorXd w_prev, w_curr;
    std::deque<Eigen::VectorXd> E, F;
    int k = 0;
    double theta_last = std::numeric_limits<double>::quiet_NaN();
    int restarts = 0;
    bool ill_conditioned_last = false;

    int window_width() const { return static_cast<int>(F.size()); }
};

struct CoefficientSolution {
    Eigen::VectorXd gamma;
    double theta = 0.0;
    bool ill_conditioned = false;
};

namespace detail {

/// Thin QR by modified Gram-Schmidt with one re-orthogonalization pass and a
/// nonnegative diagonal of R (the sign convention the shifted-ridge formula
/// is defined against). Columns that turn out linearly dependent get a zero
/// q-column and a zero diagonal entry.
struct ThinQr {
    Eigen::MatrixXd Q;
    Eigen::MatrixXd R;
    bool rank_deficient = false;
};

inline ThinQr mgs_qr(const Eigen::MatrixXd& F) {
    const Eigen::Index n = F.rows(), m = F.cols();
    ThinQr out;
    out.Q = Eigen::MatrixXd::Zero(n, m);
    out.R = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::VectorXd v = F.col(j);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const double r = out.Q.col(i).dot(v);
                out.R(i, j) += r;
                v -= r * out.Q.col(i);
            }
        }
        const double norm = v.norm();
        const double col_scale = F.col(j).norm();
        if (norm <= 1e-14 * col_scale || col_scale == 0.0) {
            out.rank_deficient = true;
            out.R(j, j) = 0.0;  // Q column stays zero
        } else {
            out.R(j, j) = norm;
            out.Q.col(j) = v / norm;
        }
    }
    return out;
}

inline Eigen::VectorXd back_substitute(const Eigen::MatrixXd& R, Eigen::VectorXd y) {
    const Eigen::Index m = R.cols();
    for (Eigen::Index i = m - 1; i >= 0; --i) {
        for (Eigen::Index j = i + 1; j < m; ++j) y[i] -= R(i, j) * y[j];
        y[i] /= R(i, i);
    }
    return y;
}

}  // namespace detail

/// Least-squares coefficients of the residual window.
///
/// ridge_alpha = 0: gamma minimizes ||w - F gamma||_2 (thin QR; a
/// rank-deficient window falls back to the minimum-norm solution and is
/// flagged). ridge_alpha > 0: gamma solves (R + ridge_alpha^2 I) gamma = Q^T w
/// with F = QR — a shift of the triangular factor, not classical Tikhonov.
/// theta = ||w - F gamma||_2 / ||w||_2 is the gain of the optimization step.
inline CoefficientSolution solve_coefficients(const Eigen::MatrixXd& F, const Eigen::VectorXd& w,
                                              double ridge_alpha) {
    if (F.cols() < 1) throw std::invalid_argument("solve_coefficients: window is empty");
    if (F.rows() != w.size()) throw std::invalid_argument("solve_coefficients: row dimension mismatch");
    CoefficientSolution out;
    const double wn = w.norm();
    if (wn == 0.0) {  // converged; callers normally stop before getting here
        out.gamma = Eigen::VectorXd::Zero(F.cols());
        out.theta = 0.0;
        return out;
    }

    const auto qr = detail::mgs_qr(F);
    out.ill_conditioned = qr.rank_deficient;
    if (ridge_alpha > 0.0) {
        Eigen::MatrixXd shifted = qr.R;
        shifted.diagonal().array() += ridge_alpha * ridge_alpha;
        out.gamma = detail::back_substitute(shifted, qr.Q.transpose() * w);
    } else if (qr.rank_deficient) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(F, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-13);
        out.gamma = svd.solve(w);
    } else {
        out.gamma = detail::back_substitute(qr.R, qr.Q.transpose() * w);
    }
    out.theta = (w - F * out.gamma).norm() / wn;
    return out;
}

/// First iteration of the accelerated scheme: w_1 = g(x_0) - x_0 and
/// x_1 = g(x_0), or the damped convex step x_0 + beta_1 w_1 when
/// first_step_damped is set.
inline AaState aa_initialize(const Eigen::VectorXd& x0, const FixedPointMap& g, const AaConfig& cfg) {
    cfg.validate();
    Eigen::VectorXd gx = g(x0);
    if (gx.size() != x0.size())
        throw std::invalid_argument("aa_initialize: g output dimension does not match x0");
    AaState state;
    state.x_prev = x0;
    state.w_curr = gx - x0;
    state.x_curr = cfg.first_step_damped ? Eigen::VectorXd(x0 + cfg.beta(1) * state.w_curr)
                                         : std::move(gx);
    state.k = 1;
    return state;
}

/// Assumption behind the acceleration theory: residual differences may not
/// collapse relative to iterate differences. True when
/// ||w_k - w_{k-1}|| >= sigma_min * ||x_{k-1} - x_{k-2}|| (with the newest
/// available pair); a false return means the caller should restart the
/// window. sigma_min = 0 disables the check.
inline bool safeguard_check(const Eigen::VectorXd& w_diff, const Eigen::VectorXd& x_diff,
                            double sigma_min) {
    if (sigma_min <= 0.0) return true;
    return w_diff.norm() >= sigma_min * x_diff.norm();
}

struct AaStepOutcome {
    double res_inf = 0.0;
    double res_l2 = 0.0;
    double theta = std::numeric_limits<double>::quiet_NaN();  // NaN for plain steps
    bool restarted = false;
    bool diverged = false;
    bool ill_conditioned = false;
};

/// One accelerated iteration: evaluates the residual w_k at x_{k-1}, slides
/// the difference window, solves for the coefficients, and applies the damped
/// difference-form update
///   x_k = x_{k-1} + beta_k w_k - (E + beta_k F) gamma,
/// which equals the affine combination of the window's iterates and residuals
/// with coefficients summing to one.
inline AaStepOutcome aa_step(AaState& state, const FixedPointMap& g, const AaConfig& cfg) {
    if (state.k < 1) throw std::logic_error("aa_step: state not initialized");
    const int k_new = state.k + 1;
    const double beta = cfg.beta(k_new);

    Eigen::VectorXd gx = g(state.x_curr);
    if (gx.size() != state.x_curr.size())
        throw std::invalid_argument("aa_step: g output dimension drifted");
    AaStepOutcome out;
    const bool finite = gx.allFinite();
    Eigen::VectorXd w_new = gx - state.x_curr;
    if (!finite) {
        out.diverged = true;
        out.res_inf = out.res_l2 = std::numeric_limits<double>::quiet_NaN();
    } else {
        out.res_inf = w_new.lpNorm<Eigen::Infinity>();
        out.res_l2 = w_new.norm();
        if (out.res_inf > cfg.divergence_threshold) out.diverged = true;
    }

    Eigen::VectorXd x_next;
    state.ill_conditioned_last = false;
    if (!finite) {
        x_next = state.x_curr;  // keep the last finite iterate
    } else if (out.res_l2 == 0.0) {
        // Exact fixed point: report before touching the window.
        x_next = state.x_curr;
        state.theta_last = 0.0;
        out.theta = 0.0;
    } else {
        if (cfg.depth_m > 0) {
            Eigen::VectorXd dw = w_new - state.w_curr;
            Eigen::VectorXd dx = state.x_curr - state.x_prev;
            if (!safeguard_check(dw, dx, cfg.safeguard_sigma)) {
                state.E.clear();
                state.F.clear();
                ++state.restarts;
                out.restarted = true;
            } else {
                state.E.push_front(std::move(dx));
                state.F.push_front(std::move(dw));
                while (state.window_width() > cfg.depth_m) {
                    state.E.pop_back();
                    state.F.pop_back();
                }
            }
        }
        const int width = state.window_width();
        if (width == 0) {
            // Plain damped step; beta = 1 reproduces g(x) bitwise.
            x_next = (beta == 1.0) ? std::move(gx) : Eigen::VectorXd(state.x_curr + beta * w_new);
            state.theta_last = std::numeric_limits<double>::quiet_NaN();
        } else {
            Eigen::MatrixXd Emat(w_new.size(), width), Fmat(w_new.size(), width);
            for (int c = 0; c < width; ++c) {
                Emat.col(c) = state.E[c];
                Fmat.col(c) = state.F[c];
            }
            const auto sol = solve_coefficients(Fmat, w_new, cfg.ridge_alpha);
            x_next = state.x_curr + beta * w_new - (Emat + beta * Fmat) * sol.gamma;
            state.theta_last = sol.theta;
            out.theta = sol.theta;
            out.ill_conditioned = sol.ill_conditioned;
            state.ill_conditioned_last = sol.ill_conditioned;
        }
    }

    state.x_prev = std::move(state.x_curr);
    state.x_curr = std::move(x_next);
    state.w_prev = std::move(state.w_curr);
    state.w_curr = std::move(w_new);
    state.k = k_new;
    return out;
}

struct AaTraceRow {
    int k;
    double res_inf;
    double res_l2;
    double theta;  // NaN when no optimization step happened
    bool restart;
    bool ill_conditioned;
};

using AaTraceCallback = std::function<void(const AaTraceRow&)>;

struct AndersonResult {
    Eigen::VectorXd x;
    TerminalStatus status = TerminalStatus::max_iter;
    int iterations = 0;  // number of residual (g) evaluations
    int restarts = 0;
    double final_res_inf = std::numeric_limits<double>::quiet_NaN();
};

/// Runs the accelerated iteration until the residual inf-norm drops below
/// cfg.tol_inf, divergence is detected, or max_iter residual evaluations are
/// spent. Each residual evaluation produces exactly one trace row.
inline AndersonResult run_anderson(const Eigen::VectorXd& x0, const FixedPointMap& g,
                                   const AaConfig& cfg, const AaTraceCallback& trace = {}) {
    AaState state = aa_initialize(x0, g, cfg);
    AndersonResult result;

    const double r1_inf = state.w_curr.lpNorm<Eigen::Infinity>();
    const bool r1_finite = state.w_curr.allFinite();
    if (trace)
        trace({1, r1_inf, state.w_curr.norm(), std::numeric_limits<double>::quiet_NaN(), false, false});
    result.iterations = 1;
    result.final_res_inf = r1_inf;
    if (!r1_finite || r1_inf > cfg.divergence_threshold) {
        result.status = TerminalStatus::diverged;
        result.x = state.x_curr;
        return result;
    }
    if (r1_inf < cfg.tol_inf) {
        result.status = TerminalStatus::converged;
        result.x = state.x_curr;
        return result;
    }

    while (state.k < cfg.max_iter) {
        const AaStepOutcome out = aa_step(state, g, cfg);
        if (trace) trace({state.k, out.res_inf, out.res_l2, out.theta, out.restarted, out.ill_conditioned});
        result.iterations = state.k;
        result.final_res_inf = out.res_inf;
        if (out.diverged) {
            result.status = TerminalStatus::diverged;
            break;
        }
        if (out.res_inf < cfg.tol_inf) {
            result.status = TerminalStatus::converged;
            break;
        }
    }
    result.x = state.x_curr;
    result.restarts = state.restarts;
    return result;
}

}  // namespace oldroyd
