#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "oldroyd/mesh.hpp"
#include "oldroyd/mms.hpp"
#include "oldroyd/picard.hpp"
#include "oldroyd/vtk.hpp"

namespace oldroyd {

struct AaColumnSpec {
    int m = 0;
    double beta = 1.0;

    std::string name() const {
        if (m == 0 && beta == 1.0) return "picard";
        char buf[48];
        std::snprintf(buf, sizeof buf, "aa_m%d_b%.3g", m, beta);
        return buf;
    }
    std::string header() const {
        if (m == 0 && beta == 1.0) return "Picard";
        char buf[48];
        std::snprintf(buf, sizeof buf, "AA(m=%d, beta=%.3g)", m, beta);
        return buf;
    }
};

/// One experiment request; serializable to/from JSON so every run directory
/// carries its exact configuration.
struct RunSpec {
    std::string experiment = "contraction";  // mms | sweep | contraction

    // mesh
    int mesh_nx = 32;
    int mesh_ny = 16;
    int levels = 2;  // contraction refinement ladder length
    ContractionGeometry geometry;
    std::vector<int> mms_sizes = {8, 16, 32};

    // physics
    std::vector<double> lambdas = {0.7};
    double alpha = 8.0 / 9.0;
    double inflow_peak = 1.0 / 32.0;  // centerline inflow speed; the default
                                      // makes the downstream wall shear rate 1
    double mms_lambda = 0.0;
    double mms_alpha = 0.5;

    // accelerator
    int aa_m = 20;
    double aa_beta = 0.5;
    double ridge_alpha = 0.0;
    double safeguard_sigma = 0.0;
    std::vector<AaColumnSpec> sweep_columns = {{1, 1.0}, {10, 0.7}, {20, 0.5}};

    // outer solver
    double tol = 1e-6;
    int max_iter = 300;
    bool warm_start = false;
    std::string init = "stokes";  // zero | stokes

    std::string out_dir = "out";

    AaConfig aa_config(int m, double beta) const {
        AaConfig cfg = AaConfig::constant(m, beta);
        cfg.ridge_alpha = ridge_alpha;
        cfg.safeguard_sigma = safeguard_sigma;
        cfg.tol_inf = tol;
        cfg.max_iter = max_iter;
        return cfg;
    }

    InitialGuess initial_guess() const {
        if (init == "zero") return InitialGuess::zero;
        if (init == "stokes") return InitialGuess::stokes;
        throw std::invalid_argument("RunSpec: init must be 'zero' or 'stokes'");
    }

    void validate() const {
        if (experiment != "mms" && experiment != "sweep" && experiment != "contraction")
            throw std::invalid_argument("RunSpec: unknown experiment '" + experiment + "'");
        if (lambdas.empty()) throw std::invalid_argument("RunSpec: lambda list must be nonempty");
        if (!std::is_sorted(lambdas.begin(), lambdas.end()))
            throw std::invalid_argument("RunSpec: lambda list must be nondecreasing");
        if (!(tol > 0.0) || max_iter < 1) throw std::invalid_argument("RunSpec: bad tol/max_iter");
        (void)initial_guess();
    }
};

inline void to_json(nlohmann::json& j, const AaColumnSpec& c) { j = {{"m", c.m}, {"beta", c.beta}}; }
inline void from_json(const nlohmann::json& j, AaColumnSpec& c) {
    c.m = j.value("m", c.m);
    c.beta = j.value("beta", c.beta);
}

inline void to_json(nlohmann::json& j, const RunSpec& s) {
    j = nlohmann::json{
        {"experiment", s.experiment},
        {"mesh", {{"nx", s.mesh_nx}, {"ny", s.mesh_ny}, {"levels", s.levels}}},
        {"geometry",
         {{"half_width", s.geometry.half_width},
          {"upstream_length", s.geometry.upstream_length},
          {"downstream_length", s.geometry.downstream_length}}},
        {"physics",
         {{"lambdas", s.lambdas},
          {"alpha", s.alpha},
          {"inflow_peak", s.inflow_peak},
          {"mms_lambda", s.mms_lambda},
          {"mms_alpha", s.mms_alpha}}},
        {"mms_sizes", s.mms_sizes},
        {"aa",
         {{"m", s.aa_m},
          {"beta", s.aa_beta},
          {"ridge_alpha", s.ridge_alpha},
          {"safeguard_sigma", s.safeguard_sigma}}},
        {"sweep_columns", s.sweep_columns},
        {"solver",
         {{"tol", s.tol}, {"max_iter", s.max_iter}, {"warm_start", s.warm_start}, {"init", s.init}}},
        {"out", s.out_dir}};
}

inline void from_json(const nlohmann::json& j, RunSpec& s) {
    s.experiment = j.value("experiment", s.experiment);
    if (j.contains("mesh")) {
        const auto& m = j.at("mesh");
        s.mesh_nx = m.value("nx", s.mesh_nx);
        s.mesh_ny = m.value("ny", s.mesh_ny);
        s.levels = m.value("levels", s.levels);
    }
    if (j.contains("geometry")) {
        const auto& g = j.at("geometry");
        s.geometry.half_width = g.value("half_width", s.geometry.half_width);
        s.geometry.upstream_length = g.value("upstream_length", s.geometry.upstream_length);
        s.geometry.downstream_length = g.value("downstream_length", s.geometry.downstream_length);
    }
    if (j.contains("physics")) {
        const auto& p = j.at("physics");
        s.lambdas = p.value("lambdas", s.lambdas);
        s.alpha = p.value("alpha", s.alpha);
        s.inflow_peak = p.value("inflow_peak", s.inflow_peak);
        s.mms_lambda = p.value("mms_lambda", s.mms_lambda);
        s.mms_alpha = p.value("mms_alpha", s.mms_alpha);
    }
    s.mms_sizes = j.value("mms_sizes", s.mms_sizes);
    if (j.contains("aa")) {
        const auto& a = j.at("aa");
        s.aa_m = a.value("m", s.aa_m);
        s.aa_beta = a.value("beta", s.aa_beta);
        s.ridge_alpha = a.value("ridge_alpha", s.ridge_alpha);
        s.safeguard_sigma = a.value("safeguard_sigma", s.safeguard_sigma);
    }
    s.sweep_columns = j.value("sweep_columns", s.sweep_columns);
    if (j.contains("solver")) {
        const auto& so = j.at("solver");
        s.tol = so.value("tol", s.tol);
        s.max_iter = so.value("max_iter", s.max_iter);
        s.warm_start = so.value("warm_start", s.warm_start);
        s.init = so.value("init", s.init);
    }
    s.out_dir = j.value("out", s.out_dir);
}

/// Velocity boundary conditions of the contraction benchmark: no-slip walls,
/// symmetry line at y = 0, natural outflow, and a fully developed parabolic
/// inflow u(y) = peak * (1 - (y/H)^2) across the upstream half-width H = 4W.
inline BcRegistry contraction_bcs(double inflow_peak, const ContractionGeometry& geo) {
    const double H = 4.0 * geo.half_width;
    BcRegistry bcs;
    bcs[BoundaryLabel::wall] = VelocityBc::zero();
    bcs[BoundaryLabel::symmetry] = VelocityBc::symmetry();
    bcs[BoundaryLabel::outflow] = VelocityBc::natural();
    bcs[BoundaryLabel::inflow] = VelocityBc::dirichlet([inflow_peak, H](double, double y) {
        const double r = y / H;
        return Vec2{inflow_peak * (1.0 - r * r), 0.0};
    });
    return bcs;
}

// ---------------------------------------------------------------------------
// Result tables.
// ---------------------------------------------------------------------------

struct CellResult {
    TerminalStatus status = TerminalStatus::max_iter;
    int iterations = 0;
    FieldNorms norms;
    std::string note;

    bool converged() const { return status == TerminalStatus::converged; }
};

struct SweepTable {
    std::vector<double> lambdas;
    std::vector<AaColumnSpec> columns;  // columns[0] is plain Picard
    std::vector<std::vector<CellResult>> cells;  // [lambda][column]
    bool warm_start = false;

    const CellResult& cell(std::size_t lam, std::size_t col) const { return cells[lam][col]; }

    /// Largest lambda with converged status in a column; NaN if none.
    double max_convergent_lambda(std::size_t col) const {
        double best = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            if (cells[i][col].converged()) best = lambdas[i];
        return best;
    }
};

struct MmsRow {
    int n = 0;
    double h = 0.0;
    int dof = 0;
    int iterations = 0;
    std::string status;
    MmsErrors err;
    double order_u_L2 = std::numeric_limits<double>::quiet_NaN();
    double order_u_H1 = std::numeric_limits<double>::quiet_NaN();
    double order_s_L2 = std::numeric_limits<double>::quiet_NaN();
};

struct MmsTable {
    std::vector<MmsRow> rows;
};

struct ContractionRow {
    std::string mesh_name;
    int nx = 0, ny = 0;
    int dof = 0;
    double dx = 0.0, dy = 0.0;
    CellResult picard;
    CellResult aa;
};

struct ContractionTable {
    std::vector<ContractionRow> rows;
};

// ---------------------------------------------------------------------------
// Runners.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string cell_text(const CellResult& c) {
    if (c.status == TerminalStatus::converged) return std::to_string(c.iterations);
    if (c.status == TerminalStatus::diverged) return "Diverge";
    return "max_iter";
}

struct TraceSink {
    std::filesystem::path dir;

    explicit TraceSink(const std::string& out_dir) : dir(std::filesystem::path(out_dir) / "traces") {
        std::filesystem::create_directories(dir);
    }
    void save(const std::string& name, const IterationTrace& trace) const {
        trace.save_csv((dir / (name + ".csv")).string());
    }
};

}  // namespace detail

/// Manufactured-solution refinement study. Solves the manufactured problem on
/// each mesh size, reports discretization errors and observed orders between
/// consecutive meshes.
inline MmsTable run_mms(const RunSpec& spec, const detail::TraceSink* sink = nullptr) {
    MmsTable table;
    MmsProblem mms;
    mms.alpha = spec.mms_alpha;
    for (const int n : spec.mms_sizes) {
        MmsRow row;
        row.n = n;
        const TriMesh mesh = build_unit_square(n);
        row.h = mesh.h_max;
        const DofLayout layout(mesh);
        row.dof = layout.n_total();
        SolveConfig cfg;
        cfg.params = mms.params(spec.mms_lambda);
        cfg.aa = spec.aa_config(0, 1.0);
        cfg.bcs = mms.bcs();
        cfg.init = InitialGuess::zero;
        try {
            const PicardOperator op(layout, cfg.params, cfg.bcs);
            const SolveResult res = solve_picard(op, cfg);
            row.iterations = res.trace.iterations();
            row.status = to_string(res.trace.status);
            if (sink) sink->save("mms_n" + std::to_string(n), res.trace);
            if (res.trace.status != TerminalStatus::converged) {
                row.status = "failed(" + row.status + ")";
            } else {
                row.err = mms_errors(res.state, mms);
            }
        } catch (const std::exception& e) {
            row.status = std::string("failed(") + e.what() + ")";
        }
        table.rows.push_back(row);
    }
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        MmsRow& fine = table.rows[i];
        const MmsRow& coarse = table.rows[i - 1];
        const double ratio = std::log(coarse.h / fine.h);
        if (coarse.err.u_L2 > 0 && fine.err.u_L2 > 0) {
            fine.order_u_L2 = std::log(coarse.err.u_L2 / fine.err.u_L2) / ratio;
            fine.order_u_H1 = std::log(coarse.err.u_H1semi / fine.err.u_H1semi) / ratio;
            fine.order_s_L2 = std::log(coarse.err.sigma_L2 / fine.err.sigma_L2) / ratio;
        }
    }
    return table;
}

namespace detail {

inline CellResult run_cell(const DofLayout& layout, const SolveConfig& cfg, bool accelerated,
                           IterationTrace* trace_out = nullptr, DiscreteState* state_out = nullptr) {
    CellResult cell;
    const PicardOperator op(layout, cfg.params, cfg.bcs);
    const SolveResult res = accelerated ? solve_aa_picard(op, cfg) : solve_picard(op, cfg);
    cell.status = res.trace.status;
    cell.iterations = res.trace.iterations();
    cell.note = res.trace.note;
    if (cell.status == TerminalStatus::converged) cell.norms = norms(res.state);
    if (trace_out) *trace_out = res.trace;
    if (state_out) *state_out = res.state;
    return cell;
}

}  // namespace detail

/// Weissenberg-number sweep on the contraction mesh: plain Picard against the
/// configured accelerator columns, recording iteration counts or divergence
/// per lambda. Cold starts solve every lambda from the zero state; warm
/// starts continue each column from its previous converged state.
inline SweepTable run_sweep(const RunSpec& spec, const detail::TraceSink* sink = nullptr) {
    spec.validate();
    SweepTable table;
    table.lambdas = spec.lambdas;
    table.warm_start = spec.warm_start;
    table.columns.push_back({0, 1.0});  // Picard
    for (const auto& c : spec.sweep_columns) table.columns.push_back(c);

    const TriMesh mesh = build_contraction_mesh(spec.mesh_nx, spec.mesh_ny, spec.geometry);
    const DofLayout layout(mesh);
    const BcRegistry bcs = contraction_bcs(spec.inflow_peak, spec.geometry);

    std::vector<std::optional<DiscreteState>> warm(table.columns.size());
    table.cells.assign(spec.lambdas.size(), std::vector<CellResult>(table.columns.size()));
    for (std::size_t li = 0; li < spec.lambdas.size(); ++li) {
        for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
            const AaColumnSpec& col = table.columns[ci];
            SolveConfig cfg;
            cfg.params.lambda = spec.lambdas[li];
            cfg.params.alpha_frac = spec.alpha;
            cfg.aa = spec.aa_config(col.m, col.beta);
            cfg.bcs = bcs;
            if (spec.warm_start && warm[ci]) {
                cfg.init = InitialGuess::provided;
                cfg.provided = *warm[ci];
            } else {
                cfg.init = InitialGuess::zero;
            }
            IterationTrace trace;
            DiscreteState state;
            table.cells[li][ci] = detail::run_cell(layout, cfg, col.m > 0, &trace, &state);
            if (sink) {
                char name[96];
                std::snprintf(name, sizeof name, "sweep_%s_lam%.4g", col.name().c_str(),
                              spec.lambdas[li]);
                sink->save(name, trace);
            }
            if (spec.warm_start && table.cells[li][ci].converged()) warm[ci] = state;
        }
    }
    return table;
}

/// Contraction benchmark ladder: for each refinement of the base mesh, solve
/// with plain Picard and with the accelerated iteration, recording DoF,
/// converged norms and iteration counts. Converged fields go to VTK when an
/// output directory is given.
inline ContractionTable run_contraction(const RunSpec& spec, const detail::TraceSink* sink = nullptr,
                                        const std::string* vtk_dir = nullptr) {
    spec.validate();
    ContractionTable table;
    const double lambda = spec.lambdas.front();
    for (int level = 0; level < spec.levels; ++level) {
        const int nx = spec.mesh_nx << level;
        const int ny = spec.mesh_ny << level;
        ContractionRow row;
        row.nx = nx;
        row.ny = ny;
        row.mesh_name = std::to_string(nx) + "x" + std::to_string(ny);
        const TriMesh mesh = build_contraction_mesh(nx, ny, spec.geometry);
        const DofLayout layout(mesh);
        row.dof = layout.n_total();
        row.dx = (spec.geometry.upstream_length + spec.geometry.downstream_length) / nx;
        row.dy = 4.0 * spec.geometry.half_width / ny;

        SolveConfig cfg;
        cfg.params.lambda = lambda;
        cfg.params.alpha_frac = spec.alpha;
        cfg.bcs = contraction_bcs(spec.inflow_peak, spec.geometry);
        cfg.init = spec.initial_guess();

        for (const bool accelerated : {false, true}) {
            cfg.aa = accelerated ? spec.aa_config(spec.aa_m, spec.aa_beta) : spec.aa_config(0, 1.0);
            IterationTrace trace;
            DiscreteState state;
            CellResult cell = detail::run_cell(layout, cfg, accelerated, &trace, &state);
            const std::string tag = accelerated ? "aa" : "picard";
            if (sink) sink->save("contraction_" + row.mesh_name + "_" + tag, trace);
            if (vtk_dir && cell.converged())
                write_vtk_fields(state,
                                 (std::filesystem::path(*vtk_dir) /
                                  ("fields_" + row.mesh_name + "_" + tag + ".vtk")).string());
            (accelerated ? row.aa : row.picard) = cell;
        }
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Table writers (CSV + markdown). Tables carry no timings, so identical run
// specs produce byte-identical files; wall-clock lives in the trace files.
// ---------------------------------------------------------------------------

inline void write_mms_outputs(const RunSpec& spec, const MmsTable& table) {
    std::ofstream csv(std::filesystem::path(spec.out_dir) / "mms.csv");
    csv << "# experiment=mms lambda=" << detail::fmt("%.12g", spec.mms_lambda)
        << " alpha=" << detail::fmt("%.12g", spec.mms_alpha) << " tol=" << detail::fmt("%g", spec.tol)
        << "\n";
    csv << "n,h_max,dof,iterations,status,err_u_L2,order_u_L2,err_u_H1,order_u_H1,err_s_L2,order_s_L2\n";
    for (const MmsRow& r : table.rows) {
        csv << r.n << ',' << detail::fmt("%.12g", r.h) << ',' << r.dof << ',' << r.iterations << ','
            << r.status << ',' << detail::fmt("%.12g", r.err.u_L2) << ','
            << detail::fmt("%.4g", r.order_u_L2) << ',' << detail::fmt("%.12g", r.err.u_H1semi) << ','
            << detail::fmt("%.4g", r.order_u_H1) << ',' << detail::fmt("%.12g", r.err.sigma_L2) << ','
            << detail::fmt("%.4g", r.order_s_L2) << '\n';
    }

    std::ofstream md(std::filesystem::path(spec.out_dir) / "mms.md");
    md << "# Manufactured-solution convergence (lambda = " << detail::fmt("%.12g", spec.mms_lambda)
       << ", alpha = " << detail::fmt("%.12g", spec.mms_alpha) << ")\n\n";
    md << "| n | h | DoF | iters | ||u-u_h||_0 | order | |u-u_h|_1 | order | ||s-s_h||_0 | order |\n";
    md << "|---|---|-----|-------|-------------|-------|-----------|-------|-------------|-------|\n";
    for (const MmsRow& r : table.rows) {
        md << "| " << r.n << " | " << detail::fmt("%.4g", r.h) << " | " << r.dof << " | " << r.iterations
           << " | " << detail::fmt("%.6g", r.err.u_L2) << " | " << detail::fmt("%.3g", r.order_u_L2)
           << " | " << detail::fmt("%.6g", r.err.u_H1semi) << " | " << detail::fmt("%.3g", r.order_u_H1)
           << " | " << detail::fmt("%.6g", r.err.sigma_L2) << " | " << detail::fmt("%.3g", r.order_s_L2)
           << " |\n";
    }
}

inline void write_sweep_outputs(const RunSpec& spec, const SweepTable& table) {
    std::ofstream csv(std::filesystem::path(spec.out_dir) / "sweep.csv");
    csv << "# experiment=sweep mesh=" << spec.mesh_nx << "x" << spec.mesh_ny
        << " start=" << (table.warm_start ? "warm" : "cold") << " tol=" << detail::fmt("%g", spec.tol)
        << " max_iter=" << spec.max_iter << "\n";
    csv << "lambda,column,status,iterations\n";
    for (std::size_t li = 0; li < table.lambdas.size(); ++li)
        for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
            const CellResult& c = table.cells[li][ci];
            csv << detail::fmt("%.12g", table.lambdas[li]) << ',' << table.columns[ci].name() << ','
                << to_string(c.status) << ',' << c.iterations << '\n';
        }

    std::ofstream md(std::filesystem::path(spec.out_dir) / "sweep.md");
    md << "# Iteration counts vs Weissenberg number (" << spec.mesh_nx << "x" << spec.mesh_ny
       << " contraction mesh, " << (table.warm_start ? "warm" : "cold") << " start, tol = "
       << detail::fmt("%g", spec.tol) << ")\n\n";
    md << "| lambda |";
    for (const auto& c : table.columns) md << ' ' << c.header() << " |";
    md << "\n|---|";
    for (std::size_t ci = 0; ci < table.columns.size(); ++ci) md << "---|";
    md << '\n';
    for (std::size_t li = 0; li < table.lambdas.size(); ++li) {
        md << "| " << detail::fmt("%.4g", table.lambdas[li]) << " |";
        for (std::size_t ci = 0; ci < table.columns.size(); ++ci)
            md << ' ' << detail::cell_text(table.cells[li][ci]) << " |";
        md << '\n';
    }
    md << "\nIteration counts are geometry- and mesh-dependent; compare columns within this table "
          "rather than against other flow configurations.\n";
}

inline void write_contraction_outputs(const RunSpec& spec, const ContractionTable& table) {
    std::ofstream csv(std::filesystem::path(spec.out_dir) / "contraction.csv");
    csv << "# experiment=contraction lambda=" << detail::fmt("%.12g", spec.lambdas.front())
        << " alpha=" << detail::fmt("%.12g", spec.alpha)
        << " inflow_peak=" << detail::fmt("%.12g", spec.inflow_peak) << " init=" << spec.init
        << " tol=" << detail::fmt("%g", spec.tol) << " aa=(m=" << spec.aa_m << ",beta="
        << detail::fmt("%.3g", spec.aa_beta) << ")\n";
    csv << "mesh,dof,dx,dy,solver,status,iterations,u_L2,u_H1,s_L2\n";
    for (const ContractionRow& r : table.rows) {
        for (const bool accelerated : {false, true}) {
            const CellResult& c = accelerated ? r.aa : r.picard;
            csv << r.mesh_name << ',' << r.dof << ',' << detail::fmt("%.12g", r.dx) << ','
                << detail::fmt("%.12g", r.dy) << ',' << (accelerated ? "aa" : "picard") << ','
                << to_string(c.status) << ',' << c.iterations << ','
                << detail::fmt("%.12g", c.norms.L2_u) << ',' << detail::fmt("%.12g", c.norms.H1_u())
                << ',' << detail::fmt("%.12g", c.norms.L2_sigma) << '\n';
        }
    }

    std::ofstream md(std::filesystem::path(spec.out_dir) / "contraction.md");
    md << "# 4:1 contraction benchmark (lambda = " << detail::fmt("%.12g", spec.lambdas.front())
       << ", alpha = " << detail::fmt("%.12g", spec.alpha) << ")\n\n";
    md << "| Mesh | DoF | dx | dy | solver | iters | ||u||_0 | ||u||_1 | ||s||_0 |\n";
    md << "|------|-----|----|----|--------|-------|---------|---------|---------|\n";
    for (const ContractionRow& r : table.rows) {
        for (const bool accelerated : {false, true}) {
            const CellResult& c = accelerated ? r.aa : r.picard;
            md << "| " << r.mesh_name << " | " << r.dof << " | " << detail::fmt("%.6g", r.dx) << " | "
               << detail::fmt("%.6g", r.dy) << " | " << (accelerated ? "AA-Picard" : "Picard") << " | "
               << detail::cell_text(c) << " | ";
            if (c.converged())
                md << detail::fmt("%.6f", c.norms.L2_u) << " | " << detail::fmt("%.6f", c.norms.H1_u())
                   << " | " << detail::fmt("%.6f", c.norms.L2_sigma) << " |\n";
            else
                md << "- | - | - |\n";
        }
    }
    md << "\nGeometry: upstream half-channel [-" << detail::fmt("%g", spec.geometry.upstream_length)
       << ",0]x[0," << detail::fmt("%g", 4.0 * spec.geometry.half_width) << "], downstream [0,"
       << detail::fmt("%g", spec.geometry.downstream_length) << "]x[0,"
       << detail::fmt("%g", spec.geometry.half_width)
       << "]; parabolic inflow with centerline speed " << detail::fmt("%.6g", spec.inflow_peak)
       << " (downstream wall shear rate " << detail::fmt("%.6g",
                                                         8.0 * spec.inflow_peak / spec.geometry.half_width)
       << ").\n";
}

/// Runs the experiment named by the spec, writing tables, traces, VTK fields
/// and an echo of the effective configuration into spec.out_dir.
inline int run_experiment(const RunSpec& spec) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);
    {
        const nlohmann::json j = spec;
        std::ofstream cfg(std::filesystem::path(spec.out_dir) / "config.json");
        cfg << j.dump(2) << '\n';
    }
    const detail::TraceSink sink(spec.out_dir);
    if (spec.experiment == "mms") {
        write_mms_outputs(spec, run_mms(spec, &sink));
    } else if (spec.experiment == "sweep") {
        write_sweep_outputs(spec, run_sweep(spec, &sink));
    } else {
        write_contraction_outputs(spec, run_contraction(spec, &sink, &spec.out_dir));
    }
    return 0;
}

}  // namespace oldroyd
