#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "oldroyd/assembly.hpp"

namespace oldroyd {

/// Maps a row index to a human-readable field name for diagnostics.
using DofLabeler = std::function<std::string(int)>;

struct SingularSystemError : std::runtime_error {
    SingularSystemError(const std::string& what, int dof) : std::runtime_error(what), suspect_dof(dof) {}
    int suspect_dof = -1;
};

/// Sparse LU factorization (supernodal, partial pivoting) of the constrained
/// saddle-point matrix. Factorization is verified once with a probe solve
/// A x = A*1, which catches numerically singular systems that slip through
/// pivoting (e.g. an unpinned pressure on an enclosed flow) and points at the
/// offending field.
class Factorization {
public:
    explicit Factorization(const Eigen::SparseMatrix<double>& matrix, const DofLabeler& labeler = {})
        : matrix_(matrix), lu_(std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>()) {
        if (matrix.rows() != matrix.cols())
            throw std::invalid_argument("Factorization: matrix must be square");
        lu_->analyzePattern(matrix_);
        lu_->factorize(matrix_);
        if (lu_->info() != Eigen::Success)
            throw SingularSystemError("Factorization failed: " + lu_->lastErrorMessage(), -1);

        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(matrix_.rows());
        const Eigen::VectorXd probe = lu_->solve(matrix_ * ones);
        int worst = 0;
        probe_error_ = (probe - ones).cwiseAbs().maxCoeff(&worst);
        if (!(probe_error_ < 1e-3)) {
            std::string what = "Factorization: matrix is singular or severely ill-conditioned (probe error " +
                               std::to_string(probe_error_) + ") near row " + std::to_string(worst);
            if (labeler) what += " [" + labeler(worst) + "]";
            throw SingularSystemError(what, worst);
        }
    }

    int dimension() const { return static_cast<int>(matrix_.rows()); }
    long long nnz_matrix() const { return matrix_.nonZeros(); }
    long long nnz_factors() const { return lu_->nnzL() + lu_->nnzU(); }
    double probe_error() const { return probe_error_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        if (rhs.size() != matrix_.rows()) throw std::invalid_argument("solve: rhs dimension mismatch");
        if (!rhs.allFinite()) throw std::invalid_argument("solve: non-finite right-hand side");
        Eigen::VectorXd x = lu_->solve(rhs);
#ifndef NDEBUG
        const double residual = (matrix_ * x - rhs).cwiseAbs().maxCoeff();
        const double scale = matrix_norm_inf() * x.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff();
        if (residual > 1e-10 * scale && scale > 0.0)
            throw std::runtime_error("solve: residual check failed, |Ax-b| = " + std::to_string(residual));
#endif
        return x;
    }

private:
    double matrix_norm_inf() const {
        Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(matrix_.rows());
        for (int k = 0; k < matrix_.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it)
                row_sums[it.row()] += std::abs(it.value());
        return row_sums.maxCoeff();
    }

    Eigen::SparseMatrix<double> matrix_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
    double probe_error_ = 0.0;
};

inline Factorization factorize(const SparseSystem& system, const DofLabeler& labeler = {}) {
    return Factorization(system.matrix, labeler);
}

inline Eigen::VectorXd solve(const Factorization& fact, const Eigen::VectorXd& rhs) {
    return fact.solve(rhs);
}

}  // namespace oldroyd
