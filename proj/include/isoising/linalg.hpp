#ifndef ISOISING_LINALG_HPP
#define ISOISING_LINALG_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "isoising/base.hpp"

namespace isoising {

/// Sparse symmetric positive definite solve A x = b (LDLT).
class SpdSolver {
  public:
    void begin(int n) {
        n_ = n;
        trips_.clear();
        rhs_ = Eigen::VectorXd::Zero(n);
    }
    void add(int i, int j, double v) { trips_.emplace_back(i, j, v); }
    void add_rhs(int i, double v) { rhs_[i] += v; }

    Eigen::VectorXd solve() {
        Eigen::SparseMatrix<double> A(n_, n_);
        A.setFromTriplets(trips_.begin(), trips_.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        if (ldlt.info() != Eigen::Success)
            fail(ErrorKind::SingularSystem, "SpdSolver: factorization failed");
        Eigen::VectorXd x = ldlt.solve(rhs_);
        x += ldlt.solve(rhs_ - A * x);  // one step of iterative refinement
        return x;
    }

  private:
    int n_ = 0;
    std::vector<Eigen::Triplet<double>> trips_;
    Eigen::VectorXd rhs_;
};

struct LsqResult {
    Eigen::VectorXd x;
    double residual = 0.0;   // ||Ax - b||
    double rhs_norm = 0.0;   // ||b||
    double min_pivot = 0.0;  // smallest diagonal of the normal-equation LDLT
};

/// Sparse linear least squares min ||A x - b|| via the normal equations with
/// iterative refinement.  The systems assembled here are first-order
/// difference operators, so the normal matrix stays well conditioned at desk
/// scale.
class LsqSolver {
  public:
    void begin(int rows_hint, int cols) {
        cols_ = cols;
        trips_.clear();
        rows_.clear();
        rhs_.clear();
        trips_.reserve(rows_hint * 4);
    }

    int new_row(double b) {
        rhs_.push_back(b);
        rows_.push_back({});
        return static_cast<int>(rhs_.size()) - 1;
    }
    void add(int row, int col, double v) {
        if (v != 0.0) rows_[row].push_back({col, v});
    }

    int row_count() const { return static_cast<int>(rhs_.size()); }

    LsqResult solve() const {
        const int m = row_count();
        Eigen::SparseMatrix<double> A(m, cols_);
        std::vector<Eigen::Triplet<double>> at;
        for (int r = 0; r < m; ++r)
            for (auto [c, v] : rows_[r]) at.emplace_back(r, c, v);
        A.setFromTriplets(at.begin(), at.end());
        Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m);

        Eigen::SparseMatrix<double> AtA = Eigen::SparseMatrix<double>(A.transpose()) * A;
        Eigen::VectorXd Atb = A.transpose() * b;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(AtA);
        if (ldlt.info() != Eigen::Success)
            fail(ErrorKind::RankDeficient, "LsqSolver: normal equations not factorizable");
        Eigen::VectorXd x = ldlt.solve(Atb);
        for (int it = 0; it < 2; ++it) {
            Eigen::VectorXd r = Atb - AtA * x;
            x += ldlt.solve(r);
        }
        LsqResult out;
        out.x = x;
        out.residual = (A * x - b).norm();
        out.rhs_norm = b.norm();
        out.min_pivot = ldlt.vectorD().minCoeff();
        return out;
    }

  private:
    int cols_ = 0;
    std::vector<Eigen::Triplet<double>> trips_;
    std::vector<std::vector<std::pair<int, double>>> rows_;
    std::vector<double> rhs_;
};

}  // namespace isoising

#endif
