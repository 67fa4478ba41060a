#include "blockspec/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <mutex>
#include <stdexcept>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Sparse>

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace blockspec {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Solved: return "SOLVED";
        case SolveStatus::MaxIter: return "MAX_ITER";
        case SolveStatus::InfeasibleLikely: return "INFEASIBLE_LIKELY";
    }
    return "?";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Eigen::VectorXd;

/// The solver owns its BLAS: keep it single-threaded so iterate sequences are
/// bit-reproducible and outer-level parallelism does not oversubscribe.
void pin_blas_threads() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        setenv("OPENBLAS_NUM_THREADS", "1", 0);
        if (openblas_set_num_threads != nullptr) openblas_set_num_threads(1);
    });
}

// Divide-and-conquer driver: measurably faster than MRRR on the clustered,
// low-rank spectra the iterates settle into.
void hermitian_eig(const Eigen::MatrixXcd& A, Eigen::MatrixXcd& vecs, VectorXd& evals) {
    const int n = static_cast<int>(A.rows());
    evals.resize(n);
    vecs = A;
    const lapack_int info =
        LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, vecs.data(), n, evals.data());
    if (info != 0) throw std::runtime_error("hermitian_eig: zheevd failed");
}

void symmetric_eig(Eigen::MatrixXd& A, VectorXd& evals) {
    const int n = static_cast<int>(A.rows());
    evals.resize(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, A.data(), n, evals.data());
    if (info != 0) throw std::runtime_error("symmetric_eig: LAPACK dsyevd failed");
}

Eigen::MatrixXcd project_hermitian_psd(const Eigen::MatrixXcd& M) {
    VectorXd evals;
    Eigen::MatrixXcd vecs;
    hermitian_eig(M, vecs, evals);
    const int n = static_cast<int>(evals.size());
    int first_pos = 0;
    while (first_pos < n && evals[first_pos] <= 0.0) ++first_pos;
    const int n_pos = n - first_pos;
    if (n_pos == 0) return Eigen::MatrixXcd::Zero(n, n);
    if (first_pos == 0) return M;
    // Build from whichever side of the spectrum split is thinner.
    if (n_pos <= first_pos) {
        Eigen::MatrixXcd Vs = vecs.rightCols(n_pos);
        for (int j = 0; j < n_pos; ++j) Vs.col(j) *= std::sqrt(evals[first_pos + j]);
        return Vs * Vs.adjoint();
    }
    Eigen::MatrixXcd Vs = vecs.leftCols(first_pos);
    for (int j = 0; j < first_pos; ++j) Vs.col(j) *= std::sqrt(-evals[j]);
    Eigen::MatrixXcd P = M + Vs * Vs.adjoint();
    P = 0.5 * (P + P.adjoint());
    return P;
}

void svec_to_sym(const double* v, int side, Eigen::MatrixXd& S) {
    S.resize(side, side);
    for (int c = 0; c < side; ++c)
        for (int r = c; r < side; ++r) {
            const double val = v[Svec::idx(side, r, c)];
            S(r, c) = (r == c) ? val : val * M_SQRT1_2;
            S(c, r) = S(r, c);
        }
}

void sym_to_svec(const Eigen::MatrixXd& S, int side, double* v) {
    for (int c = 0; c < side; ++c)
        for (int r = c; r < side; ++r)
            v[Svec::idx(side, r, c)] = (r == c) ? S(r, c) : S(r, c) * M_SQRT2;
}

/// In-place projection of a full iterate onto the cone product.
void project_cone(const ConicProgram& prog, VectorXd& w) {
    for (const auto& blk : prog.cones) {
        if (blk.kind == ConeBlock::Kind::Free) continue;
        double* base = w.data() + blk.offset;
        if (blk.complex_side > 0) {
            const HermitianEmbedding emb(blk.complex_side);
            const Eigen::MatrixXcd M = emb.unpack(base);
            emb.pack(project_hermitian_psd(M), base);
        } else {
            Eigen::MatrixXd S;
            svec_to_sym(base, blk.side, S);
            VectorXd evals;
            symmetric_eig(S, evals);
            int first_pos = 0;
            while (first_pos < evals.size() && evals[first_pos] <= 0.0) ++first_pos;
            const int k = blk.side - first_pos;
            Eigen::MatrixXd P;
            if (k == 0) {
                P = Eigen::MatrixXd::Zero(blk.side, blk.side);
            } else {
                Eigen::MatrixXd Vs = S.rightCols(k);
                for (int j = 0; j < k; ++j) Vs.col(j) *= std::sqrt(evals[first_pos + j]);
                P = Vs * Vs.transpose();
            }
            sym_to_svec(P, blk.side, base);
        }
    }
}

/// Projection onto the dual cone product: PSD blocks are self-dual, the dual
/// of a free block is the zero cone.
void project_dual_cone(const ConicProgram& prog, VectorXd& w) {
    for (const auto& blk : prog.cones)
        if (blk.kind == ConeBlock::Kind::Free)
            w.segment(blk.offset, blk.dim).setZero();
    project_cone(prog, w);
}

struct Assembled {
    SpMat A;      // rows x num_vars
    VectorXd b;
    VectorXd c;
};

Assembled assemble(const ConicProgram& prog) {
    Assembled out;
    const int rows = static_cast<int>(prog.equalities.size());
    std::vector<Eigen::Triplet<double>> trip;
    std::size_t nnz = 0;
    for (const auto& eq : prog.equalities) nnz += eq.terms.size();
    trip.reserve(nnz);
    out.b.resize(rows);
    for (int r = 0; r < rows; ++r) {
        out.b[r] = prog.equalities[static_cast<std::size_t>(r)].rhs;
        for (const auto& [c, val] : prog.equalities[static_cast<std::size_t>(r)].terms)
            trip.emplace_back(r, c, val);
    }
    out.A.resize(rows, prog.num_vars);
    out.A.setFromTriplets(trip.begin(), trip.end());
    out.c = Eigen::Map<const VectorXd>(prog.objective.data(), prog.num_vars);
    return out;
}

struct Scaling {
    VectorXd d;  // row scales
    VectorXd e;  // column scales (uniform within each PSD block)
    double sigma = 1.0;
};

Scaling ruiz_equilibrate(const ConicProgram& prog, const Assembled& asm_, int sweeps) {
    const int rows = static_cast<int>(asm_.A.rows());
    const int cols = static_cast<int>(asm_.A.cols());
    Scaling sc;
    sc.d = VectorXd::Ones(rows);
    sc.e = VectorXd::Ones(cols);
    VectorXd row_norm(rows), col_norm(cols);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        row_norm.setZero();
        for (int k = 0; k < asm_.A.outerSize(); ++k)
            for (SpMat::InnerIterator it(asm_.A, k); it; ++it) {
                const double m = std::abs(it.value()) * sc.d[it.row()] * sc.e[it.col()];
                row_norm[it.row()] = std::max(row_norm[it.row()], m);
            }
        for (int r = 0; r < rows; ++r)
            if (row_norm[r] > 0.0) sc.d[r] /= std::sqrt(row_norm[r]);

        col_norm.setZero();
        for (int k = 0; k < asm_.A.outerSize(); ++k)
            for (SpMat::InnerIterator it(asm_.A, k); it; ++it) {
                const double m = std::abs(it.value()) * sc.d[it.row()] * sc.e[it.col()];
                col_norm[it.col()] = std::max(col_norm[it.col()], m);
            }
        for (const auto& blk : prog.cones) {
            if (blk.kind == ConeBlock::Kind::Free) {
                for (int c = blk.offset; c < blk.offset + blk.dim; ++c)
                    if (col_norm[c] > 0.0) sc.e[c] /= std::sqrt(col_norm[c]);
            } else {
                // One scalar per PSD block keeps the scaled cone a PSD cone.
                double g = 0.0;
                for (int c = blk.offset; c < blk.offset + blk.dim; ++c)
                    g = std::max(g, col_norm[c]);
                if (g > 0.0) {
                    const double s = 1.0 / std::sqrt(g);
                    for (int c = blk.offset; c < blk.offset + blk.dim; ++c) sc.e[c] *= s;
                }
            }
        }
    }
    return sc;
}

/// Type-II Anderson acceleration over the (z, u) fixed-point state, with a
/// residual-increase safeguard handled by the caller. Deterministic.
class AndersonAccelerator {
public:
    AndersonAccelerator(int dim, int memory) : dim_(dim), memory_(memory) {}

    void clear() {
        cols_ = 0;
        newest_ = -1;
    }

    /// Records (x_k, g_k) with g_k = T(x_k) - x_k.
    void push(const VectorXd& x, const VectorXd& g) {
        if (X_.size() == 0) {
            X_.resize(dim_, memory_);
            G_.resize(dim_, memory_);
        }
        newest_ = (newest_ + 1) % memory_;
        X_.col(newest_) = x;
        G_.col(newest_) = g;
        cols_ = std::min(cols_ + 1, memory_);
    }

    /// Combined candidate from min_gamma | g_k - dG gamma |; returns false
    /// until two points are recorded.
    bool candidate(const VectorXd& x_plain, const VectorXd& g, VectorXd& out) const {
        const int m = cols_ - 1;
        if (m < 1) return false;
        Eigen::MatrixXd dG(dim_, m), dX(dim_, m);
        int col = newest_;
        for (int j = 0; j < m; ++j) {
            const int prev = (col + memory_ - 1) % memory_;
            dG.col(m - 1 - j) = G_.col(col) - G_.col(prev);
            dX.col(m - 1 - j) = X_.col(col) - X_.col(prev);
            col = prev;
        }
        Eigen::MatrixXd gram = dG.transpose() * dG;
        const double reg = 1e-10 * (1.0 + gram.trace());
        gram.diagonal().array() += reg;
        const Eigen::VectorXd gamma = gram.ldlt().solve(dG.transpose() * g);
        if (!gamma.allFinite()) return false;
        out = x_plain - (dX + dG) * gamma;
        return true;
    }

private:
    int dim_;
    int memory_;
    int cols_ = 0;
    int newest_ = -1;
    Eigen::MatrixXd X_;
    Eigen::MatrixXd G_;
};

}  // namespace

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& block) {
    pin_blas_threads();
    if (block.rows() != block.cols()) throw std::invalid_argument("project_psd: matrix must be square");
    Eigen::MatrixXd S = 0.5 * (block + block.transpose());
    VectorXd evals;
    symmetric_eig(S, evals);
    int first_pos = 0;
    while (first_pos < evals.size() && evals[first_pos] <= 0.0) ++first_pos;
    const int k = static_cast<int>(evals.size()) - first_pos;
    if (k == 0) return Eigen::MatrixXd::Zero(block.rows(), block.cols());
    Eigen::MatrixXd Vs = S.rightCols(k);
    for (int j = 0; j < k; ++j) Vs.col(j) *= std::sqrt(evals[first_pos + j]);
    return Vs * Vs.transpose();
}

SolverResult solve(const ConicProgram& program, const SolverConfig& config) {
    pin_blas_threads();
    program.validate();
    if (!(config.alpha >= 1.0 && config.alpha < 2.0))
        throw std::invalid_argument("solve: alpha must lie in [1, 2)");
    if (config.eps_abs <= 0.0 || config.eps_rel <= 0.0 || config.max_iter < 1 ||
        config.rho <= 0.0 || config.check_every < 1)
        throw std::invalid_argument("solve: config values must be positive");

    const Assembled raw = assemble(program);
    const int rows = static_cast<int>(raw.A.rows());
    const int cols = static_cast<int>(raw.A.cols());

    const Scaling sc = ruiz_equilibrate(program, raw, 5);

    SpMat A_hat = raw.A;
    for (int k = 0; k < A_hat.outerSize(); ++k)
        for (SpMat::InnerIterator it(A_hat, k); it; ++it)
            it.valueRef() *= sc.d[it.row()] * sc.e[it.col()];
    VectorXd b_hat = sc.d.cwiseProduct(raw.b);
    VectorXd c_scaled = sc.e.cwiseProduct(raw.c);
    Scaling sc_mut = sc;
    sc_mut.sigma = 1.0 / std::max(1.0, c_scaled.lpNorm<Eigen::Infinity>());
    VectorXd c_hat = sc_mut.sigma * c_scaled;

    Eigen::SimplicialLDLT<SpMat> kkt;
    SpMat At = A_hat.transpose();
    if (rows > 0) {
        SpMat AAt = (A_hat * At).pruned();
        double max_diag = 0.0;
        for (int r = 0; r < rows; ++r) max_diag = std::max(max_diag, AAt.coeff(r, r));
        const double ridge = 1e-12 * (1.0 + max_diag);
        SpMat I(rows, rows);
        I.setIdentity();
        AAt += ridge * I;
        kkt.compute(AAt);
        if (kkt.info() != Eigen::Success)
            throw std::runtime_error("solve: factorization of A A^T broke down");
    }

    SolverResult result;
    result.v.assign(static_cast<std::size_t>(cols), 0.0);
    result.y.assign(static_cast<std::size_t>(rows), 0.0);

    const double b_norm = raw.b.norm();
    const double c_norm = raw.c.norm();
    const double eps_pri = config.eps_abs + config.eps_rel * b_norm;
    const double eps_dual = config.eps_abs + config.eps_rel * c_norm;

    // Structural consistency probe: the least-squares solution of A v = b
    // must actually satisfy the equalities.
    if (rows > 0) {
        const VectorXd nu0 = kkt.solve(b_hat);
        const VectorXd v_ls = At * nu0;
        if ((A_hat * v_ls - b_hat).norm() > 1e-6 * (1.0 + b_hat.norm())) {
            result.status = SolveStatus::InfeasibleLikely;
            return result;
        }
    }

    VectorXd z = VectorXd::Zero(cols);
    VectorXd u = VectorXd::Zero(cols);
    VectorXd nu_tilde = VectorXd::Zero(rows);
    VectorXd g(cols), v(cols), w(cols);
    double rho = config.rho;

    double best_combined = std::numeric_limits<double>::infinity();
    int stale_checks = 0;
    int iter = 0;
    bool solved = false;

    auto compute_residuals = [&](double& pri, double& dua, double& obj) {
        const VectorXd x_un = sc_mut.e.cwiseProduct(z);
        pri = (raw.A * x_un - raw.b).norm();
        const VectorXd y_un = -(rho / sc_mut.sigma) * sc_mut.d.cwiseProduct(nu_tilde);
        VectorXd s_un = (-rho / sc_mut.sigma) * u.cwiseQuotient(sc_mut.e);
        VectorXd dual_vec = raw.c + raw.A.transpose() * y_un + s_un;
        dua = dual_vec.norm();
        obj = raw.c.dot(x_un);
        result.y.assign(y_un.data(), y_un.data() + rows);
        return;
    };

    for (iter = 1; iter <= config.max_iter; ++iter) {
        g = z - u + c_hat / rho;
        if (rows > 0) {
            nu_tilde = kkt.solve(A_hat * g - b_hat);
            v = g - At * nu_tilde;
        } else {
            v = g;
        }
        w = config.alpha * v + (1.0 - config.alpha) * z + u;
        z = w;
        project_cone(program, z);
        u = w - z;

        if (iter % config.check_every == 0 || iter == config.max_iter) {
            double pri = 0.0, dua = 0.0, obj = 0.0;
            compute_residuals(pri, dua, obj);
            result.primal_residual = pri;
            result.dual_residual = dua;
            result.objective = obj;
            if (pri <= eps_pri && dua <= eps_dual) {
                solved = true;
                break;
            }
            const double pri_n = pri / eps_pri;
            const double dua_n = dua / eps_dual;
            const double combined = std::max(pri_n, dua_n);
            if (combined < best_combined) {
                best_combined = combined;
                stale_checks = 0;
            } else if (++stale_checks >= 1000 && combined > 1e4) {
                result.status = SolveStatus::InfeasibleLikely;
                result.iterations = iter;
                const VectorXd x_un = sc_mut.e.cwiseProduct(z);
                result.v.assign(x_un.data(), x_un.data() + cols);
                return result;
            }
            if (pri_n > 10.0 * dua_n && rho < 1e6) {
                rho *= 2.0;
                u *= 0.5;
            } else if (dua_n > 10.0 * pri_n && rho > 1e-6) {
                rho *= 0.5;
                u *= 2.0;
            }
        }
    }
    iter = std::min(iter, config.max_iter);

    const VectorXd x_un = sc_mut.e.cwiseProduct(z);
    result.v.assign(x_un.data(), x_un.data() + cols);
    result.iterations = iter;
    result.status = solved ? SolveStatus::Solved : SolveStatus::MaxIter;
    return result;
}

ResidualReport residuals(const ConicProgram& program, const std::vector<double>& v,
                         const std::vector<double>& y) {
    pin_blas_threads();
    if (static_cast<int>(v.size()) != program.num_vars ||
        y.size() != program.equalities.size())
        throw std::invalid_argument("residuals: dimension mismatch");
    const Assembled asm_ = assemble(program);
    const Eigen::Map<const VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::Map<const VectorXd> yy(y.data(), static_cast<Eigen::Index>(y.size()));
    ResidualReport rep;
    rep.primal = (asm_.A * vv - asm_.b).norm();
    VectorXd s = -(asm_.c + asm_.A.transpose() * yy);
    project_dual_cone(program, s);
    rep.dual = (asm_.c + asm_.A.transpose() * yy + s).norm();
    rep.gap = std::abs(asm_.c.dot(vv) + asm_.b.dot(yy));
    return rep;
}

}  // namespace blockspec
