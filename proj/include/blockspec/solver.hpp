#pragma once

#include <Eigen/Dense>
#include <vector>

#include "blockspec/conic.hpp"

namespace blockspec {

struct SolverConfig {
    double eps_abs = 1e-7;
    double eps_rel = 1e-7;
    int max_iter = 50000;
    double rho = 1.0;     // initial penalty, adapted by residual balancing
    double alpha = 1.6;   // over-relaxation in [1, 2)
    int check_every = 25;
};

enum class SolveStatus { Solved, MaxIter, InfeasibleLikely };

const char* to_string(SolveStatus status);

struct SolverResult {
    std::vector<double> v;  // cone-feasible primal iterate (unscaled)
    std::vector<double> y;  // equality multipliers (unscaled)
    SolveStatus status = SolveStatus::MaxIter;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;  // objective . v
};

/// ADMM over the splitting (affine step, cone projection) with Ruiz
/// equilibration, over-relaxation, and residual-balanced rho adaptation.
/// The affine step reuses one cached factorization of A A^T for every rho.
SolverResult solve(const ConicProgram& program, const SolverConfig& config = {});

/// Frobenius-nearest PSD matrix: symmetrize by averaging, clip negative
/// eigenvalues to zero.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& block);

struct ResidualReport {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

/// KKT residuals of a candidate pair: primal |Av - b|, dual |c + A^T y + s|
/// with s the cone-dual slack recovered by projection, and |c.v + b.y|.
ResidualReport residuals(const ConicProgram& program, const std::vector<double>& v,
                         const std::vector<double>& y);

}  // namespace blockspec
