#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blockspec/conic.hpp"
#include "blockspec/signal.hpp"
#include "blockspec/solver.hpp"
#include "blockspec/trigpoly.hpp"

namespace blockspec {

struct LocalizationConfig {
    int grid_size = 1 << 16;
    double peak_threshold = 1.0 - 1e-4;
    double match_tol = 1e-3;  // normalized frequency
    int refine_iters = 30;
};

struct RecoveredSpectrum {
    std::vector<double> freqs;  // sorted ascending
    std::vector<cplx> coeffs;
    double dual_value = 0.0;
    std::vector<std::pair<double, double>> dual_poly_grid;  // (f, |Q_f|)
    SolveStatus status = SolveStatus::MaxIter;
    int n = 0;  // regular grid size of the source observation
};

/// Peak locations of |Q_f| over the search region: maximal grid runs with
/// |Q_f| >= peak_threshold, one golden-section-refined frequency per run.
/// A run covering more than 10% of the region is a degenerate certificate
/// and raises an error. Region is the prior's bands, or the full circle
/// when absent.
std::vector<double> localize(const DualVector& q, const std::optional<BlockPrior>& region,
                             const LocalizationConfig& cfg);

/// Least-squares coefficients for fixed frequencies on the observed samples.
std::vector<cplx> recover_amplitudes(const std::vector<double>& freqs, const Observation& obs);

/// Full pipeline: build the block (or global) dual, solve, localize over the
/// prior (or full circle), fit amplitudes, and attach a 2048-point |Q_f| trace.
RecoveredSpectrum estimate(const Observation& observation, const std::optional<BlockPrior>& prior,
                           const SolverConfig& solver_cfg = {}, const LocalizationConfig& loc_cfg = {});

/// x[l] = sum_j coeffs[j] e^{i 2 pi freqs[j] l} for l = 0..n-1.
std::vector<cplx> reconstruct(const std::vector<double>& freqs, const std::vector<cplx>& coeffs,
                              int n);

/// Perfect-recovery test: matching counts, one-to-one frequency match within
/// match_tol (circular distance), and reconstruction relative l2 error <= 1e-3.
bool verdict(const LineSpectralSignal& truth, const RecoveredSpectrum& recovered, double match_tol);

}  // namespace blockspec
