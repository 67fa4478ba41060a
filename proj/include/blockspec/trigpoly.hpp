#pragma once

#include <Eigen/Dense>
#include <vector>

#include "blockspec/signal.hpp"

namespace blockspec {

/// Angular band [omega_lo, omega_hi] inside [-pi, pi].
struct AngleBand {
    double omega_lo;
    double omega_hi;

    AngleBand(double lo, double hi);
};

/// Coefficients of the degree-1 band indicator D(omega) = d0 + 2 Re(d1 e^{-i omega}),
/// nonnegative exactly on the generating band and negative outside it.
struct DCoefficients {
    double d0;
    cplx d1;
};

/// Gram certificate pair: Q1 is n x n, Q2 is (n-1) x (n-1), both Hermitian PSD.
struct GramPair {
    Eigen::MatrixXcd Q1;
    Eigen::MatrixXcd Q2;
};

/// Coefficient vector of the dual polynomial Q_f = sum_l q_l e^{-i 2 pi f l}.
struct DualVector {
    std::vector<cplx> q;

    int n() const { return static_cast<int>(q.size()); }
};

/// Sum of the k-th subdiagonal of Q (entries with row - col = k).
/// Equals tr[Theta_k Q] for the elementary Toeplitz matrix Theta_k.
cplx theta_trace(const Eigen::MatrixXcd& Q, int k);

/// Maps a frequency band to its image on the angular circle:
/// omega = 2 pi f for f <= 0.5, omega = 2 pi (f - 1) for f > 0.5.
/// A band whose interior crosses f = 0.5 wraps through +-pi and splits in two.
std::vector<AngleBand> band_to_angles(const FrequencyBand& band);

/// Band indicator coefficients via alpha = tan(omega_lo/2), beta = tan(omega_hi/2).
/// Endpoints at +-pi are clamped to +-(pi - 1e-9) so the tangents stay finite.
DCoefficients d_coeffs(const AngleBand& aband);

/// D(omega) for a coefficient pair.
double d_eval(const DCoefficients& d, double omega);

/// Trace functional L_k(Q1, Q2) = tr[Theta_k Q1] + d1 tr[Theta_{k-1} Q2]
///   + d0 tr[Theta_k Q2] + conj(d1) tr[Theta_{k+1} Q2],
/// with tr[Theta_{-1} Q2] = conj(tr[Theta_1 Q2]) and tr[Theta_j Q2] = 0 for j > n-2.
cplx l_op(int k, const AngleBand& aband, const GramPair& pair);

/// Q_f at a single frequency.
cplx eval_dual_poly(const DualVector& q, double f);

/// Q_f on the uniform grid f = j/grid_size, computed by a zero-padded DFT
/// (forward sign convention, e^{-i 2 pi j l / grid_size}).
std::vector<cplx> eval_dual_poly_grid(const DualVector& q, int grid_size);

}  // namespace blockspec
