#include "blockspec/trigpoly.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace blockspec {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kPoleGuard = 1e-9;  // clamp distance from +-pi before tan

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

AngleBand::AngleBand(double lo, double hi) : omega_lo(lo), omega_hi(hi) {
    if (!(lo >= -kPi - 1e-12 && hi <= kPi + 1e-12 && lo < hi))
        throw std::invalid_argument("AngleBand: need -pi <= omega_lo < omega_hi <= pi");
}

cplx theta_trace(const Eigen::MatrixXcd& Q, int k) {
    const int d = static_cast<int>(Q.rows());
    if (Q.cols() != d) throw std::invalid_argument("theta_trace: matrix must be square");
    if (k < 0 || k >= d) throw std::out_of_range("theta_trace: k out of [0, d-1]");
    cplx s{0.0, 0.0};
    for (int i = 0; i + k < d; ++i) s += Q(i + k, i);
    return s;
}

std::vector<AngleBand> band_to_angles(const FrequencyBand& band) {
    if (band.f_hi <= 0.5) return {AngleBand(kTwoPi * band.f_lo, kTwoPi * band.f_hi)};
    if (band.f_lo >= 0.5)
        return {AngleBand(kTwoPi * (band.f_lo - 1.0), kTwoPi * (band.f_hi - 1.0))};
    // The image wraps through +-pi: split at f = 0.5.
    return {AngleBand(kTwoPi * band.f_lo, kPi), AngleBand(-kPi, kTwoPi * (band.f_hi - 1.0))};
}

DCoefficients d_coeffs(const AngleBand& aband) {
    const double lo = std::max(aband.omega_lo, -kPi + kPoleGuard);
    const double hi = std::min(aband.omega_hi, kPi - kPoleGuard);
    const double alpha = std::tan(lo / 2.0);
    const double beta = std::tan(hi / 2.0);
    DCoefficients d;
    d.d0 = -(alpha * beta + 1.0) / 2.0;
    d.d1 = cplx((1.0 - alpha * beta) / 4.0, (alpha + beta) / 4.0);
    return d;
}

double d_eval(const DCoefficients& d, double omega) {
    return d.d0 + 2.0 * (d.d1 * std::exp(cplx(0.0, -omega))).real();
}

cplx l_op(int k, const AngleBand& aband, const GramPair& pair) {
    const int n = static_cast<int>(pair.Q1.rows());
    if (pair.Q1.cols() != n || pair.Q2.rows() != n - 1 || pair.Q2.cols() != n - 1)
        throw std::invalid_argument("l_op: Q1 must be n x n and Q2 (n-1) x (n-1)");
    if (k < 0 || k > n - 1) throw std::out_of_range("l_op: k out of [0, n-1]");

    const DCoefficients d = d_coeffs(aband);
    const int m = n - 1;  // Q2 side; diagonals 0..m-1 = 0..n-2
    auto t2 = [&](int j) -> cplx {
        if (j > m - 1) return cplx{0.0, 0.0};
        if (j >= 0) return theta_trace(pair.Q2, j);
        return std::conj(theta_trace(pair.Q2, -j));  // Hermitian symmetry r_{-k} = conj(r_k)
    };
    return theta_trace(pair.Q1, k) + d.d1 * t2(k - 1) + cplx(d.d0, 0.0) * t2(k) +
           std::conj(d.d1) * t2(k + 1);
}

cplx eval_dual_poly(const DualVector& q, double f) {
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("eval_dual_poly: f outside [0,1]");
    cplx acc{0.0, 0.0};
    for (int l = 0; l < q.n(); ++l)
        acc += q.q[static_cast<std::size_t>(l)] * std::exp(cplx(0.0, -kTwoPi * f * l));
    return acc;
}

std::vector<cplx> eval_dual_poly_grid(const DualVector& q, int grid_size) {
    const int n = q.n();
    if (grid_size < n) throw std::invalid_argument("eval_dual_poly_grid: grid_size must be >= n");

    std::vector<cplx> in(static_cast<std::size_t>(grid_size), cplx{0.0, 0.0});
    std::copy(q.q.begin(), q.q.end(), in.begin());
    std::vector<cplx> out(static_cast<std::size_t>(grid_size));

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan = fftw_plan_dft_1d(grid_size, reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    if (plan == nullptr) throw std::runtime_error("eval_dual_poly_grid: FFTW plan failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace blockspec
