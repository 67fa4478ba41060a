#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace blockspec {

using cplx = std::complex<double>;

/// Deterministic RNG: mt19937_64 engine with hand-rolled distributions so
/// that output streams are identical across compilers and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Unbiased uniform integer in [0, k).
    std::uint64_t below(std::uint64_t k);

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (cosine branch only, no cached spare).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// s-sparse sum of complex exponentials: x[l] = sum_j amp_j e^{i(2 pi f_j l + phi_j)}.
struct LineSpectralSignal {
    std::vector<double> freqs;   // normalized frequencies in [0,1)
    std::vector<double> amps;    // magnitudes, all > 0
    std::vector<double> phases;  // radians in [0, 2 pi)

    LineSpectralSignal(std::vector<double> f, std::vector<double> a, std::vector<double> p);

    int sparsity() const { return static_cast<int>(freqs.size()); }

    cplx coeff(int j) const { return std::polar(amps[j], phases[j]); }
};

/// One frequency band [f_lo, f_hi] within [0, 1]. Endpoints are inside.
struct FrequencyBand {
    double f_lo;
    double f_hi;

    FrequencyBand(double lo, double hi);

    double width() const { return f_hi - f_lo; }
};

/// Union of disjoint bands, sorted by lower edge.
struct BlockPrior {
    std::vector<FrequencyBand> bands;

    explicit BlockPrior(std::vector<FrequencyBand> b);

    int band_count() const { return static_cast<int>(bands.size()); }
    double total_width() const;
};

/// true iff f lies in some band (closed intervals).
bool contains(const BlockPrior& prior, double f);

/// Indices M subset of {0..n-1} on which the signal is observed.
struct SampleSet {
    int n;                      // full regular grid size |N|
    std::vector<int> observed;  // strictly increasing, each in [0, n-1]

    SampleSet(int n_, std::vector<int> observed_);

    int observed_count() const { return static_cast<int>(observed.size()); }
};

struct Observation {
    SampleSet sample_set;
    std::vector<cplx> values;  // values[j] = x[observed[j]]

    Observation(SampleSet set, std::vector<cplx> vals);
};

/// Evaluates x[l] for l = 0..n-1.
std::vector<cplx> synthesize(const LineSpectralSignal& signal, int n);

/// Restricts a full n-sample sequence to the observed index set.
Observation sample(const std::vector<cplx>& full, const SampleSet& set);

/// Random s-sparse signal with frequencies uniform over the band union
/// (by measure), phases uniform on [0, 2 pi), amplitudes 0.5 + N(0,1)^2.
/// Draw order: all frequencies, then all amplitudes, then all phases.
LineSpectralSignal random_signal(Rng& rng, int s, const BlockPrior& prior);

/// Uniformly random m-subset of {0..n-1}, returned sorted.
SampleSet random_mask(Rng& rng, int n, int m);

}  // namespace blockspec
