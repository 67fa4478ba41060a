#include "blockspec/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace blockspec {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::uint64_t Rng::below(std::uint64_t k) {
    if (k == 0) throw std::invalid_argument("Rng::below: k must be positive");
    // Rejection sampling: discard the low partial block so r % k is unbiased.
    const std::uint64_t threshold = (0 - k) % k;  // 2^64 mod k
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r < threshold);
    return r % k;
}

double Rng::normal() {
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

LineSpectralSignal::LineSpectralSignal(std::vector<double> f, std::vector<double> a,
                                       std::vector<double> p)
    : freqs(std::move(f)), amps(std::move(a)), phases(std::move(p)) {
    if (freqs.empty() || freqs.size() != amps.size() || freqs.size() != phases.size())
        throw std::invalid_argument("LineSpectralSignal: freqs/amps/phases must be nonempty and equal length");
    for (double f_j : freqs)
        if (!(f_j >= 0.0 && f_j < 1.0))
            throw std::invalid_argument("LineSpectralSignal: frequency outside [0,1)");
    for (double a_j : amps)
        if (!(a_j > 0.0)) throw std::invalid_argument("LineSpectralSignal: amplitude must be > 0");
    for (double p_j : phases)
        if (!(p_j >= 0.0 && p_j < kTwoPi))
            throw std::invalid_argument("LineSpectralSignal: phase outside [0, 2pi)");
}

FrequencyBand::FrequencyBand(double lo, double hi) : f_lo(lo), f_hi(hi) {
    if (!(0.0 <= lo && lo < hi && hi <= 1.0))
        throw std::invalid_argument("FrequencyBand: need 0 <= f_lo < f_hi <= 1");
}

BlockPrior::BlockPrior(std::vector<FrequencyBand> b) : bands(std::move(b)) {
    if (bands.empty()) throw std::invalid_argument("BlockPrior: at least one band required");
    for (std::size_t k = 1; k < bands.size(); ++k)
        if (!(bands[k - 1].f_hi < bands[k].f_lo))
            throw std::invalid_argument("BlockPrior: bands must be sorted and pairwise disjoint");
}

double BlockPrior::total_width() const {
    double w = 0.0;
    for (const auto& b : bands) w += b.width();
    return w;
}

bool contains(const BlockPrior& prior, double f) {
    for (const auto& b : prior.bands)
        if (f >= b.f_lo && f <= b.f_hi) return true;
    return false;
}

SampleSet::SampleSet(int n_, std::vector<int> observed_) : n(n_), observed(std::move(observed_)) {
    if (n < 1) throw std::invalid_argument("SampleSet: n must be >= 1");
    if (observed.empty() || static_cast<int>(observed.size()) > n)
        throw std::invalid_argument("SampleSet: need 1 <= m <= n observed indices");
    for (std::size_t j = 0; j < observed.size(); ++j) {
        if (observed[j] < 0 || observed[j] >= n)
            throw std::invalid_argument("SampleSet: index out of range");
        if (j > 0 && observed[j] <= observed[j - 1])
            throw std::invalid_argument("SampleSet: indices must be strictly increasing");
    }
}

Observation::Observation(SampleSet set, std::vector<cplx> vals)
    : sample_set(std::move(set)), values(std::move(vals)) {
    if (values.size() != sample_set.observed.size())
        throw std::invalid_argument("Observation: values length must equal observed count");
}

std::vector<cplx> synthesize(const LineSpectralSignal& signal, int n) {
    if (n < 1) throw std::invalid_argument("synthesize: n must be >= 1");
    std::vector<cplx> x(static_cast<std::size_t>(n), cplx{0.0, 0.0});
    for (int j = 0; j < signal.sparsity(); ++j) {
        const double a = signal.amps[static_cast<std::size_t>(j)];
        const double f = signal.freqs[static_cast<std::size_t>(j)];
        const double phi = signal.phases[static_cast<std::size_t>(j)];
        for (int l = 0; l < n; ++l) {
            const double arg = kTwoPi * f * static_cast<double>(l) + phi;
            x[static_cast<std::size_t>(l)] += std::polar(a, arg);
        }
    }
    return x;
}

Observation sample(const std::vector<cplx>& full, const SampleSet& set) {
    if (static_cast<int>(full.size()) != set.n)
        throw std::invalid_argument("sample: full sequence length must equal set.n");
    std::vector<cplx> vals;
    vals.reserve(set.observed.size());
    for (int l : set.observed) vals.push_back(full[static_cast<std::size_t>(l)]);
    return Observation(set, std::move(vals));
}

LineSpectralSignal random_signal(Rng& rng, int s, const BlockPrior& prior) {
    if (s < 1) throw std::invalid_argument("random_signal: s must be >= 1");
    const double total = prior.total_width();
    if (!(total > 0.0)) throw std::invalid_argument("random_signal: prior has zero measure");

    std::vector<double> freqs(static_cast<std::size_t>(s));
    for (auto& f : freqs) {
        double x = rng.uniform() * total;
        for (const auto& band : prior.bands) {
            if (x < band.width() || &band == &prior.bands.back()) {
                f = std::min(band.f_lo + x, band.f_hi);
                break;
            }
            x -= band.width();
        }
        if (f >= 1.0) f = std::nextafter(1.0, 0.0);
    }
    std::vector<double> amps(static_cast<std::size_t>(s));
    for (auto& a : amps) {
        const double g = rng.normal();
        a = 0.5 + g * g;
    }
    std::vector<double> phases(static_cast<std::size_t>(s));
    for (auto& p : phases) p = rng.uniform() * kTwoPi;
    return LineSpectralSignal(std::move(freqs), std::move(amps), std::move(phases));
}

SampleSet random_mask(Rng& rng, int n, int m) {
    if (m < 1 || m > n) throw std::invalid_argument("random_mask: need 1 <= m <= n");
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first m entries are a uniform m-subset.
    for (int i = 0; i < m; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(m));
    std::sort(idx.begin(), idx.end());
    return SampleSet(n, std::move(idx));
}

}  // namespace blockspec
