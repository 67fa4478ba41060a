#include "blockspec/json_io.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace blockspec {

namespace {

using nlohmann::json;

std::vector<double> doubles_from(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw std::invalid_argument(std::string("missing array field: ") + key);
    return j.at(key).get<std::vector<double>>();
}

json complex_array(const std::vector<cplx>& values) {
    json arr = json::array();
    for (const auto& v : values) arr.push_back(json::array({v.real(), v.imag()}));
    return arr;
}

std::vector<cplx> complex_array_from(const json& arr) {
    std::vector<cplx> out;
    out.reserve(arr.size());
    for (const auto& pair : arr) {
        if (!pair.is_array() || pair.size() != 2)
            throw std::invalid_argument("complex value must be a [re, im] pair");
        out.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    return out;
}

}  // namespace

json signal_to_json(const LineSpectralSignal& signal) {
    return json{{"freqs", signal.freqs}, {"amps", signal.amps}, {"phases", signal.phases}};
}

LineSpectralSignal signal_from_json(const json& j) {
    return LineSpectralSignal(doubles_from(j, "freqs"), doubles_from(j, "amps"),
                              doubles_from(j, "phases"));
}

json prior_to_json(const BlockPrior& prior) {
    json bands = json::array();
    for (const auto& b : prior.bands) bands.push_back(json::array({b.f_lo, b.f_hi}));
    return json{{"bands", bands}};
}

BlockPrior prior_from_json(const json& j) {
    if (!j.contains("bands") || !j.at("bands").is_array())
        throw std::invalid_argument("missing array field: bands");
    std::vector<FrequencyBand> bands;
    for (const auto& pair : j.at("bands")) {
        if (!pair.is_array() || pair.size() != 2)
            throw std::invalid_argument("band must be a [f_lo, f_hi] pair");
        bands.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    return BlockPrior(std::move(bands));
}

json sample_set_to_json(const SampleSet& set) {
    return json{{"n", set.n}, {"observed", set.observed}};
}

SampleSet sample_set_from_json(const json& j) {
    if (!j.contains("n") || !j.contains("observed"))
        throw std::invalid_argument("sample set needs fields n and observed");
    return SampleSet(j.at("n").get<int>(), j.at("observed").get<std::vector<int>>());
}

json observation_to_json(const Observation& obs) {
    json j = sample_set_to_json(obs.sample_set);
    j["values"] = complex_array(obs.values);
    return j;
}

Observation observation_from_json(const json& j) {
    if (!j.contains("values")) throw std::invalid_argument("observation needs field values");
    return Observation(sample_set_from_json(j), complex_array_from(j.at("values")));
}

json instance_to_json(const LineSpectralSignal& signal, const BlockPrior& prior,
                      const Observation& obs) {
    json j = signal_to_json(signal);
    j.update(prior_to_json(prior));
    j.update(observation_to_json(obs));
    return j;
}

json spectrum_to_json(const RecoveredSpectrum& spectrum) {
    return json{{"freqs", spectrum.freqs},
                {"coeffs", complex_array(spectrum.coeffs)},
                {"dual_value", spectrum.dual_value},
                {"status", to_string(spectrum.status)}};
}

SweepConfig sweep_config_from_json(const json& j) {
    SweepConfig cfg{.n = 0,
                    .s_values = {},
                    .m_values = {},
                    .trials = 0,
                    .prior = prior_from_json(j),
                    .base_seed = 0,
                    .methods = {}};
    cfg.n = j.at("n").get<int>();
    cfg.s_values = j.at("s_values").get<std::vector<int>>();
    cfg.m_values = j.at("m_values").get<std::vector<int>>();
    cfg.trials = j.at("trials").get<int>();
    cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("methods")) {
        for (const auto& name : j.at("methods"))
            cfg.methods.push_back(method_from_string(name.get<std::string>()));
    } else {
        cfg.methods = {Method::BlockPrior, Method::NoPrior};
    }
    cfg.validate();
    return cfg;
}

void write_dual_poly_csv(const RecoveredSpectrum& spectrum, std::ostream& os) {
    os << "f,abs_Q\n";
    char buf[64];
    for (const auto& [f, a] : spectrum.dual_poly_grid) {
        std::snprintf(buf, sizeof buf, "%.17g", f);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", a);
        os << buf << '\n';
    }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace blockspec
