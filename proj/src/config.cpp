#include "linksim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace linksim::cli {

namespace {

enum class Kind { Integer, Real, RealOrAuto, Text, RealList };

struct KeySpec {
    const char* key;
    Kind kind;
    double min;
    double max;
    const char* def;
    const char* choices; // for Text: comma-separated allowed values, or ""
    const char* doc;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

const KeySpec kRegistry[] = {
    {"channel.beta", Kind::Real, 0.0, 1.0, "0.9", "", "Gauss-Markov correlation factor"},
    {"plan.base_seed", Kind::Integer, 0, 9e18, "1", "", "base RNG seed"},
    {"plan.replications", Kind::Integer, 1, 1e6, "20", "", "independent replications per estimate"},
    {"plan.final_slots", Kind::Integer, 1, 9e15, "50000", "", "slots per replication, final estimates"},
    {"plan.search_slots", Kind::Integer, 1, 9e15, "100000", "", "slots per candidate during rate tuning"},
    {"plan.screen_packets", Kind::Integer, 1, 9e15, "10000", "", "packets per candidate, tune-alg2 screen pass"},
    {"plan.search_packets", Kind::Integer, 1, 9e15, "100000", "", "packets per candidate, tune-alg2 full pass"},
    {"plan.validation_packets", Kind::Integer, 1, 9e15, "1000000", "", "total packets for tune-alg2 validation"},
    {"plan.validation_replications", Kind::Integer, 1, 1e6, "10", "", "replications for tune-alg2 validation"},
    {"rate.snr_db", Kind::Real, -50.0, 80.0, "10", "", "transmit SNR 10 log10 P for Problem-1 schemes"},
    {"quantizer.regions", Kind::Integer, 1, 4096, "2", "", "quantization regions N"},
    {"quantizer.thresholds", Kind::RealList, 0.0, kInf, "", "", "explicit gain thresholds (evaluate mode)"},
    {"quantizer.grid_max", Kind::Real, 1e-9, kInf, "10", "", "upper end of the threshold search grid"},
    {"quantizer.grid_points", Kind::Integer, 2, 1e6, "200", "", "points per threshold axis"},
    {"quantizer.grid_refine", Kind::Integer, 0, 16, "2", "", "refinement rounds for the threshold grid"},
    {"alg1.rate", Kind::Real, 1e-9, kInf, "1", "", "initial rate R, npcu"},
    {"alg1.delta", Kind::Real, 1e-9, 1.0, "0.1", "", "rate adaptation coefficient, in (0,1)"},
    {"alg1.timing", Kind::Text, 0, 0, "same_block", "same_block,next_block", "feedback timing mode"},
    {"alg1.rate_floor", Kind::Real, 1e-12, kInf, "0.001", "", "lower clamp on the adapted rate"},
    {"tune1.rate_lo", Kind::Real, 1e-9, kInf, "0.1", "", "rate grid lower end"},
    {"tune1.rate_hi", Kind::Real, 1e-9, kInf, "6", "", "rate grid upper end"},
    {"tune1.rate_points", Kind::Integer, 2, 1e6, "60", "", "rate grid points"},
    {"tune1.delta_lo", Kind::Real, 1e-9, 1.0, "0.01", "", "delta grid lower end"},
    {"tune1.delta_hi", Kind::Real, 1e-9, 1.0, "0.5", "", "delta grid upper end"},
    {"tune1.delta_points", Kind::Integer, 2, 1e6, "50", "", "delta grid points"},
    {"tune1.refine", Kind::Integer, 0, 16, "2", "", "refinement rounds for both tuning axes"},
    {"harq.rate", Kind::Real, 1e-9, kInf, "1", "", "codeword rate R, npcu"},
    {"harq.max_rounds", Kind::Integer, 1, 16, "2", "", "maximum (re)transmission rounds M"},
    {"harq.epsilon", Kind::Real, 1e-12, 1.0, "0.01", "", "outage probability target"},
    {"harq.powers_db", Kind::RealList, -kInf, kInf, "", "", "per-round powers in dB (harq-static evaluate)"},
    {"alg2.p_initial_db", Kind::RealOrAuto, -200.0, 200.0, "auto", "", "initial power in dB, or auto (uniform solution)"},
    {"alg2.d", Kind::RealList, 0.0, 1.0, "0.1,0.1", "", "per-round decrease coefficients"},
    {"alg2.d_up", Kind::RealList, 0.0, kInf, "0.2,0.2", "", "per-round increase coefficients"},
    {"alg2.power_floor", Kind::Real, 1e-300, kInf, "1e-6", "", "lower clamp on controller power (linear)"},
    {"alg2.power_cap", Kind::Real, 1e-300, kInf, "1e6", "", "upper clamp on controller power (linear)"},
    {"tune2.p_points", Kind::Integer, 2, 1e6, "25", "", "P_initial grid points"},
    {"tune2.p_span_db", Kind::Real, 0.1, 100.0, "10", "", "P_initial grid half-span around uniform, dB"},
    {"tune2.p_refine", Kind::Integer, 0, 16, "1", "", "refinement rounds on the P_initial axis"},
    {"tune2.d_values", Kind::RealList, 0.0, 1.0, "0.05,0.1,0.2,0.3,0.5,0.7,0.85", "",
     "candidate values for the decrease coefficients d_m"},
    {"tune2.d_up_values", Kind::RealList, 0.0, kInf, "0.05,0.15,0.3,0.6,1.2,2.5,5,10,15", "",
     "candidate values for the increase coefficients d'_m"},
    {"tune2.margin_db", Kind::Real, 0.0, 30.0, "1.5", "", "screen-pass power margin, dB"},
    {"fig1.snr_db", Kind::RealList, -50.0, 80.0, "0,2,4,6,8,10,12,14,16,18,20", "", "Fig. 1 SNR axis"},
    {"fig2.beta", Kind::RealList, 0.0, 1.0, "0.2,0.5,0.8,0.9,0.95", "", "Fig. 2 correlation axis"},
    {"fig2.snr_db", Kind::RealList, -50.0, 80.0, "4,8,12,16", "", "Fig. 2 SNR axis"},
    {"fig3.epsilon", Kind::RealList, 0.0, 1.0, "0.1,0.0316227766016838,0.01,0.00316227766016838", "",
     "Fig. 3 outage-target axis"},
    {"simulate.scheme", Kind::Text, 0, 0, "",
     "static-quantizer,alg1,harq-static,harq-uniform,alg2,", "scheme for simulate/optimize"},
    {"simulate.slots", Kind::Integer, 1, 9e15, "1000000", "", "total slots for evaluate runs (rate schemes)"},
    {"simulate.packets", Kind::Integer, 1, 9e15, "1000000", "", "total packets for evaluate runs (HARQ schemes)"},
};

const KeySpec* find_spec(const std::string& key) {
    for (const auto& spec : kRegistry) {
        if (key == spec.key) return &spec;
    }
    return nullptr;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument("trailing junk");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + v + "' is not a finite number");
    }
}

std::int64_t parse_integer(const std::string& key, const std::string& v) {
    std::int64_t x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
    }
    return x;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_real(key, trim(item)));
    }
    return out;
}

void validate(const std::string& key, const std::string& value) {
    const KeySpec* spec = find_spec(key);
    if (!spec) throw ConfigError("unknown config key '" + key + "'");
    switch (spec->kind) {
    case Kind::Integer: {
        const auto x = parse_integer(key, value);
        if (x < static_cast<std::int64_t>(spec->min) || x > static_cast<std::int64_t>(spec->max)) {
            throw ConfigError("config key '" + key + "': value " + value + " out of range");
        }
        break;
    }
    case Kind::Real: {
        const double x = parse_real(key, value);
        if (x < spec->min || x > spec->max) {
            throw ConfigError("config key '" + key + "': value " + value + " out of range");
        }
        break;
    }
    case Kind::RealOrAuto: {
        if (value == "auto") break;
        const double x = parse_real(key, value);
        if (x < spec->min || x > spec->max) {
            throw ConfigError("config key '" + key + "': value " + value + " out of range");
        }
        break;
    }
    case Kind::Text: {
        if (spec->choices[0] == '\0') break;
        std::stringstream ss{std::string(spec->choices)};
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (value == item) return;
        }
        throw ConfigError("config key '" + key + "': '" + value + "' is not one of {" +
                          spec->choices + "}");
    }
    case Kind::RealList: {
        for (double x : parse_list(key, value)) {
            if (x < spec->min || x > spec->max) {
                throw ConfigError("config key '" + key + "': list entry out of range");
            }
        }
        break;
    }
    }
}

} // namespace

RunConfig::RunConfig() {
    for (const auto& spec : kRegistry) values_[spec.key] = spec.def;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!section.empty() && key.find('.') == std::string::npos) {
            key = section + "." + key;
        }
        cfg.set(key, value);
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    validate(key, value);
    values_[key] = value;
}

bool RunConfig::is_default(const std::string& key) const {
    const KeySpec* spec = find_spec(key);
    if (!spec) throw ConfigError("unknown config key '" + key + "'");
    return values_.at(key) == spec->def;
}

double RunConfig::real(const std::string& key) const {
    const KeySpec* spec = find_spec(key);
    if (!spec) throw ConfigError("unknown config key '" + key + "'");
    return parse_real(key, values_.at(key));
}

std::int64_t RunConfig::integer(const std::string& key) const {
    const KeySpec* spec = find_spec(key);
    if (!spec) throw ConfigError("unknown config key '" + key + "'");
    return parse_integer(key, values_.at(key));
}

std::string RunConfig::text(const std::string& key) const {
    const KeySpec* spec = find_spec(key);
    if (!spec) throw ConfigError("unknown config key '" + key + "'");
    return values_.at(key);
}

std::vector<double> RunConfig::real_list(const std::string& key) const {
    const KeySpec* spec = find_spec(key);
    if (!spec) throw ConfigError("unknown config key '" + key + "'");
    return parse_list(key, values_.at(key));
}

std::string RunConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_text()); }

std::string RunConfig::key_reference() {
    std::string out;
    for (const auto& spec : kRegistry) {
        out += spec.key;
        out += "  (default: ";
        out += spec.def[0] ? spec.def : "<empty>";
        out += ")  ";
        out += spec.doc;
        out += "\n";
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace linksim::cli
