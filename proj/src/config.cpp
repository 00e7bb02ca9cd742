#include "jqfsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jqfsim/errors.hpp"
#include "jqfsim/units.hpp"

#ifndef JQFSIM_PROFILE_DIR_DEFAULT
#define JQFSIM_PROFILE_DIR_DEFAULT "profiles"
#endif

namespace jqfsim {

using nlohmann::json;

namespace {

json transmon_defaults(double f, double alpha, double gex, double gin, double gphi, double nth, int levels) {
    return {{"frequency_hz", f}, {"anharmonicity_hz", alpha}, {"gamma_ex_hz", gex}, {"gamma_in_hz", gin},
            {"gamma_phi_hz", gphi}, {"n_th", nth}, {"levels", levels}};
}

json build_defaults() {
    json d;
    d["schema_version"] = config_schema_version;
    d["device"] = {
        {"qubit", transmon_defaults(8.002e9, -0.398e9, 123e3, 16e3, 6e3, 0.29, 3)},
        // Parked at the bottom of its tuning range, far from the qubit.
        {"jqf", transmon_defaults(6.3e9, -0.387e9, 113e6, 3e6, 0.0, 0.0, 4)},
        {"geometry", {{"d_frac", 0.526}, {"reference_frequency_hz", nullptr}}},
        {"resonator", {{"frequency_hz", 10.1564e9}, {"kappa_ex_hz", 2.152e6}, {"kappa_in_hz", 0.015e6}, {"chi_hz", 0.935e6}}},
    };
    d["spectrum"] = {{"span_hz", nullptr}, {"points", 401}, {"photon_flux", 1e3}, {"power_dbm", nullptr}, {"p_th", 0.028}};
    d["decay"] = {{"points", 301}, {"max_delay_s", nullptr}, {"artificial_detuning_hz", 0.0}};
    d["rabi"] = {{"photon_flux", 1.5e10}, {"edge_sigma_s", 5e-9}, {"sample_dt_s", 1e-9}, {"quantization", 64},
                 {"approximative", false}, {"max_duration_s", nullptr}, {"points", nullptr}};
    d["sweep_detuning"] = {{"start_hz", -150e6}, {"stop_hz", 150e6}, {"points", 41}, {"include_coherence", true}};
    d["sweep_amplitude"] = {{"photon_flux", {1e8, 3e8, 1e9, 3e9, 1e10, 1.5e10}}};
    d["sweep_anharmonicity"] = {{"alpha_hz", {-50e6, -70e6, -100e6, -140e6, -200e6, -280e6, -400e6}},
                                {"photon_flux", 1e10},
                                {"start_levels", 4},
                                {"max_levels", 16},
                                {"rel_tol", 0.005},
                                {"edge_sigma_s", 0.0},
                                {"quantization", 0}};
    d["tradeoff"] = {{"start_hz", -100e6}, {"stop_hz", 100e6}, {"points", 21}, {"photon_flux", 1.5e10}};
    d["rb"] = {{"sequence_lengths", nullptr},    {"sequences_per_length", 30}, {"pulse_sigma_s", 5e-9},
               {"pulse_truncation", 4.0},        {"pulse_interval_factor", 2.0}, {"sample_dt_s", 0.25e-9},
               {"lossless", false}};
    d["fit"] = {{"input", ""}, {"model", ""}, {"fixed", json::object()}, {"enforce_identifiability", true}};
    d["seed"] = 1;
    d["threads"] = 1;
    return d;
}

bool nullable_object(const std::string& path) { return path == "device.jqf" || path == "device.resonator"; }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string type_name(const json& j) {
    if (j.is_number_integer() || j.is_number_unsigned()) return "integer";
    if (j.is_number()) return "number";
    return j.type_name();
}

void check_value(const json& value, const json& schema, const std::string& path, const std::string& origin) {
    auto fail = [&](const std::string& expected) {
        throw ConfigError(origin + ": " + path + " must be " + expected + ", got " + type_name(value));
    };
    if (schema.is_object()) {
        if (value.is_null() && nullable_object(path)) return;
        if (!value.is_object()) fail("an object");
        if (schema.empty()) {
            for (const auto& [k, v] : value.items()) {
                if (!v.is_number()) throw ConfigError(origin + ": " + join(path, k) + " must be a number");
            }
            return;
        }
        for (const auto& [k, v] : value.items()) {
            if (!schema.contains(k)) {
                std::string best;
                std::size_t dist = std::string::npos;
                for (const auto& [known, unused] : schema.items()) {
                    std::string stem = known;
                    for (const char* unit : {"_hz", "_s"}) {
                        const std::string u(unit);
                        if (stem.size() > u.size() && stem.compare(stem.size() - u.size(), u.size(), u) == 0) {
                            stem.resize(stem.size() - u.size());
                        }
                    }
                    const std::size_t dk = std::min(levenshtein(k, known), levenshtein(k, stem));
                    if (dk < dist) {
                        dist = dk;
                        best = known;
                    }
                }
                std::string msg = origin + ": unknown key " + join(path, k);
                if (dist <= std::max<std::size_t>(2, k.size() / 3)) msg += " (did you mean " + join(path, best) + "?)";
                throw ConfigError(msg);
            }
            check_value(v, schema[k], join(path, k), origin);
        }
        return;
    }
    if (schema.is_null()) {
        if (!value.is_null() && !value.is_number() && !value.is_array()) fail("a number, an array or null");
        if (value.is_array()) {
            for (const auto& e : value) {
                if (!e.is_number()) fail("an array of numbers");
            }
        }
        return;
    }
    if (schema.is_array()) {
        if (!value.is_array()) fail("an array of numbers");
        for (const auto& e : value) {
            if (!e.is_number()) fail("an array of numbers");
        }
        return;
    }
    if (schema.is_boolean()) {
        if (!value.is_boolean()) fail("a boolean");
        return;
    }
    if (schema.is_string()) {
        if (!value.is_string()) fail("a string");
        return;
    }
    if (schema.is_number_integer() || schema.is_number_unsigned()) {
        if (!value.is_number_integer() && !value.is_number_unsigned()) fail("an integer");
        return;
    }
    if (schema.is_number()) {
        if (!value.is_number()) fail("a number");
        return;
    }
}

struct Reader {
    const json& doc;

    const json& at(const std::string& path) const {
        const json* j = &doc;
        std::size_t start = 0;
        while (start <= path.size()) {
            const std::size_t dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            j = &j->at(key);
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        return *j;
    }
    double number(const std::string& path) const {
        const double v = at(path).get<double>();
        if (!std::isfinite(v)) throw ConfigError(path + " must be finite");
        return v;
    }
    double nonneg(const std::string& path) const {
        const double v = number(path);
        if (v < 0.0) throw ConfigError(path + " must be >= 0");
        return v;
    }
    double positive(const std::string& path) const {
        const double v = number(path);
        if (!(v > 0.0)) throw ConfigError(path + " must be > 0");
        return v;
    }
    long long integer(const std::string& path, long long min) const {
        const json& j = at(path);
        if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(path + " must be an integer");
        const long long v = j.get<long long>();
        if (v < min) throw ConfigError(path + " must be >= " + std::to_string(min));
        return v;
    }
    std::optional<double> optional_positive(const std::string& path) const {
        if (at(path).is_null()) return std::nullopt;
        return positive(path);
    }
    std::vector<double> numbers(const std::string& path) const {
        std::vector<double> out;
        for (const auto& e : at(path)) out.push_back(e.get<double>());
        return out;
    }
};

TransmonParams read_transmon(const Reader& r, const std::string& p) {
    TransmonParams t;
    t.omega = angular(r.positive(p + ".frequency_hz"));
    t.alpha = angular(r.number(p + ".anharmonicity_hz"));
    if (t.alpha > 0.0) throw ConfigError(p + ".anharmonicity_hz must be <= 0");
    t.gamma_ex = angular(r.nonneg(p + ".gamma_ex_hz"));
    t.gamma_in = angular(r.nonneg(p + ".gamma_in_hz"));
    t.gamma_phi = angular(r.nonneg(p + ".gamma_phi_hz"));
    t.n_th = r.nonneg(p + ".n_th");
    t.levels = static_cast<int>(r.integer(p + ".levels", 2));
    return t;
}

RangeSettings read_range(const Reader& r, const std::string& p) {
    RangeSettings s;
    s.start = angular(r.number(p + ".start_hz"));
    s.stop = angular(r.number(p + ".stop_hz"));
    s.points = static_cast<std::size_t>(r.integer(p + ".points", 1));
    return s;
}

}  // namespace

std::vector<double> RangeSettings::values() const { return linspace(start, stop, points); }

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

const json& default_config() {
    static const json d = build_defaults();
    return d;
}

json parse_config_text(const std::string& text, const std::string& origin) {
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
        return json::object();
    }
    try {
        json j = json::parse(text);
        if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
        return j;
    } catch (const json::parse_error& e) {
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k < end; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        // Drop the library's own prefix and position; ours counts from the text.
        if (const auto pos = what.find("parse error"); pos != std::string::npos) {
            const auto colon = what.find(": ", pos);
            what = colon != std::string::npos ? what.substr(colon + 2) : what.substr(pos);
        }
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
    }
}

void check_schema(const json& doc, const std::string& origin) {
    check_value(doc, default_config(), "", origin);
    if (doc.contains("schema_version") && doc["schema_version"] != config_schema_version) {
        throw ConfigError(origin + ": unsupported schema_version " + doc["schema_version"].dump() + " (expected " +
                          std::to_string(config_schema_version) + ")");
    }
}

json merge_config(json base, const json& patch) {
    if (!patch.is_object() || !base.is_object()) return patch;
    for (const auto& [k, v] : patch.items()) {
        if (v.is_object() && base.contains(k) && base[k].is_object() && !base[k].empty()) {
            base[k] = merge_config(base[k], v);
        } else {
            base[k] = v;
        }
    }
    return base;
}

std::filesystem::path profile_directory() {
    if (const char* env = std::getenv("JQFSIM_PROFILE_DIR"); env && *env) return env;
    return JQFSIM_PROFILE_DIR_DEFAULT;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

json load_profile(const std::string& name) {
    std::filesystem::path path = profile_directory() / name;
    if (path.extension() != ".json") path += ".json";
    if (!std::filesystem::exists(path)) throw ConfigError("profile '" + name + "' not found at " + path.string());
    const json doc = parse_config_text(read_file(path), path.string());
    check_schema(doc, path.string());
    return doc;
}

RunConfig resolve_config(const std::optional<std::string>& config_path, const std::optional<std::string>& profile) {
    json merged = default_config();
    if (profile) merged = merge_config(merged, load_profile(*profile));
    if (config_path) {
        const json doc = parse_config_text(read_file(*config_path), *config_path);
        check_schema(doc, *config_path);
        merged = merge_config(merged, doc);
    }
    return resolve_config(merged);
}

RunConfig parse_config(const std::string& path) { return resolve_config(path, std::nullopt); }

RunConfig resolve_config(const json& input) {
    json merged = input;
    // A partial JQF or resonator object placed over a null one is completed
    // from the defaults.
    for (const char* key : {"jqf", "resonator"}) {
        if (merged.contains("device") && merged["device"].contains(key) && merged["device"][key].is_object()) {
            merged["device"][key] = merge_config(default_config()["device"][key], merged["device"][key]);
        }
    }
    merged = merge_config(default_config(), merged);
    check_schema(merged, "config");
    const Reader r{merged};
    RunConfig c;
    c.resolved = merged;
    c.resolved["schema_version"] = config_schema_version;

    c.device.qubit = read_transmon(r, "device.qubit");
    if (!r.at("device.jqf").is_null()) c.device.jqf = read_transmon(r, "device.jqf");
    c.device.geometry.d_frac = r.nonneg("device.geometry.d_frac");
    c.device.geometry.omega_ref = r.at("device.geometry.reference_frequency_hz").is_null()
                                      ? c.device.qubit.omega
                                      : angular(r.positive("device.geometry.reference_frequency_hz"));
    if (!r.at("device.resonator").is_null()) {
        ResonatorParams res;
        res.omega_r = angular(r.positive("device.resonator.frequency_hz"));
        res.kappa_ex = angular(r.nonneg("device.resonator.kappa_ex_hz"));
        res.kappa_in = angular(r.nonneg("device.resonator.kappa_in_hz"));
        res.chi = angular(r.number("device.resonator.chi_hz"));
        c.device.resonator = res;
    }
    try {
        c.device.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("device: ") + e.what());
    }

    if (const auto span = r.optional_positive("spectrum.span_hz")) c.spectrum.span = angular(*span);
    c.spectrum.points = static_cast<std::size_t>(r.integer("spectrum.points", 8));
    c.spectrum.photon_flux = r.positive("spectrum.photon_flux");
    if (!r.at("spectrum.power_dbm").is_null()) c.spectrum.power_dbm = r.number("spectrum.power_dbm");
    c.spectrum.p_th = r.nonneg("spectrum.p_th");
    if (c.spectrum.p_th > 1.0) throw ConfigError("spectrum.p_th must be <= 1");

    c.decay.points = static_cast<std::size_t>(r.integer("decay.points", 16));
    c.decay.max_delay = r.optional_positive("decay.max_delay_s");
    c.decay.artificial_detuning = angular(r.nonneg("decay.artificial_detuning_hz"));

    c.rabi_photon_flux = r.positive("rabi.photon_flux");
    c.rabi.edge_sigma = r.nonneg("rabi.edge_sigma_s");
    c.rabi.sample_dt = r.positive("rabi.sample_dt_s");
    c.rabi.quantization = static_cast<int>(r.integer("rabi.quantization", 0));
    c.rabi.approximative = r.at("rabi.approximative").get<bool>();
    c.rabi_max_duration = r.optional_positive("rabi.max_duration_s");
    if (!r.at("rabi.points").is_null()) c.rabi_points = static_cast<std::size_t>(r.integer("rabi.points", 16));

    c.detuning_sweep = read_range(r, "sweep_detuning");
    c.amplitude_fluxes = r.numbers("sweep_amplitude.photon_flux");
    for (double f : c.amplitude_fluxes) {
        if (!(f > 0.0)) throw ConfigError("sweep_amplitude.photon_flux entries must be > 0");
    }

    for (double a : r.numbers("sweep_anharmonicity.alpha_hz")) {
        if (a > 0.0) throw ConfigError("sweep_anharmonicity.alpha_hz entries must be <= 0");
        c.alphas.push_back(angular(a));
    }
    c.anharmonicity_photon_flux = r.positive("sweep_anharmonicity.photon_flux");
    c.anharmonicity.start_levels = static_cast<int>(r.integer("sweep_anharmonicity.start_levels", 2));
    c.anharmonicity.max_levels = static_cast<int>(r.integer("sweep_anharmonicity.max_levels", 2));
    if (c.anharmonicity.max_levels < c.anharmonicity.start_levels) {
        throw ConfigError("sweep_anharmonicity.max_levels must be >= start_levels");
    }
    c.anharmonicity.rel_tol = r.positive("sweep_anharmonicity.rel_tol");
    c.anharmonicity.rabi.edge_sigma = r.nonneg("sweep_anharmonicity.edge_sigma_s");
    c.anharmonicity.rabi.quantization = static_cast<int>(r.integer("sweep_anharmonicity.quantization", 0));
    c.anharmonicity.rabi.sample_dt = c.rabi.sample_dt;

    c.tradeoff_sweep = read_range(r, "tradeoff");
    c.tradeoff_photon_flux = r.positive("tradeoff.photon_flux");

    if (r.at("rb.sequence_lengths").is_null()) {
        c.rb.sequence_lengths = default_rb_lengths();
    } else {
        for (const auto& e : r.at("rb.sequence_lengths")) {
            if (!e.is_number_integer() || e.get<long long>() < 1) {
                throw ConfigError("rb.sequence_lengths entries must be integers >= 1");
            }
            c.rb.sequence_lengths.push_back(e.get<int>());
        }
    }
    c.rb.sequences_per_length = static_cast<int>(r.integer("rb.sequences_per_length", 1));
    c.rb.pulse_sigma = r.positive("rb.pulse_sigma_s");
    c.rb.pulse_truncation = r.positive("rb.pulse_truncation");
    c.rb.pulse_interval_factor = r.number("rb.pulse_interval_factor");
    if (c.rb.pulse_interval_factor < 1.0) throw ConfigError("rb.pulse_interval_factor must be >= 1");
    c.rb.sample_dt = r.positive("rb.sample_dt_s");
    c.rb.lossless = r.at("rb.lossless").get<bool>();

    c.fit.input = r.at("fit.input").get<std::string>();
    c.fit.model = r.at("fit.model").get<std::string>();
    for (const auto& [k, v] : r.at("fit.fixed").items()) c.fit.fixed[k] = v.get<double>();
    c.fit.enforce_identifiability = r.at("fit.enforce_identifiability").get<bool>();

    const long long seed = r.integer("seed", 0);
    c.seed = static_cast<std::uint64_t>(seed);
    c.rb.rng_seed = c.seed;
    c.threads = static_cast<int>(r.integer("threads", 1));
    return c;
}

}  // namespace jqfsim
