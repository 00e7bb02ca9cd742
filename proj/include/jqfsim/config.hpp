#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jqfsim/experiments.hpp"
#include "jqfsim/model.hpp"

namespace jqfsim {

inline constexpr int config_schema_version = 1;

struct SpectrumSettings {
    std::optional<double> span;  // rad/s; automatic when unset
    std::size_t points = 401;
    double photon_flux = 1e3;
    std::optional<double> power_dbm;  // overrides photon_flux when set
    double p_th = 0.028;              // resonator thermal mixture
};

struct DecaySettings {
    std::size_t points = 301;
    std::optional<double> max_delay;  // s; adaptive window when unset
    double artificial_detuning = 0.0; // rad/s; 0 selects the default
};

struct RangeSettings {
    double start = 0.0;  // rad/s
    double stop = 0.0;
    std::size_t points = 0;
    std::vector<double> values() const;
};

struct FitSettings {
    std::string input;
    std::string model;
    std::map<std::string, double> fixed;  // resonator: kappa_in_hz, p_th
    bool enforce_identifiability = true;
};

/// Fully resolved run configuration. Angular units internally.
struct RunConfig {
    DeviceModel device;
    SpectrumSettings spectrum;
    DecaySettings decay;
    double rabi_photon_flux = 1.5e10;
    std::optional<double> rabi_max_duration;
    std::optional<std::size_t> rabi_points;
    RabiOptions rabi;
    RangeSettings detuning_sweep;
    std::vector<double> amplitude_fluxes;
    std::vector<double> alphas;
    double anharmonicity_photon_flux = 1e10;
    AnharmonicityOptions anharmonicity;
    RangeSettings tradeoff_sweep;
    double tradeoff_photon_flux = 1.5e10;
    RBConfig rb;
    FitSettings fit;
    std::uint64_t seed = 1;
    int threads = 1;

    nlohmann::json resolved;  // merged document in file units, echoed with outputs
};

/// Built-in defaults: the full schema with the measured-device values.
const nlohmann::json& default_config();

/// Parses JSON text; empty or whitespace-only text is {}. Errors carry the
/// line and column.
nlohmann::json parse_config_text(const std::string& text, const std::string& origin);

/// Checks `doc` against the schema implied by the defaults. Unknown keys are
/// rejected with the closest known key as a suggestion.
void check_schema(const nlohmann::json& doc, const std::string& origin);

/// Recursive object merge; non-object values in `patch` replace.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& patch);

/// Directory searched for named profiles: JQFSIM_PROFILE_DIR, else the
/// profiles directory of the source tree.
std::filesystem::path profile_directory();
nlohmann::json load_profile(const std::string& name);

/// defaults <- profile <- config file, validated and converted.
RunConfig resolve_config(const std::optional<std::string>& config_path,
                         const std::optional<std::string>& profile);
RunConfig resolve_config(const nlohmann::json& merged);

/// Same as resolve_config(path, {}), the plain file entry point.
RunConfig parse_config(const std::string& path);

std::size_t levenshtein(const std::string& a, const std::string& b);

}  // namespace jqfsim
