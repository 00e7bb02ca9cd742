#include "jqfsim/cli.hpp"

#include <cmath>
#include <iostream>

#include <CLI11.hpp>

#include "jqfsim/errors.hpp"
#include "jqfsim/experiments.hpp"
#include "jqfsim/spectra.hpp"
#include "jqfsim/units.hpp"

namespace jqfsim {

using nlohmann::json;

namespace {

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

CsvTable trace_table(const std::vector<double>& omega, const std::vector<Complex>& s) {
    CsvTable t;
    t.columns = {"freq_hz", "re", "im", "amp", "phase_rad"};
    for (std::size_t k = 0; k < omega.size(); ++k) {
        t.rows.push_back({hertz(omega[k]), s[k].real(), s[k].imag(), std::abs(s[k]), std::arg(s[k])});
    }
    return t;
}

std::vector<double> centred_grid(double centre, double span, std::size_t points) {
    return linspace(centre - 0.5 * span, centre + 0.5 * span, points);
}

double probe_flux(const RunConfig& c, double omega) {
    return c.spectrum.power_dbm ? photon_flux_from_dbm(*c.spectrum.power_dbm, omega) : c.spectrum.photon_flux;
}

const TransmonParams& require_jqf(const RunConfig& c) {
    if (!c.device.jqf) throw ConfigError("device.jqf is null but the command needs a JQF");
    return *c.device.jqf;
}

json transmon_json(const TransmonParams& t) {
    return {{"frequency_hz", hertz(t.omega)}, {"anharmonicity_hz", hertz(t.alpha)}, {"gamma_ex_hz", hertz(t.gamma_ex)},
            {"gamma_in_hz", hertz(t.gamma_in)}, {"gamma_phi_hz", hertz(t.gamma_phi)}, {"n_th", t.n_th},
            {"levels", t.levels}};
}

CommandOutput spectrum_jqf(const RunConfig& c) {
    const TransmonParams& f = require_jqf(c);
    const double span = c.spectrum.span.value_or(8.0 * (f.gamma_ex + f.gamma_in));
    const auto omega = centred_grid(f.omega, span, c.spectrum.points);
    const double nd = probe_flux(c, f.omega);
    std::vector<Complex> s;
    for (double w : omega) s.push_back(reflection_numeric(f, c.device.geometry, Site::jqf_position, w, nd));
    CommandOutput out{trace_table(omega, s), {}};
    out.summary["jqf"] = transmon_json(f);
    out.summary["photon_flux"] = nd;
    out.summary["site_factor"] = site_factor(c.device.geometry, Site::jqf_position, f.omega);
    return out;
}

CommandOutput spectrum_qubit(const RunConfig& c) {
    const TransmonParams& q = c.device.qubit;
    const TwoLevelRates rates = two_level_rates(q);
    const double span = c.spectrum.span.value_or(20.0 * rates.gamma_2);
    const auto omega = centred_grid(q.omega, span, c.spectrum.points);
    const double nd = probe_flux(c, q.omega);
    std::vector<Complex> s;
    for (double w : omega) s.push_back(reflection_numeric(q, 1.0, w, nd));
    CommandOutput out{trace_table(omega, s), {}};
    out.summary["qubit"] = transmon_json(q);
    out.summary["photon_flux"] = nd;
    const FitResult fit = fit_reflection_qubit(omega, s);
    out.summary["fit"] = fit_to_json(fit);
    if (fit.converged) {
        const double p_th = rates.n_eff / (2.0 * rates.n_eff + 1.0);
        out.summary["gamma_eff_hz"] = hertz(fit.value("gamma_eff"));
        out.summary["gamma_2_hz"] = hertz(fit.value("gamma_2"));
        out.summary["p_th"] = p_th;
        out.summary["gamma_ex_corrected_hz"] = hertz(effective_rate_correction(p_th, fit.value("gamma_eff")));
    }
    return out;
}

CommandOutput spectrum_resonator(const RunConfig& c) {
    if (!c.device.resonator) throw ConfigError("device.resonator is null but spectrum-resonator needs it");
    const ResonatorParams& r = *c.device.resonator;
    const double span = c.spectrum.span.value_or(10.0 * (r.kappa_ex + r.kappa_in + 2.0 * std::abs(r.chi)));
    const auto omega = centred_grid(r.omega_r, span, c.spectrum.points);
    std::vector<Complex> s;
    for (double w : omega) s.push_back(resonator_reflection(r, c.spectrum.p_th, w));
    CommandOutput out{trace_table(omega, s), {}};
    out.summary["resonator"] = {{"frequency_hz", hertz(r.omega_r)}, {"kappa_ex_hz", hertz(r.kappa_ex)},
                                {"kappa_in_hz", hertz(r.kappa_in)}, {"chi_hz", hertz(r.chi)}};
    out.summary["p_th"] = c.spectrum.p_th;
    return out;
}

CsvTable curve_table(const char* xname, const Curve& curve, const std::function<double(double)>& model) {
    CsvTable t;
    t.columns = {xname, "excitation", "fit"};
    for (std::size_t k = 0; k < curve.x.size(); ++k) t.rows.push_back({curve.x[k], curve.y[k], model(curve.x[k])});
    return t;
}

std::function<double(double)> exponential_of(const FitResult& f) {
    return [f](double t) { return exponential_model(t, f.value("A"), f.value("T"), f.value("C")); };
}

std::function<double(double)> sinusoid_of(const FitResult& f) {
    return [f](double t) {
        return damped_sinusoid_model(t, f.value("A"), f.value("T"), f.value("Omega"), f.value("phi"), f.value("C"));
    };
}

DecayResult decay_run(const RunConfig& c, double guess,
                      const std::function<DecayResult(const std::vector<double>&)>& run) {
    if (c.decay.max_delay) return run(linspace(0.0, *c.decay.max_delay, c.decay.points));
    return adaptive_decay(run, guess, c.decay.points);
}

CommandOutput t1_command(const RunConfig& c) {
    const DecayResult r = decay_run(c, relaxation_guess(c.device.qubit),
                                    [&](const std::vector<double>& t) { return t1_experiment(c.device, t); });
    CommandOutput out{curve_table("delay_s", r.curve, exponential_of(r.fit)), {}};
    out.summary["t1_s"] = r.time;
    out.summary["t1_err_s"] = nan_safe(r.fit.error("T"));
    out.summary["fit"] = fit_to_json(r.fit);
    return out;
}

CommandOutput echo_command(const RunConfig& c) {
    const DecayResult r = decay_run(c, coherence_guess(c.device.qubit),
                                    [&](const std::vector<double>& t) { return echo_experiment(c.device, t); });
    CommandOutput out{curve_table("delay_s", r.curve, exponential_of(r.fit)), {}};
    out.summary["t2e_s"] = r.time;
    out.summary["t2e_err_s"] = nan_safe(r.fit.error("T"));
    out.summary["fit"] = fit_to_json(r.fit);
    return out;
}

CommandOutput ramsey_command(const RunConfig& c) {
    RamseyResult r;
    double art = c.decay.artificial_detuning;
    if (c.decay.max_delay) {
        if (art == 0.0) art = two_pi * 2e6;
        const auto n = std::max<std::size_t>(c.decay.points,
                                             static_cast<std::size_t>(16.0 * *c.decay.max_delay * art / two_pi) + 1);
        r = ramsey_experiment(c.device, linspace(0.0, *c.decay.max_delay, n), art);
    } else {
        r = adaptive_ramsey(c.device, coherence_guess(c.device.qubit), c.decay.points, art);
    }
    CommandOutput out{curve_table("delay_s", r.curve, sinusoid_of(r.fit)), {}};
    out.summary["t2star_s"] = r.t2_star;
    out.summary["t2star_err_s"] = nan_safe(r.fit.error("T"));
    out.summary["freq_shift_hz"] = hertz(r.freq_shift);
    out.summary["artificial_detuning_hz"] = hertz(r.fit.value("Omega") - r.freq_shift);
    out.summary["fit"] = fit_to_json(r.fit);
    return out;
}

std::vector<double> rabi_durations(const RunConfig& c) {
    if (!c.rabi_max_duration) {
        if (c.rabi_points) throw ConfigError("rabi.points requires rabi.max_duration_s");
        return default_rabi_durations(c.device, c.rabi_photon_flux);
    }
    std::size_t n = c.rabi_points.value_or(0);
    if (n == 0) {
        const double omega = 2.0 * std::sqrt(c.device.qubit.gamma_ex * c.rabi_photon_flux);
        n = static_cast<std::size_t>(std::max(400.0, std::ceil(16.0 * *c.rabi_max_duration * omega / two_pi))) + 1;
    }
    return linspace(0.0, *c.rabi_max_duration, n);
}

CommandOutput rabi_command(const RunConfig& c) {
    const RabiResult r = rabi_experiment(c.device, c.rabi_photon_flux, rabi_durations(c), c.rabi);
    CommandOutput out{curve_table("duration_s", r.curve, sinusoid_of(r.fit)), {}};
    out.summary["photon_flux"] = c.rabi_photon_flux;
    out.summary["rabi_freq_hz"] = hertz(r.rabi_freq);
    out.summary["rabi_decay_s"] = r.rabi_decay;
    out.summary["error_per_cycle"] = r.error_per_cycle;
    out.summary["fit"] = fit_to_json(r.fit);
    return out;
}

CommandOutput sweep_output(const SweepResult& s) {
    CommandOutput out;
    out.table.columns = s.columns;
    out.table.rows = s.rows;
    out.summary["axis"] = s.axis_name;
    json scalars = json::object();
    for (const auto& [k, v] : s.scalars) scalars[k] = nan_safe(v);
    out.summary["scalars"] = scalars;
    json errors = json::array();
    for (std::size_t k = 0; k < s.errors.size(); ++k) {
        if (!s.errors[k].empty()) errors.push_back({{"index", k}, {"axis_value", s.axis[k]}, {"error", s.errors[k]}});
    }
    out.summary["point_errors"] = errors;
    return out;
}

CommandOutput sweep_detuning_command(const RunConfig& c) {
    require_jqf(c);
    SweepOptions o;
    o.threads = c.threads;
    o.points = c.decay.points;
    o.ramsey_detuning = c.decay.artificial_detuning;
    o.coherence = c.resolved.at("sweep_detuning").at("include_coherence").get<bool>();
    const SweepResult s = sweep_detuning(c.device, c.detuning_sweep.values(), o);
    CommandOutput out = sweep_output(s);
    const auto t1 = s.column("t1_s");
    std::size_t best = t1.size();
    for (std::size_t k = 0; k < t1.size(); ++k) {
        if (std::isfinite(t1[k]) && (best == t1.size() || t1[k] > t1[best])) best = k;
    }
    if (best < t1.size()) {
        out.summary["t1_max_s"] = t1[best];
        out.summary["t1_max_detuning_hz"] = s.axis[best];
    }
    return out;
}

CommandOutput sweep_amplitude_command(const RunConfig& c) {
    return sweep_output(sweep_amplitude(c.device, c.amplitude_fluxes, c.rabi, c.threads));
}

CommandOutput sweep_anharmonicity_command(const RunConfig& c) {
    require_jqf(c);
    AnharmonicityOptions o = c.anharmonicity;
    o.threads = c.threads;
    return sweep_output(sweep_anharmonicity(c.device, c.alphas, c.anharmonicity_photon_flux, o));
}

CommandOutput tradeoff_command(const RunConfig& c) {
    require_jqf(c);
    CommandOutput out =
        sweep_output(tradeoff(c.device, c.tradeoff_sweep.values(), c.tradeoff_photon_flux, c.rabi, c.threads));
    out.summary["photon_flux"] = c.tradeoff_photon_flux;
    return out;
}

CommandOutput rb_command(const RunConfig& c) {
    const RBResult r = randomized_benchmarking(c.device, c.rb);
    const auto model = [](const FitResult& f, double m) {
        return f.value("A") * std::pow(f.value("p"), m) + f.value("B");
    };
    CommandOutput out;
    out.table.columns = {"length", "survival", "survival_std", "ideal_survival", "fit", "ideal_fit"};
    for (std::size_t k = 0; k < r.lengths.size(); ++k) {
        const double m = r.lengths[k];
        out.table.rows.push_back({m, r.survival[k], r.survival_std[k], r.ideal_survival[k], model(r.fit, m),
                                  model(r.ideal_fit, m)});
    }
    out.summary["avg_gate_error"] = r.avg_gate_error;
    out.summary["avg_gate_error_err"] = nan_safe(r.fit.error("r"));
    out.summary["coherence_limit"] = r.coherence_limit;
    out.summary["pi_amplitude_sqrt_flux"] = r.pi_amplitude;
    out.summary["seed"] = c.rb.rng_seed;
    out.summary["fit"] = fit_to_json(r.fit);
    out.summary["ideal_fit"] = fit_to_json(r.ideal_fit);
    out.summary["first_sequences"] = r.first_sequences;
    return out;
}

std::vector<Complex> complex_column(const CsvTable& t) {
    const auto re = t.column("re"), im = t.column("im");
    std::vector<Complex> s(re.size());
    for (std::size_t k = 0; k < re.size(); ++k) s[k] = {re[k], im[k]};
    return s;
}

json hz_values(const FitResult& f) {
    json j = json::object();
    for (std::size_t k = 0; k < f.names.size(); ++k) {
        const std::string& n = f.names[k];
        const bool angular_rate = n.rfind("omega", 0) == 0 || n.rfind("gamma", 0) == 0 || n.rfind("kappa", 0) == 0 ||
                                  n == "chi" || n == "Omega";
        if (angular_rate) j[n + "_hz"] = hertz(f.values[k]);
        else j[n] = f.values[k];
    }
    return j;
}

CommandOutput fit_command(const RunConfig& c) {
    if (c.fit.input.empty()) throw ConfigError("fit.input is empty");
    const CsvTable data = read_csv(c.fit.input);
    const std::string& model = c.fit.model;
    CommandOutput out;
    FitResult fit;
    auto check_fixed = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : c.fit.fixed) {
            if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end()) {
                throw ConfigError("fit.fixed." + k + " is not supported for model '" + model + "'");
            }
        }
    };
    if (model == "resonator" || model == "qubit") {
        std::vector<double> omega;
        for (double f : data.column("freq_hz")) omega.push_back(angular(f));
        const auto s = complex_column(data);
        if (model == "resonator") {
            check_fixed({"kappa_in_hz", "p_th"});
            ResonatorFitOptions o;
            o.enforce_identifiability = c.fit.enforce_identifiability;
            if (c.fit.fixed.count("kappa_in_hz")) o.fixed_kappa_in = angular(c.fit.fixed.at("kappa_in_hz"));
            if (c.fit.fixed.count("p_th")) o.fixed_p_th = c.fit.fixed.at("p_th");
            fit = fit_reflection_resonator(omega, s, o);
        } else {
            check_fixed({});
            fit = fit_reflection_qubit(omega, s);
        }
        out.table.columns = {"freq_hz", "re", "im", "fit_re", "fit_im"};
        for (std::size_t k = 0; k < omega.size(); ++k) {
            const Complex m = model == "resonator"
                                  ? reflection_resonator_model(omega[k], fit.value("omega_r"), fit.value("kappa_ex"),
                                                               fit.value("kappa_in"), fit.value("chi"),
                                                               fit.value("p_th"), fit.value("phi0"), fit.value("tau"))
                                  : reflection_qubit_model(omega[k], fit.value("omega_q"), fit.value("gamma_eff"),
                                                           fit.value("gamma_2"), fit.value("phi0"), fit.value("tau"));
            out.table.rows.push_back({hertz(omega[k]), s[k].real(), s[k].imag(), m.real(), m.imag()});
        }
    } else if (model == "exponential" || model == "damped_sinusoid" || model == "rb") {
        check_fixed({});
        const std::string xname = model == "rb" ? "length" : data.columns.at(0);
        const std::string yname = model == "rb" ? "survival" : "excitation";
        const auto x = data.column(xname), y = data.column(yname);
        std::function<double(double)> f;
        if (model == "exponential") {
            fit = fit_exponential(x, y);
            if (fit.converged) f = exponential_of(fit);
        } else if (model == "damped_sinusoid") {
            fit = fit_damped_sinusoid(x, y);
            if (fit.converged) f = sinusoid_of(fit);
        } else {
            fit = fit_rb_decay(x, y);
            if (fit.converged) f = [fit](double m) { return fit.value("A") * std::pow(fit.value("p"), m) + fit.value("B"); };
        }
        out.table.columns = {xname, yname, "fit"};
        for (std::size_t k = 0; k < x.size(); ++k) out.table.rows.push_back({x[k], y[k], f ? f(x[k]) : NAN});
    } else {
        throw ConfigError("fit.model must be one of resonator, qubit, exponential, damped_sinusoid, rb (got '" +
                          model + "')");
    }
    if (!fit.converged) throw FitFailure("fit did not converge: " + fit.message);
    out.summary["input"] = c.fit.input;
    out.summary["fit"] = fit_to_json(fit);
    out.summary["values"] = hz_values(fit);
    return out;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {
        "spectrum-jqf",    "spectrum-qubit",  "spectrum-resonator",  "t1",       "ramsey", "echo", "rabi",
        "sweep-detuning", "sweep-amplitude", "sweep-anharmonicity", "tradeoff", "rb",     "fit"};
    return names;
}

CommandOutput run_command(const std::string& command, const RunConfig& config) {
    if (command == "spectrum-jqf") return spectrum_jqf(config);
    if (command == "spectrum-qubit") return spectrum_qubit(config);
    if (command == "spectrum-resonator") return spectrum_resonator(config);
    if (command == "t1") return t1_command(config);
    if (command == "ramsey") return ramsey_command(config);
    if (command == "echo") return echo_command(config);
    if (command == "rabi") return rabi_command(config);
    if (command == "sweep-detuning") return sweep_detuning_command(config);
    if (command == "sweep-amplitude") return sweep_amplitude_command(config);
    if (command == "sweep-anharmonicity") return sweep_anharmonicity_command(config);
    if (command == "tradeoff") return tradeoff_command(config);
    if (command == "rb") return rb_command(config);
    if (command == "fit") return fit_command(config);
    throw InvalidArgument("unknown command " + command);
}

void run(const std::string& command, const RunConfig& config, const std::filesystem::path& out_dir) {
    CommandOutput out = run_command(command, config);
    std::filesystem::create_directories(out_dir);
    write_json(out_dir / "resolved_config.json", config.resolved);
    write_csv(out_dir / (command + ".csv"), out.table);
    out.summary["command"] = command;
    out.summary["schema_version"] = config_schema_version;
    out.summary["columns"] = out.table.columns;
    write_json(out_dir / (command + ".json"), out.summary);
}

json error_json(const std::string& kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Waveguide-QED simulator of a qubit protected by a Josephson quantum filter"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    std::string config_path, profile, out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--profile", profile, "Named profile (JQFSIM_PROFILE_DIR or the bundled profiles)");
    app.add_option("--out", out_dir, "Output directory");
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);

    std::string fit_input, fit_model;
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name);
        if (name == "fit") {
            sub->add_option("--input", fit_input, "CSV written by a spectrum or experiment command");
            sub->add_option("--model", fit_model, "resonator, qubit, exponential, damped_sinusoid or rb");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << error_json("usage", e.what()).dump() << '\n';
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        json overrides = json::object();
        if (*seed_opt) overrides["seed"] = seed;
        if (*threads_opt) overrides["threads"] = threads;
        if (!fit_input.empty()) overrides["fit"]["input"] = fit_input;
        if (!fit_model.empty()) overrides["fit"]["model"] = fit_model;

        json merged = default_config();
        if (!profile.empty()) merged = merge_config(merged, load_profile(profile));
        if (!config_path.empty()) {
            const RunConfig file = resolve_config(config_path, profile.empty() ? std::nullopt
                                                                               : std::optional<std::string>(profile));
            merged = file.resolved;
        }
        merged = merge_config(merged, overrides);
        const RunConfig config = resolve_config(merged);
        run(command, config, out_dir);
        std::cout << json{{"command", command}, {"out", out_dir}}.dump() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << error_json(e.kind(), e.what()).dump() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << error_json(e.kind(), e.what()).dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << error_json("internal", e.what()).dump() << '\n';
        return 1;
    }
}

}  // namespace jqfsim
