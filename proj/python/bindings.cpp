#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jqfsim/cli.hpp"
#include "jqfsim/config.hpp"
#include "jqfsim/errors.hpp"
#include "jqfsim/experiments.hpp"
#include "jqfsim/fitting.hpp"
#include "jqfsim/model.hpp"
#include "jqfsim/spectra.hpp"
#include "jqfsim/units.hpp"

namespace py = pybind11;
using namespace jqfsim;

namespace {

py::dict sweep_dict(const SweepResult& s) {
    py::dict d;
    d["axis_name"] = s.axis_name;
    d["axis"] = s.axis;
    d["columns"] = s.columns;
    d["rows"] = s.rows;
    d["errors"] = s.errors;
    d["scalars"] = s.scalars;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Josephson quantum filter and qubit simulator";

    static py::exception<Error> base_error(m, "JqfsimError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = base_error;
            PyErr_SetObject(err.ptr(), py::make_tuple(e.kind(), std::string(e.what())).ptr());
        }
    });

    m.attr("TWO_PI") = two_pi;
    m.def("angular", &angular, py::arg("hz"));
    m.def("hertz", &hertz, py::arg("rad_per_s"));

    py::class_<TransmonParams>(m, "TransmonParams")
        .def(py::init<>())
        .def(py::init([](double omega, double alpha, double gamma_ex, double gamma_in, double gamma_phi, double n_th,
                         int levels) {
                 return TransmonParams{omega, alpha, gamma_ex, gamma_in, gamma_phi, n_th, levels};
             }),
             py::arg("omega"), py::arg("alpha") = 0.0, py::arg("gamma_ex") = 0.0, py::arg("gamma_in") = 0.0,
             py::arg("gamma_phi") = 0.0, py::arg("n_th") = 0.0, py::arg("levels") = 3)
        .def_readwrite("omega", &TransmonParams::omega)
        .def_readwrite("alpha", &TransmonParams::alpha)
        .def_readwrite("gamma_ex", &TransmonParams::gamma_ex)
        .def_readwrite("gamma_in", &TransmonParams::gamma_in)
        .def_readwrite("gamma_phi", &TransmonParams::gamma_phi)
        .def_readwrite("n_th", &TransmonParams::n_th)
        .def_readwrite("levels", &TransmonParams::levels)
        .def("validate", [](const TransmonParams& t) { t.validate(); });

    py::class_<WaveguideGeometry>(m, "WaveguideGeometry")
        .def(py::init<>())
        .def(py::init([](double d_frac, double omega_ref) { return WaveguideGeometry{d_frac, omega_ref}; }),
             py::arg("d_frac"), py::arg("omega_ref"))
        .def_readwrite("d_frac", &WaveguideGeometry::d_frac)
        .def_readwrite("omega_ref", &WaveguideGeometry::omega_ref)
        .def("phase", &WaveguideGeometry::phase);

    py::class_<ResonatorParams>(m, "ResonatorParams")
        .def(py::init<>())
        .def(py::init([](double omega_r, double kappa_ex, double kappa_in, double chi) {
                 return ResonatorParams{omega_r, kappa_ex, kappa_in, chi};
             }),
             py::arg("omega_r"), py::arg("kappa_ex"), py::arg("kappa_in"), py::arg("chi"))
        .def_readwrite("omega_r", &ResonatorParams::omega_r)
        .def_readwrite("kappa_ex", &ResonatorParams::kappa_ex)
        .def_readwrite("kappa_in", &ResonatorParams::kappa_in)
        .def_readwrite("chi", &ResonatorParams::chi);

    py::class_<DeviceModel>(m, "DeviceModel")
        .def(py::init<>())
        .def_readwrite("qubit", &DeviceModel::qubit)
        .def_readwrite("jqf", &DeviceModel::jqf)
        .def_readwrite("geometry", &DeviceModel::geometry)
        .def_readwrite("resonator", &DeviceModel::resonator)
        .def("validate", &DeviceModel::validate)
        .def("dims", &DeviceModel::dims)
        .def("dimension", [](const DeviceModel& d) { return static_cast<long>(d.dimension()); });

    py::class_<CouplingRates>(m, "CouplingRates")
        .def_readonly("J", &CouplingRates::J)
        .def_readonly("gamma_qq", &CouplingRates::gamma_qq)
        .def_readonly("gamma_ff", &CouplingRates::gamma_ff)
        .def_readonly("gamma_qf", &CouplingRates::gamma_qf)
        .def_readonly("gamma_bright", &CouplingRates::gamma_bright)
        .def_readonly("gamma_dark", &CouplingRates::gamma_dark);
    m.def("coupling_rates", &coupling_rates, py::arg("qubit"), py::arg("jqf"), py::arg("geometry"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("model", &FitResult::model)
        .def_readonly("names", &FitResult::names)
        .def_readonly("values", &FitResult::values)
        .def_readonly("errors", &FitResult::errors)
        .def_readonly("residual_norm", &FitResult::residual_norm)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("message", &FitResult::message)
        .def("value", [](const FitResult& f, const std::string& n) { return f.value(n); })
        .def("error", [](const FitResult& f, const std::string& n) { return f.error(n); })
        .def("as_dict", [](const FitResult& f) {
            py::dict d;
            for (std::size_t k = 0; k < f.names.size(); ++k) d[py::str(f.names[k])] = f.values[k];
            return d;
        });

    m.def("fit_exponential", [](const std::vector<double>& t, const std::vector<double>& y) {
        return fit_exponential(t, y);
    });
    m.def("fit_damped_sinusoid", [](const std::vector<double>& t, const std::vector<double>& y) {
        return fit_damped_sinusoid(t, y);
    });
    m.def("fit_rb_decay", [](const std::vector<double>& mm, const std::vector<double>& y) {
        return fit_rb_decay(mm, y);
    });
    m.def("fit_reflection_qubit", [](const std::vector<double>& w, const std::vector<Complex>& s) {
        return fit_reflection_qubit(w, s);
    });
    m.def(
        "fit_reflection_resonator",
        [](const std::vector<double>& w, const std::vector<Complex>& s, bool enforce_identifiability) {
            ResonatorFitOptions o;
            o.enforce_identifiability = enforce_identifiability;
            return fit_reflection_resonator(w, s, o);
        },
        py::arg("omega"), py::arg("s11"), py::arg("enforce_identifiability") = true);

    m.def("reflection_numeric",
          py::overload_cast<const TransmonParams&, double, double, double>(&reflection_numeric),
          py::arg("transmon"), py::arg("cos_factor"), py::arg("omega_probe"), py::arg("photon_flux"));
    m.def("reflection_qubit_analytic", &reflection_qubit_analytic, py::arg("params"), py::arg("omega_probe"),
          py::arg("photon_flux"));
    m.def("resonator_reflection", &resonator_reflection, py::arg("resonator"), py::arg("p_th"),
          py::arg("omega_probe"));
    m.def("photon_flux_from_dbm", &photon_flux_from_dbm);
    m.def("dbm_from_photon_flux", &dbm_from_photon_flux);

    m.def("linspace", &linspace);
    m.def("t1_experiment", [](const DeviceModel& d, const std::vector<double>& t) {
        const DecayResult r = t1_experiment(d, t);
        return py::make_tuple(r.time, r.curve.y, r.fit);
    });
    m.def("echo_experiment", [](const DeviceModel& d, const std::vector<double>& t) {
        const DecayResult r = echo_experiment(d, t);
        return py::make_tuple(r.time, r.curve.y, r.fit);
    });
    m.def("ramsey_experiment", [](const DeviceModel& d, const std::vector<double>& t, double art) {
        const RamseyResult r = ramsey_experiment(d, t, art);
        return py::make_tuple(r.t2_star, r.freq_shift, r.curve.y, r.fit);
    });
    m.def(
        "rabi_experiment",
        [](const DeviceModel& d, double nd, std::optional<std::vector<double>> durations) {
            const RabiResult r = rabi_experiment(d, nd, durations ? *durations : default_rabi_durations(d, nd));
            py::dict out;
            out["rabi_freq"] = r.rabi_freq;
            out["rabi_decay"] = r.rabi_decay;
            out["error_per_cycle"] = r.error_per_cycle;
            out["durations"] = r.curve.x;
            out["excitation"] = r.curve.y;
            return out;
        },
        py::arg("device"), py::arg("photon_flux"), py::arg("durations") = py::none());
    m.def(
        "sweep_detuning",
        [](const DeviceModel& d, const std::vector<double>& detunings, int threads, bool coherence) {
            SweepOptions o;
            o.threads = threads;
            o.coherence = coherence;
            return sweep_dict(sweep_detuning(d, detunings, o));
        },
        py::arg("device"), py::arg("detunings"), py::arg("threads") = 1, py::arg("coherence") = true);
    m.def(
        "randomized_benchmarking",
        [](const DeviceModel& d, const std::vector<int>& lengths, int sequences, std::uint64_t seed, bool lossless) {
            RBConfig rb;
            rb.sequence_lengths = lengths;
            rb.sequences_per_length = sequences;
            rb.rng_seed = seed;
            rb.lossless = lossless;
            const RBResult r = randomized_benchmarking(d, rb);
            py::dict out;
            out["lengths"] = r.lengths;
            out["survival"] = r.survival;
            out["avg_gate_error"] = r.avg_gate_error;
            out["coherence_limit"] = r.coherence_limit;
            out["pi_amplitude"] = r.pi_amplitude;
            out["first_sequences"] = r.first_sequences;
            return out;
        },
        py::arg("device"), py::arg("lengths"), py::arg("sequences_per_length") = 30, py::arg("seed") = 1,
        py::arg("lossless") = false);

    m.def(
        "load_device",
        [](std::optional<std::string> config, std::optional<std::string> profile) {
            return resolve_config(config, profile).device;
        },
        py::arg("config") = py::none(), py::arg("profile") = py::none());
    m.def("commands", &command_names);
    m.def(
        "run",
        [](const std::string& command, const std::string& out_dir, std::optional<std::string> config,
           std::optional<std::string> profile) {
            run(command, resolve_config(config, profile), out_dir);
        },
        py::arg("command"), py::arg("out_dir"), py::arg("config") = py::none(), py::arg("profile") = py::none());
}
