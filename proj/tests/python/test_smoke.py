import json
import math

import pytest

import jqfsim


def table_device():
    return jqfsim.load_device()


def test_units_round_trip():
    assert jqfsim.hertz(jqfsim.angular(8.002e9)) == pytest.approx(8.002e9, rel=1e-15)


def test_default_device_matches_table():
    d = table_device()
    assert jqfsim.hertz(d.qubit.omega) == pytest.approx(8.002e9)
    assert jqfsim.hertz(d.qubit.gamma_ex) == pytest.approx(123e3)
    assert d.jqf is not None
    assert d.dimension() == d.qubit.levels * d.jqf.levels


def test_coupling_rates_ideal_geometry():
    q = jqfsim.TransmonParams(jqfsim.angular(8e9), jqfsim.angular(-0.4e9), jqfsim.angular(1e5), 0.0, 0.0, 0.0, 2)
    f = jqfsim.TransmonParams(jqfsim.angular(8e9), jqfsim.angular(-0.4e9), jqfsim.angular(1e8), 0.0, 0.0, 0.0, 2)
    r = jqfsim.coupling_rates(q, f, jqfsim.WaveguideGeometry(0.5, q.omega))
    assert abs(r.J) < 1e-6 * math.sqrt(q.gamma_ex * f.gamma_ex)
    assert r.gamma_qf == pytest.approx(-math.sqrt(q.gamma_ex * f.gamma_ex))


def test_reflection_numeric_matches_closed_form():
    q = jqfsim.TransmonParams(jqfsim.angular(8e9), 0.0, jqfsim.angular(1e5), jqfsim.angular(1e4),
                              jqfsim.angular(5e3), 0.1, 2)
    for x in (-3.0, 0.0, 1.5):
        probe = q.omega + x * q.gamma_ex
        assert abs(jqfsim.reflection_numeric(q, 1.0, probe, 1e6)
                   - jqfsim.reflection_qubit_analytic(q, probe, 1e6)) < 1e-6


def test_t1_without_jqf():
    d = table_device()
    t1, curve, fit = jqfsim.t1_experiment(d, jqfsim.linspace(0.0, 6e-6, 121))
    assert t1 == pytest.approx(1.1e-6, rel=0.1)
    assert fit.converged
    assert len(curve) == 121


def test_fit_exponential_exact():
    t = jqfsim.linspace(0.0, 20e-6, 201)
    y = [0.9 * math.exp(-x / 5e-6) + 0.03 for x in t]
    fit = jqfsim.fit_exponential(t, y)
    assert fit.value("T") == pytest.approx(5e-6, rel=1e-8)


def test_errors_are_python_exceptions():
    with pytest.raises(jqfsim.JqfsimError):
        jqfsim.fit_exponential([0.0, 1.0], [1.0, 0.5])


def test_run_writes_outputs(tmp_path):
    jqfsim.run("t1", str(tmp_path))
    summary = json.loads((tmp_path / "t1.json").read_text())
    assert summary["t1_s"] == pytest.approx(1.1e-6, rel=0.1)
    assert (tmp_path / "t1.csv").exists()
    assert (tmp_path / "resolved_config.json").exists()
    assert "t1" in jqfsim.commands()


def test_jqf_fields_are_writable_in_place():
    d = table_device()
    d.jqf.omega = d.qubit.omega + jqfsim.angular(9.5e6)
    assert jqfsim.hertz(d.jqf.omega - d.qubit.omega) == pytest.approx(9.5e6)
    t1, _, _ = jqfsim.t1_experiment(d, jqfsim.linspace(0.0, 30e-6, 151))
    assert t1 == pytest.approx(5.2e-6, rel=0.25)
