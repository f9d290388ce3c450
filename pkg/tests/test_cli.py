import json
import math

import numpy as np
import pytest

from damplab import cli, suites, swing


CASE1 = {
    "n": 3,
    "Y": [
        {"from": 1, "to": 2, "mag": 1.0, "angle": math.pi / 2},
        {"from": 1, "to": 3, "mag": 1.0, "angle": math.pi / 2},
        {"from": 2, "to": 3, "mag": 0.5, "angle": math.pi / 2},
    ],
    "V": [1.0, 1.0, 1.0],
    "Pm": [-math.sqrt(3), math.sqrt(3) / 2, math.sqrt(3) / 2],
    "inertia": [1.0, 1.0, 1.0],
    "damping": ["gamma", "gamma", 1.5],
    "omega_s": 1.0,
    "delta_guess": [0.1, 1.0, 1.0],
}


def case2_dict():
    model = swing.demo_lossy_two_machine(0.2)
    return {
        "n": 2,
        "Y": [{"from": 1, "to": 2, "re": -1.0, "im": 5.7978}],
        "V": [1.0, 1.0],
        "Pm": list(model.p_mech),
        "inertia": [1.0, 1.0],
        "damping": ["gamma", 1.0],
        "omega_s": 1.0,
        "delta_guess": [1.4, 0.0],
    }


@pytest.fixture()
def case1_file(model_file):
    return model_file(CASE1, "case1.json")


@pytest.fixture()
def case2_file(model_file):
    return model_file(case2_dict(), "case2.json")


class TestSpectrum:
    def test_undamped_pair_exits_2(self, case1_file, capsys):
        code = cli.main(["spectrum", case1_file, "--gamma", "0"])
        out = capsys.readouterr().out
        assert code == cli.EXIT_NONHYPERBOLIC
        assert "1.224745" in out
        assert "unobservable mode" in out

    def test_damped_exits_0(self, case1_file, capsys):
        code = cli.main(["spectrum", case1_file, "--gamma", "0.3"])
        assert code == cli.EXIT_OK
        assert "hyperbolic beyond the structural zero: True" in capsys.readouterr().out

    def test_missing_file_exits_1(self, capsys):
        code = cli.main(["spectrum", "/nonexistent/model.json", "--gamma", "0"])
        assert code == cli.EXIT_ERROR
        assert "error" in capsys.readouterr().err

    def test_json_report_written(self, case1_file, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = cli.main(
            ["spectrum", case1_file, "--gamma", "0.3", "--out", str(out)]
        )
        assert code == cli.EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["hyperbolic_beyond_structural_zero"] is True
        assert len(payload["eigenvalues"]) == 6

    def test_gamma_placeholder_needs_value(self, case1_file, capsys):
        code = cli.main(["spectrum", case1_file])
        assert code == cli.EXIT_ERROR


class TestHopfScan:
    def test_case2_certificate(self, case2_file, tmp_path, capsys):
        code = cli.main(
            ["hopf-scan", case2_file, "--gamma-range", "0.1:0.3:21",
             "--out", str(tmp_path)]
        )
        assert code == cli.EXIT_OK
        certs = json.loads((tmp_path / "certificates.json").read_text())
        assert len(certs) == 1
        cert = certs[0]
        assert abs(cert["gamma0"] - 0.2) <= 1e-3
        assert cert["kind"] == "subcritical"
        assert 1.03 <= cert["l1"] <= 1.27
        locus = (tmp_path / "locus.csv").read_text().splitlines()
        assert locus[0] == "gamma,branch,re,im"
        assert len(locus) > 21

    def test_case1_boundary_certificate(self, case1_file, tmp_path, capsys):
        code = cli.main(
            ["hopf-scan", case1_file, "--gamma-range", "0:0.5:26",
             "--out", str(tmp_path)]
        )
        assert code == cli.EXIT_OK
        certs = json.loads((tmp_path / "certificates.json").read_text())
        assert len(certs) == 1
        cert = certs[0]
        assert cert["boundary"] is True
        assert cert["gamma0"] == 0.0
        assert cert["kind"] == "supercritical"
        assert -2.0e-3 <= cert["l1"] <= -1.2e-3
        assert abs(abs(cert["transversality"]) - 0.5) <= 1e-4

    def test_stable_model_no_certificates(self, model_file, tmp_path, capsys):
        data = dict(CASE1)
        data["damping"] = [1.0, 1.0, 1.5]
        data["Y"] = CASE1["Y"]
        path = model_file(data, "stable.json")
        code = cli.main(
            ["hopf-scan", path, "--gamma-range", "0:1:11", "--out", str(tmp_path)]
        )
        out = capsys.readouterr().out
        assert code == cli.EXIT_OK
        assert "no axis crossings" in out
        assert json.loads((tmp_path / "certificates.json").read_text()) == []


class TestSimulate:
    def test_case1_oscillation_csv(self, case1_file, tmp_path, capsys):
        code = cli.main(
            ["simulate", case1_file, "--gamma", "0", "--kick", "0.02",
             "--t-span", "0", "400", "--out", str(tmp_path)]
        )
        assert code == cli.EXIT_OK
        rows = (tmp_path / "trajectory.csv").read_text().splitlines()
        header = rows[0].split(",")
        assert header == ["t", "psi_1", "psi_2", "omega_1", "omega_2",
                          "omega_3", "crossing"]
        data = np.loadtxt(rows[1:], delimiter=",")
        t, psi1 = data[:, 0], data[:, 1]
        # resample uniformly and find the dominant frequency
        tu = np.linspace(t[0], t[-1], 16384)
        sig = np.interp(tu, t, psi1)
        sig -= sig.mean()
        spectrum = np.abs(np.fft.rfft(sig * np.hanning(sig.size)))
        freqs = np.fft.rfftfreq(sig.size, d=(tu[1] - tu[0]))
        f_peak = freqs[np.argmax(spectrum)]
        f_want = math.sqrt(1.5) / (2 * math.pi)
        assert abs(f_peak - f_want) <= 0.02 * f_want
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["classification"] == "near_periodic"

    def test_zero_length_span(self, case1_file, tmp_path, capsys):
        code = cli.main(
            ["simulate", case1_file, "--gamma", "0.2", "--t-span", "0", "0",
             "--out", str(tmp_path)]
        )
        assert code == cli.EXIT_OK
        rows = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert len(rows) == 2  # header plus the initial sample

    def test_wrong_state_length(self, case1_file, capsys):
        code = cli.main(
            ["simulate", case1_file, "--gamma", "0.2", "--state", "1", "2"]
        )
        assert code == cli.EXIT_ERROR

    def test_cycle_search_locates_unstable_cycle(self, case2_file, tmp_path,
                                                 capsys):
        code = cli.main(
            ["simulate", case2_file, "--gamma", "0.25", "--kick", "0.05",
             "--t-span", "0", "30", "--cycle-search", "--out", str(tmp_path)]
        )
        assert code == cli.EXIT_OK
        summary = json.loads((tmp_path / "summary.json").read_text())
        cycle = summary["cycle"]
        assert cycle is not None
        assert cycle["stability_hint"] == "expanding_section"
        assert abs(cycle["period"] - 6.793) < 0.05
        assert 0.3 < cycle["amplitude"] < 0.4


class TestVerify:
    def test_deterministic_output(self, capsys):
        code1 = cli.main(["verify", "--seed", "42", "--scale", "0.02"])
        out1 = capsys.readouterr().out
        code2 = cli.main(["verify", "--seed", "42", "--scale", "0.02"])
        out2 = capsys.readouterr().out
        assert code1 == code2 == cli.EXIT_OK
        assert out1 == out2
        assert "all suites passed" in out1

    def test_injected_bug_trips_suite_and_dumps(self, tmp_path, monkeypatch,
                                                capsys):
        # Flip the sign of the coupling weights: the analytic flow Jacobian
        # no longer matches finite differences of the flow, and the verify
        # harness must catch it, dump the instance, and exit 3.
        original = swing.PowerGridModel.weights

        def flipped(self, delta):
            return -original(self, delta)

        monkeypatch.setattr(swing.PowerGridModel, "weights", flipped)
        result = suites.suite_flow_jacobian_fd(seed=1, trials=5)
        assert not result.passed

        monkeypatch.setattr(
            suites, "SUITES", {"flow_jacobian_fd": suites.suite_flow_jacobian_fd}
        )
        code = cli.main(["verify", "--scale", "0.05", "--out", str(tmp_path)])
        assert code == cli.EXIT_PROPERTY_FAILURE
        dump = json.loads((tmp_path / "verify_failures.json").read_text())
        assert "flow_jacobian_fd" in dump and dump["flow_jacobian_fd"]


class TestReduce:
    def test_export(self, case2_file, tmp_path, capsys):
        out = tmp_path / "reduced.json"
        code = cli.main(
            ["reduce", case2_file, "--gamma", "0.25", "--out", str(out)]
        )
        assert code == cli.EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["n"] == 2
        assert len(payload["jacobian"]) == 3
        left, axis, right = payload["inertia_full"]
        rleft, raxis, rright = payload["inertia_reduced"]
        assert (left, axis - 1, right) == (rleft, raxis, rright)
