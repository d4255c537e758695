import math
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from leakycavity import cli
from leakycavity import scenario as sc
from leakycavity.errors import ScenarioError

PRESET = resources.files("leakycavity") / "presets" / "paper_regime.ini"

TUNED = """
[geometry]
b = 1.0
eta = 1e-3
k_perp = 3.141592653589793
tune_reservoir = true
[drive]
epsilon = {eps}
duration = {dur}
"""


def write(tmp_path, text, name="s.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_cli(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def scaled_duration(eps, cycles=0.5):
    # duration in seconds that gives epsilon * omega * T = cycles on the tuned unit cavity
    from leakycavity.design import geometry_for_eta, resonant_pair
    mode_l = resonant_pair(geometry_for_eta(1.0, math.pi, 1e-3))[0]
    return cycles / (eps * 2 * mode_l.omega0) / sc.SPEED_OF_LIGHT


class TestPreset:
    def test_preset_row(self, tmp_path, capsys):
        out = tmp_path / "o.csv"
        code, _, err = run_cli(["run", str(PRESET), "--out", str(out)], capsys)
        assert code == 0, err
        rows = sc.parse_csv(out.read_text())
        assert len(rows) == 1
        r = rows[0]
        assert r["Q"] == pytest.approx(2 * math.pi * 1e6, rel=0.01)
        assert r["regime"] == "Growth"
        assert r["n_L_oracle"] is None
        assert "GHz" in err

    def test_stdout_default(self, capsys):
        code, out, _ = run_cli(["run", str(PRESET), "-q"], capsys)
        assert code == 0
        assert out.splitlines()[0] == ",".join(sc.COLUMNS)
        assert len(out.splitlines()) == 2

    def test_console_script(self, tmp_path):
        out = tmp_path / "o.csv"
        res = subprocess.run([sys.executable, "-m", "leakycavity.cli", "run", str(PRESET),
                              "--out", str(out)], capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        assert out.read_text().count("\n") == 2


class TestTable:
    def test_single_row_two_lines(self, tmp_path, capsys):
        path = write(tmp_path, TUNED.format(eps=1e-3, dur=1e-9))
        out = tmp_path / "o.csv"
        assert run_cli(["run", path, "--out", str(out), "-q"], capsys)[0] == 0
        text = out.read_bytes()
        assert text.count(b"\n") == 2 and b"\r" not in text

    def test_beta_sweep_101_lines_roundtrip(self, tmp_path, capsys):
        text = TUNED.format(eps=1e-3, dur=1e-9) + """
[sweep]
param = beta
start = 0.1
stop = 10
points = 100
spacing = log
"""
        out = tmp_path / "o.csv"
        assert run_cli(["run", write(tmp_path, text), "--out", str(out), "-q"], capsys)[0] == 0
        raw = out.read_text()
        assert raw.count("\n") == 101
        rows = sc.parse_csv(raw)
        assert sc.format_csv([sc.Row(i, r) for i, r in enumerate(rows)]) == raw
        betas = [r["beta"] for r in rows]
        assert betas == list(np.geomspace(0.1, 10, 100))
        # hotter starts give more quanta
        assert all(a["n_L_rwa"] >= b["n_L_rwa"] for a, b in zip(rows, rows[1:]))

    def test_float_roundtrip_bit_exact(self):
        vals = [math.pi, 1e-300, 2.0 ** -1074, 1.0 / 3.0, 6.02214076e23, math.inf]
        for v in vals:
            assert float(sc._fmt(v)) == v

    def test_empty_table_rejected(self):
        with pytest.raises(ScenarioError):
            sc.format_csv([])

    def test_deterministic_and_parallel(self, tmp_path, capsys):
        text = TUNED.format(eps=1e-3, dur=scaled_duration(1e-3, 0.05)) + """
[sweep]
param = epsilon
start = 0
stop = 1e-3
points = 6
[output]
engine = both
"""
        path = write(tmp_path, text)
        outs = []
        for jobs in ("1", "1", "3"):
            o = tmp_path / f"o{len(outs)}.csv"
            assert run_cli(["run", path, "--out", str(o), "--jobs", jobs, "-q"], capsys)[0] == 0
            outs.append(o.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_static_wall_keeps_thermal_population(self, tmp_path, capsys):
        text = TUNED.format(eps=0.0, dur=scaled_duration(1e-3)) + """
[thermal]
beta = 0.5
[output]
engine = both
"""
        code, out, _ = run_cli(["run", write(tmp_path, text), "-q"], capsys)
        assert code == 0
        r = sc.parse_csv(out)[0]
        assert r["n_L_rwa"] == pytest.approx(r["n0_L"], rel=1e-14)
        assert r["n_L_oracle"] == pytest.approx(r["n0_L"], rel=1e-9)
        assert r["n_R_oracle"] == pytest.approx(r["n0_R"], rel=1e-9)

    def test_gamma_sweep_chi_inverse(self, tmp_path, capsys):
        text = """
[geometry]
b = 1.0
gamma = 1e3
k_perp = 3.141592653589793
tune_reservoir = true
[drive]
epsilon = 1e-4
duration = 1e-9
[sweep]
param = gamma
start = 1e2
stop = 1e4
points = 3
spacing = log
"""
        code, out, _ = run_cli(["run", write(tmp_path, text), "-q"], capsys)
        assert code == 0
        rows = sc.parse_csv(out)
        slope = np.polyfit(np.log([r["sweep_value"] for r in rows]),
                           np.log([abs(r["chi"]) for r in rows]), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.05)

    def test_temperature_in_kelvin(self, tmp_path, capsys):
        text = TUNED.format(eps=1e-3, dur=1e-9) + "[thermal]\ntemperature = 2.0\n"
        code, out, _ = run_cli(["run", write(tmp_path, text), "-q"], capsys)
        assert code == 0
        beta = sc.parse_csv(out)[0]["beta"]
        assert beta == pytest.approx(1.0545718176461565e-34 * 299792458.0 / 1.380649e-23 / 2.0)

    def test_detuned_oracle_sweep(self, tmp_path, capsys):
        text = TUNED.format(eps=1e-3, dur=scaled_duration(1e-3, 0.5)) + """
[sweep]
param = omega_drive
start = 0.99
stop = 1.01
points = 3
relative = true
[output]
engine = both
"""
        code, out, _ = run_cli(["run", write(tmp_path, text), "-q"], capsys)
        assert code == 0
        rows = sc.parse_csv(out)
        assert rows[0]["n_L_rwa"] is None and rows[0]["xi"] is None
        assert rows[1]["n_L_rwa"] is not None
        assert rows[1]["n_L_oracle"] > 10 * max(rows[0]["n_L_oracle"], rows[2]["n_L_oracle"])


class TestExitCodes:
    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run_cli(["run", str(tmp_path / "nope.ini")], capsys)
        assert code == cli.EXIT_IO and "cannot read" in err

    def test_unwritable_output(self, tmp_path, capsys):
        code, _, err = run_cli(["run", str(PRESET), "--out", str(tmp_path / "no" / "o.csv")], capsys)
        assert code == cli.EXIT_IO and "cannot write" in err

    @pytest.mark.parametrize("text,needle", [
        ("[geometry]\nb = 1\nc = 3.7\ngamma = 1e3\nbogus = 1\n[drive]\nepsilon = 0.1\nduration = 1\n", "bogus"),
        ("[geometry]\nb = 1\nc = 3.7\n[drive]\nepsilon = 0.1\nduration = 1\n", "gamma or eta"),
        ("[geometry]\nb = 1\nc = 3.7\ngamma = 1e3\n[drive]\nepsilon = 1.5\nduration = 1\n", "epsilon"),
        ("[geometry]\nb = 1\nc = 3.7\ngamma = 1e3\n", "[drive]"),
        ("[geometry]\nb = 1\nc = 3.7\ngamma = 1e3\n[drive]\nepsilon = 0.1\nduration = 1\n"
         "[sweep]\nparam = beta\nstart = 1\nstop = 2\npoints = 0\n", "empty sweep"),
        ("[geometry]\nb = 1\nc = 3.7\ngamma = 1e3\n[drive]\nepsilon = 0.1\nduration = 1\n"
         "[sweep]\nparam = omega_drive\nstart = 1\nstop = 2\npoints = 2\n", "omega_drive"),
        ("[geometry]\nb = 1\nc = 3.7\ngamma = 1e3\n[drive]\nepsilon = 0.1\nduration = 1\n"
         "[sweep]\nparam = length\nstart = 1\nstop = 2\npoints = 2\n", "param"),
        ("no section header\n", "malformed"),
    ])
    def test_validation(self, tmp_path, capsys, text, needle):
        code, _, err = run_cli(["run", write(tmp_path, text)], capsys)
        assert code == cli.EXIT_VALIDATION
        assert needle in err and "scenario:" in err

    def test_bad_engine_flag(self, capsys):
        code, _, _ = run_cli(["run", str(PRESET), "--engine", "fast"], capsys)
        assert code == cli.EXIT_VALIDATION

    def test_degenerate_geometry_names_module(self, tmp_path, capsys):
        text = "[geometry]\nb = 1\nc = 4\ngamma = 1e3\n[drive]\nepsilon = 1e-3\nduration = 1e-9\n"
        code, _, err = run_cli(["run", write(tmp_path, text)], capsys)
        assert code == cli.EXIT_NUMERICAL
        assert err.startswith("leakycavity: spectral:") and "commensurate" in err

    def test_oracle_budget_names_module(self, capsys):
        code, _, err = run_cli(["run", str(PRESET), "--engine", "oracle"], capsys)
        assert code == cli.EXIT_NUMERICAL
        assert "oracle:" in err and "budget" in err


class TestScenarioParsing:
    def test_comments_and_defaults(self):
        scn = sc.parse_scenario("# header\n[geometry]\nb = 1   # m\nc = 3.7\ngamma = 1e3\n"
                                "[drive]\nepsilon = 1e-3\nduration = 0\n")
        assert scn.engine is sc.Engine.RWA and math.isinf(scn.beta)
        assert scn.drive.omega_drive is None and scn.sweep is None

    def test_override(self):
        scn = sc.parse_scenario(PRESET.read_text())
        new = sc.with_overrides(scn, engine=sc.Engine.BOTH, jobs=2)
        assert new.engine is sc.Engine.BOTH and new.jobs == 2
        with pytest.raises(ScenarioError):
            sc.with_overrides(scn, jobs=0)

    def test_omega_drive_sweep_needs_oracle(self):
        base = sc.parse_scenario(PRESET.read_text())
        with pytest.raises(ScenarioError):
            sc.Scenario(base.geometry, base.drive, sweep=sc.SweepSpec("omega_drive", 1, 2, 2))
