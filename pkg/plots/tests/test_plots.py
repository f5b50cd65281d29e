"""Recipe parsing and rendering of the five figure kinds."""

import os
import shutil
import subprocess

import numpy as np
import pytest

from mtsph_plots.recipes import FIGURE_KINDS, RecipeError, parse_recipe
from mtsph_plots.render import read_csv, render

COLUMNS = ("time_s", "reaction_force_N", "neck_disp_m", "amplitude_m",
           "ek_ratio", "n_inner", "n_s_cum", "n_d_cum")


def _write_timeseries(path, n=40, ek=None):
    rng = np.random.default_rng(7)
    t = np.linspace(0.1, 4.0, n)
    ek_col = ek if ek is not None else 10.0 ** rng.uniform(-4, -2, n)
    cols = {
        "time_s": t,
        "reaction_force_N": 1e3 * np.sin(t) ** 2,
        "neck_disp_m": 1e-5 * t,
        "amplitude_m": 1e-6 * np.sqrt(t),
        "ek_ratio": ek_col,
        "n_inner": rng.integers(1, 40, n),
        "n_s_cum": np.cumsum(rng.integers(1, 40, n)),
        "n_d_cum": np.cumsum(rng.integers(1, 40, n)),
    }
    with open(path, "w") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for k in range(n):
            fh.write(",".join(repr(float(cols[c][k])) for c in COLUMNS) + "\n")
    return str(path)


def _write_profiles(path, n_t=4, n_x=30):
    ts = np.linspace(1.0, 10.0, n_t)
    xs = np.linspace(-5e-3, 5e-3, n_x)
    with open(path, "w") as fh:
        fh.write("time_s,x_m,amplitude_m\n")
        for t in ts:
            for x in xs:
                y = 1e-6 * t * np.cos(np.pi * x / 10e-3)
                fh.write(f"{float(t)!r},{float(x)!r},{float(y)!r}\n")
    return str(path)


def _recipe(tmp_path, text, name="fig.rcp"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestParse:
    def test_minimal(self, tmp_path):
        csv = _write_timeseries(tmp_path / "a.csv")
        r = parse_recipe(_recipe(tmp_path, f"kind = force_disp\ninputs = {csv}\n"))
        assert r.kind == "force_disp"
        assert r.inputs == [csv]
        assert r.out == "force_disp.png"

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(RecipeError, match="unknown figure kind"):
            parse_recipe(_recipe(tmp_path, "kind = pie\ninputs = a.csv\n"))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(RecipeError, match="colour"):
            parse_recipe(_recipe(tmp_path,
                                 "kind = force_disp\ninputs = a\ncolour = red\n"))

    def test_inputs_required(self, tmp_path):
        with pytest.raises(RecipeError, match="input"):
            parse_recipe(_recipe(tmp_path, "kind = force_disp\n"))

    def test_times_list(self, tmp_path):
        r = parse_recipe(_recipe(
            tmp_path, "kind = amplitude_profile\ninputs = p.csv\n"
                      "times = 1, 5, 10\n"))
        assert r.times == [1.0, 5.0, 10.0]


class TestRender:
    @pytest.mark.parametrize("kind", [k for k in FIGURE_KINDS
                                      if k != "amplitude_profile"])
    def test_each_kind_renders(self, tmp_path, kind):
        csv = _write_timeseries(tmp_path / "run.csv")
        r = parse_recipe(_recipe(tmp_path, f"kind = {kind}\ninputs = {csv}\n"))
        out = render(r, str(tmp_path / f"{kind}.png"))
        assert os.path.getsize(out) > 1000

    def test_amplitude_profile_renders(self, tmp_path):
        csv = _write_profiles(tmp_path / "profiles.csv")
        r = parse_recipe(_recipe(
            tmp_path, f"kind = amplitude_profile\ninputs = {csv}\n"))
        out = render(r, str(tmp_path / "prof.png"))
        assert os.path.getsize(out) > 1000

    def test_two_line_minimal_csv(self, tmp_path):
        csv = _write_timeseries(tmp_path / "two.csv", n=2)
        r = parse_recipe(_recipe(tmp_path,
                                 f"kind = force_disp\ninputs = {csv}\n"))
        assert os.path.exists(render(r, str(tmp_path / "two.png")))

    def test_overlay_two_resolutions(self, tmp_path):
        a = _write_timeseries(tmp_path / "coarse.csv")
        b = _write_timeseries(tmp_path / "fine.csv")
        r = parse_recipe(_recipe(
            tmp_path, f"kind = radius_disp\ninputs = {a}, {b}\n"))
        assert os.path.exists(render(r, str(tmp_path / "overlay.png")))

    def test_missing_column_named(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("time_s,foo\n0.0,1.0\n")
        r = parse_recipe(_recipe(
            tmp_path, f"kind = force_disp\ninputs = {p}\n"))
        with pytest.raises(RecipeError, match="reaction_force_N"):
            render(r, str(tmp_path / "x.png"))

    def test_empty_input_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("time_s,reaction_force_N\n")
        r = parse_recipe(_recipe(
            tmp_path, f"kind = force_disp\ninputs = {p}\n"))
        with pytest.raises(RecipeError, match="no data"):
            render(r, str(tmp_path / "x.png"))

    def test_energy_decay_monotone_assertion(self, tmp_path):
        # damping-only trace decays monotonically and must pass
        good = _write_timeseries(tmp_path / "damped.csv",
                                 ek=np.geomspace(1e-2, 1e-8, 40))
        r = parse_recipe(_recipe(
            tmp_path,
            f"kind = energy_decay\ninputs = {good}\nrequire_monotone = yes\n"))
        assert os.path.exists(render(r, str(tmp_path / "ok.png")))

        bad = _write_timeseries(tmp_path / "noisy.csv",
                                ek=np.abs(np.sin(np.linspace(0, 9, 40))) + 1e-6)
        r2 = parse_recipe(_recipe(
            tmp_path,
            f"kind = energy_decay\ninputs = {bad}\nrequire_monotone = yes\n",
            name="f2.rcp"))
        with pytest.raises(RecipeError, match="monotone"):
            render(r2, str(tmp_path / "bad.png"))

    def test_rendering_does_not_mutate_inputs(self, tmp_path):
        csv = _write_timeseries(tmp_path / "run.csv")
        before = open(csv, "rb").read()
        r = parse_recipe(_recipe(tmp_path,
                                 f"kind = counters\ninputs = {csv}\n"))
        render(r, str(tmp_path / "c1.png"))
        render(r, str(tmp_path / "c2.png"))  # idempotent re-render
        assert open(csv, "rb").read() == before


class TestCliAgainstSolver:
    """Renders from real solver output through the public interfaces."""

    @pytest.mark.skipif(shutil.which("mtsph") is None,
                        reason="mtsph CLI not installed")
    def test_five_kinds_from_real_run(self, tmp_path):
        cfg = tmp_path / "tiny.cfg"
        cfg.write_text(
            "scenario = necking_2d\nlength = 8e-3\nwidth = 2e-3\n"
            "dp = 0.5e-3\nstretch_per_end = 1e-5\nn_outer = 4\n"
            "ramp_steps = 5\nmax_inner = 50\nenergy_ref = 1e-3\n")
        out = tmp_path / "run"
        subprocess.run(["mtsph", "run", str(cfg), "--out", str(out),
                        "--quiet"], check=True)
        fsi_cfg = tmp_path / "fsi.cfg"
        fsi_cfg.write_text(
            "scenario = fsi_2d\nlength = 2e-3\nt_total = 2.4\nn_outer = 3\n"
            "contact_time = 0.8\nmax_inner = 40\n")
        fsi_out = tmp_path / "fsi"
        subprocess.run(["mtsph", "run", str(fsi_cfg), "--out", str(fsi_out),
                        "--quiet"], check=True)

        ts = out / "timeseries.csv"
        prof = fsi_out / "profiles.csv"
        from mtsph_plots.cli import main
        for kind, src in (("force_disp", ts), ("radius_disp", ts),
                          ("energy_decay", ts), ("counters", ts),
                          ("amplitude_profile", prof)):
            rcp = tmp_path / f"{kind}.rcp"
            rcp.write_text(f"kind = {kind}\ninputs = {src}\n"
                           f"out = {tmp_path}/{kind}.png\n")
            assert main(["plot", str(rcp)]) == 0
            assert os.path.getsize(tmp_path / f"{kind}.png") > 1000
