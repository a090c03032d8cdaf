import json
import subprocess
import sys

import pytest

from tripleslit import cli
from tripleslit.quadrature import QuadratureError

SMALL = ["--w-um", "2", "--d-um", "6", "--height-um", "4", "--lambda-nm", "1000", "--L-m", "2e-4"]


def run(args, capsys=None):
    code = cli.main(args)
    out = capsys.readouterr() if capsys else None
    return code, out


def read_csv(path):
    text = path.read_bytes()
    assert b"\r" not in text
    lines = text.decode().splitlines()
    return lines[0], [list(map(float, line.split(","))) for line in lines[1:]]


def test_profile_analytic(tmp_path, capsys):
    out = tmp_path / "p.csv"
    code, _ = run(["profile", "--preset", "photon", "--method", "analytic",
                   "--theta-deg", "-3:3:601", "--out", str(out)], capsys)
    assert code == 0
    header, rows = read_csv(out)
    assert header == "theta_deg,kappa"
    assert len(rows) == 601
    assert rows[300][0] == 0.0
    assert abs(rows[300][1]) == pytest.approx(5.6e-7, rel=0.02)
    manifest = json.loads(out.with_suffix(".json").read_text())
    for key in ("command", "geometry", "methods", "settings", "version", "wall_time_s", "warnings"):
        assert key in manifest
    assert manifest["methods"] == ["analytic"]
    assert manifest["geometry"]["slit_width"] == 30e-6
    assert any("Fresnel number" in w for w in manifest["warnings"])


def test_full_precision_output(tmp_path, capsys):
    out = tmp_path / "p.csv"
    run(["profile", "--theta-deg", "0:0.1:3", "--out", str(out)], capsys)
    value = out.read_text().splitlines()[1].split(",")[1]
    assert len(value.lstrip("-").replace(".", "").split("e")[0]) == 17


def test_thick_fdtd_profile(tmp_path, capsys):
    out = tmp_path / "f.csv"
    code, _ = run(["profile", "--preset", "fdtd", "--method", "analytic", "--thick", "--n-imag", "2.61",
                   "--theta-deg", "-10:10:21", "--out", str(out)], capsys)
    assert code == 0
    meta = json.loads(out.with_suffix(".json").read_text())["settings"]["metadata"]
    assert meta["effective_width"] == pytest.approx(1.15, abs=0.005)
    assert meta["amplitude_factor"] == 4.0


def test_json_format(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert run(["profile", "--theta-deg", "-1:1:5", "--format", "json", "--out", str(out)], capsys)[0] == 0
    payload = json.loads(out.read_text())
    assert payload["columns"] == ["theta_deg", "kappa"]
    assert len(payload["rows"]) == 5
    assert payload["manifest"]["command"] == "profile"


@pytest.mark.parametrize("args", [
    ["profile", "--points", "0"],
    ["profile", "--theta-deg", "1:0:5"],
    ["profile", "--theta-deg", "-30:30:5"],
    ["profile", "--theta-deg", "a:b:c"],
    ["profile", "--method", "fdtd"],
    ["scan-d", "--d-range", "1.0:0.02:40"],
    ["compare", "--methods", "analytic"],
    ["compare", "--methods", "analytic,magic"],
    ["bound", "--w-um", "0"],
    ["bound", "--preset", "electron", "--d-um", "0.01"],
    [],
])
def test_usage_errors_exit_2(args, tmp_path, capsys):
    code, _ = run(args + (["--out", str(tmp_path / "x.csv")] if args else []), capsys)
    assert code == 2


def test_numeric_failure_exit_3(monkeypatch, tmp_path, capsys):
    def boom(*_, **__):
        raise QuadratureError("panel budget exhausted", 3e-3, 32768)

    monkeypatch.setattr(cli, "run_method", boom)
    code, out = run(["profile", "--method", "fraunhofer", "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 3
    assert "3e-03" in out.err or "0.003" in out.err


def test_bound(capsys):
    code, out = run(["bound", "--preset", "photon", "--verify"], capsys)
    assert code == 0
    assert "7.29e-05" in out.out and out.out.strip().endswith("PASS")
    code, out = run(["bound", "--preset", "electron", "--verify"], capsys)
    assert code == 0 and out.out.strip().endswith("PASS")


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# photon with wider slits\npreset = photon\nw_um = 40\nverify = true\n")
    _, out = run(["--config", str(cfg), "bound"], capsys)
    from_file = out.out.splitlines()[0]
    _, out = run(["--config", str(cfg), "bound", "--w-um", "30"], capsys)
    assert out.out.splitlines()[0] == "bound 7.29e-05"
    assert from_file != "bound 7.29e-05"
    assert out.out.strip().endswith("PASS")


def test_compare_summary(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code, printed = run(["compare", "--methods", "analytic,fraunhofer", "--L-m", "5.56", "--D-m", "5.56",
                         "--theta-deg", "-0.3:0.3:13", "--out", str(out)], capsys)
    assert code == 0
    header, rows = read_csv(out)
    assert header == "theta_deg,kappa_analytic,kappa_fraunhofer"
    assert len(rows) == 13
    assert "Fresnel number: 0.0001998" in printed.out
    summary = json.loads(out.with_suffix(".json").read_text())["results"]
    assert summary["methods"]["fraunhofer"]["central_deviation"] <= 0.10


def test_scan_d_is_deterministic(tmp_path, capsys):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (first, second):
        assert run(["scan-d", *SMALL, "--d-range", "1e-4:4e-4:3", "--out", str(path)], capsys)[0] == 0
    assert first.read_bytes() == second.read_bytes()
    header, rows = read_csv(first)
    assert header == "D_m,abs_kappa"
    assert [r[0] for r in rows] == pytest.approx([1e-4, 2.5e-4, 4e-4])
    assert all(r[1] > 0 for r in rows)


def test_fresnel_profile_small_geometry(tmp_path, capsys):
    out = tmp_path / "f.csv"
    code, _ = run(["profile", "--method", "fresnel", *SMALL, "--D-m", "2e-4",
                   "--theta-deg", "-1:1:3", "--out", str(out)], capsys)
    assert code == 0
    _, rows = read_csv(out)
    assert rows[0][1] == pytest.approx(rows[2][1], rel=1e-9)


def test_presets_listing(capsys):
    code, out = run(["presets"], capsys)
    assert code == 0
    assert set(json.loads(out.out)) == {"photon", "electron", "fdtd"}


def test_console_entry_point_runs():
    done = subprocess.run([sys.executable, "-m", "tripleslit.cli", "bound", "--preset", "photon"],
                          capture_output=True, text=True, check=False)
    assert done.returncode == 0
    assert done.stdout.startswith("bound 7.29e-05")


ANCHOR_REASON = "exact-propagator |kappa| at L = D = 20 cm is 7.7e-7, not 6e-7 (see the Fresnel anchor analysis)"


@pytest.mark.xfail(strict=True, reason=ANCHOR_REASON)
def test_scan_d_anchor_row(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run(["scan-d", "--preset", "photon", "--L", "0.20", "--d-range", "0.2:0.2:1", "--out", str(out)], capsys)[0] == 0
    _, rows = read_csv(out)
    assert rows[0][1] == pytest.approx(6e-7, rel=0.15)


@pytest.mark.xfail(strict=True, reason=ANCHOR_REASON)
def test_compare_fresnel_anchor_deviation(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code, printed = run(["compare", "--methods", "analytic,fresnel", "--L-m", "0.2", "--D-m", "0.2",
                         "--theta-deg", "0:0:1", "--out", str(out)], capsys)
    assert code == 0 and "fresnel vs analytic: central deviation" in printed.out
    summary = json.loads(out.with_suffix(".json").read_text())["results"]
    assert summary["methods"]["fresnel"]["central_deviation"] == pytest.approx(0.07, abs=0.04)
