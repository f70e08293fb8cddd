"""End-to-end checks of the command-line interface and its file formats."""

import json
import subprocess
import sys

import pytest

from qnetsim import __version__
from qnetsim.cli import METRICS_COLUMNS, main
from qnetsim.engine import parse_config

SCENARIO_INI = """\
[source]
brightness_pairs_per_s_per_mw = 8e7
pump_power_mw = 0.1

[network]
switch = bottom
active_channels = 0,1,2

[run]
duration_s = 0.004
master_seed = 2718

[channels.alice.signal]
loss_db = 0

[channels.bob.signal]
loss_db = 0

[channels.alice.idler]
loss_db = 0
propagation_delay_ps = 5000

[channels.bob.idler]
loss_db = 0
propagation_delay_ps = 5000

[channels.charlie.idler]
loss_db = 0
propagation_delay_ps = 5000
"""


@pytest.fixture
def ini(tmp_path):
    path = tmp_path / "scenario.ini"
    path.write_text(SCENARIO_INI)
    return path


def _read_csv(path):
    comment, header, *rows = path.read_text().strip().split("\n")
    return comment, header.split(","), [r.split(",") for r in rows]


def test_simulate_writes_artifacts(ini, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(ini), "--out", str(out)]) == 0
    for name in ("metrics.csv", "histogram.csv", "manifest.json",
                 "alice.tags", "bob.tags", "charlie.tags"):
        assert (out / name).is_file()

    comment, header, rows = _read_csv(out / "metrics.csv")
    assert comment == f"# qnetsim {__version__} seed=2718"
    assert tuple(header) == METRICS_COLUMNS + ("link", "repetition", "flag")
    assert [r[header.index("link")] for r in rows] == ["alice-bob", "bob-charlie"]
    assert all(float(r[header.index("car")]) > 2.0 for r in rows)

    comment, header, rows = _read_csv(out / "histogram.csv")
    assert comment.startswith("# qnetsim")
    assert header == ["link", "offset_ps", "counts"]
    assert {r[0] for r in rows} == {"alice-bob", "bob-charlie"}

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["artifact"] == "qnetsim"
    assert manifest["seed"] == 2718
    assert manifest["links"] == ["alice-bob", "bob-charlie"]
    assert parse_config(manifest["config_ini"]).master_seed == 2718
    assert "simulated" in capsys.readouterr().out


def test_simulate_reproducible_and_seed_override(ini, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["simulate", "--config", str(ini), "--out", str(a)]) == 0
    assert main(["simulate", "--config", str(ini), "--out", str(b)]) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    assert (a / "alice.tags").read_bytes() == (b / "alice.tags").read_bytes()
    assert main(["simulate", "--config", str(ini), "--seed", "1", "--out", str(c)]) == 0
    assert (a / "alice.tags").read_bytes() != (c / "alice.tags").read_bytes()
    assert "seed=1" in (c / "metrics.csv").read_text().splitlines()[0]


def test_simulate_missing_config_is_input_error(tmp_path, capsys):
    code = main(["simulate", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_analyze_reproduces_simulate_outputs(ini, tmp_path):
    sim = tmp_path / "sim"
    ana = tmp_path / "ana"
    assert main(["simulate", "--config", str(ini), "--out", str(sim)]) == 0
    assert main(["analyze", "--in", str(sim), "--out", str(ana)]) == 0
    assert (sim / "metrics.csv").read_bytes() == (ana / "metrics.csv").read_bytes()
    assert (sim / "histogram.csv").read_bytes() == (ana / "histogram.csv").read_bytes()


def test_analyze_rejects_truncated_tags(ini, tmp_path, capsys):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", str(ini), "--out", str(sim)]) == 0
    tags = sim / "alice.tags"
    tags.write_bytes(tags.read_bytes()[:-5])
    assert main(["analyze", "--in", str(sim), "--out", str(tmp_path / "ana")]) == 2
    assert "byte offset" in capsys.readouterr().err


def test_analyze_checks_manifest(ini, tmp_path, capsys):
    assert main(["analyze", "--in", str(tmp_path), "--out", str(tmp_path / "o")]) == 2
    assert "manifest" in capsys.readouterr().err

    sim = tmp_path / "sim"
    assert main(["simulate", "--config", str(ini), "--out", str(sim)]) == 0
    manifest = json.loads((sim / "manifest.json").read_text())
    manifest["tag_files"]["alice"]["detector_id"] = 9
    (sim / "manifest.json").write_text(json.dumps(manifest))
    assert main(["analyze", "--in", str(sim), "--out", str(tmp_path / "o")]) == 2
    assert "detector_id" in capsys.readouterr().err


def test_plan_writes_tradeoff_curve(tmp_path, capsys):
    out = tmp_path / "plan.csv"
    code = main(
        ["plan", "--out", str(out), "--points", "40",
         "--rate-min-hz", "1e7", "--rate-max-hz", "3e8"]
    )
    assert code == 0
    assert capsys.readouterr().out.startswith("best:")
    comment, header, rows = _read_csv(out)
    assert header == ["rep_rate_hz", "n_channels", "per_channel_rate", "total_rate"]
    assert len(rows) == 40
    assert all(float(r[3]) >= 0.0 for r in rows)


def test_plan_unwritable_output_is_io_error(tmp_path, capsys):
    code = main(["plan", "--out", str(tmp_path / "missing" / "plan.csv"), "--points", "4"])
    assert code == 1
    assert "i/o error" in capsys.readouterr().err


def test_sweep_csv_schema(ini, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(
        ["sweep", "--config", str(ini), "--out", str(out),
         "--parameter", "source.pump_power_mw", "--values", "0.05,0.1", "--reps", "1"]
    )
    assert code == 0
    _, header, rows = _read_csv(out)
    assert tuple(header) == METRICS_COLUMNS + ("link", "repetition", "flag", "parameter", "value")
    assert len(rows) == 4  # 2 values x 2 links
    assert {r[header.index("value")] for r in rows} == {"0.05", "0.1"}
    assert all(r[header.index("parameter")] == "source.pump_power_mw" for r in rows)
    assert [r[header.index("pump_power_mw")] for r in rows[:2]] == ["0.05", "0.05"]


def test_sweep_channel_sets(ini, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(
        ["sweep", "--config", str(ini), "--out", str(out),
         "--parameter", "network.active_channels", "--values", "0 01", "--reps", "1"]
    )
    assert code == 0
    _, header, rows = _read_csv(out)
    assert all(len(r) == len(header) for r in rows)
    by_value = {r[header.index("value")] for r in rows}
    assert by_value == {"0", "01"}
    widths = {r[header.index("value")]: r[header.index("n_channels")] for r in rows}
    assert widths == {"0": "1", "01": "2"}


def test_sweep_input_errors(ini, tmp_path, capsys):
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep", "--config", str(ini), "--out", out, "--values", "a,b"]) == 2
    assert main(
        ["sweep", "--config", str(ini), "--out", out,
         "--parameter", "source.bogus", "--values", "1"]
    ) == 2
    assert "unknown sweep parameter" in capsys.readouterr().err


def test_topology_stdout(capsys):
    assert main(["topology"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert lines[0].startswith("# qnetsim")
    assert lines[1].startswith("link,pair_index,signal_nm")
    assert len(lines) == 2 + 4  # one row per satellite link
    assert "alice-satellite,0,781.5" in out
    assert ",12.9" in out and ",25.978," in out


def test_topology_csv_ground(tmp_path):
    out = tmp_path / "topo.csv"
    assert main(["topology", "--switch", "merged", "--out", str(out)]) == 0
    _, header, rows = _read_csv(out)
    assert header[-2:] == ["signal_loss_db", "idler_loss_db"]
    assert len(rows) == 6  # three assignments per ground table, unioned
    links = {r[0] for r in rows}
    assert links == {"alice-charlie", "bob-charlie", "alice-bob"}
    assert {r[header.index("signal_loss_db")] for r in rows} == {"16.98"}


def test_jsi_reports_crosstalk(tmp_path, capsys):
    out = tmp_path / "jsi.csv"
    assert main(["jsi", "--out", str(out), "--resolution", "128"]) == 0
    stdout = capsys.readouterr().out
    line = next(l for l in stdout.splitlines() if l.startswith("max off-diagonal"))
    assert float(line.split(":")[1].split("dB")[0]) < -30.0
    comment, header, rows = _read_csv(out)
    assert header[0] == "signal_nm"
    assert len(header) == 129  # idler axis
    assert len(rows) == 128
    assert all(float(v) >= 0.0 for v in rows[0][1:])


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert f"qnetsim {__version__}" in capsys.readouterr().out


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qnetsim.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert f"qnetsim {__version__}" in proc.stdout
