import csv
import io
from pathlib import Path

import pytest

from incentive_alloc import cli, report
from incentive_alloc.config import ConfigError, dump_config, parse_config
from incentive_alloc.engine import load_summary_csv
from incentive_alloc.metrics import RunSummary

from conftest import DATA

MINIMAL = "dataset = synthetic:40:120\nbudget = 5\nstrategy = dgia\n"
ROOT = Path(__file__).resolve().parents[1]


def test_defaults_fill_in():
    c = parse_config(MINIMAL)
    assert (c.actions, c.lam, c.gamma, c.rho0, c.theta0, c.horizon) == (4, 0.1, 0.9, 0.5, 0.0, 150)
    assert c.budget == 5.0 and c.strategy == "dgia"


def test_comments_types_and_tuples():
    c = parse_config(MINIMAL + "# note\nundirected = yes  # inline\nchurn = dn1\nchurn_join = 2,7\n")
    assert c.undirected is True
    assert c.churn_join == (2, 7)


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="foo"):
        parse_config(MINIMAL + "foo = 1\n")


def test_all_missing_keys_listed():
    with pytest.raises(ConfigError, match="dataset, budget, strategy"):
        parse_config("seed = 3\n")


def test_bad_values():
    with pytest.raises(ConfigError, match="budget"):
        parse_config(MINIMAL.replace("5", "lots"))
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("just words\n")
    with pytest.raises(ConfigError, match="unknown strategy"):
        parse_config(MINIMAL.replace("dgia", "magic"))


def test_override_wins():
    assert parse_config(MINIMAL, ["budget=20"]).budget == 20.0


def test_dump_round_trip():
    c = parse_config(MINIMAL + "churn_join = 1,4\nundirected = true\n")
    assert parse_config(dump_config(c)) == c


@pytest.mark.parametrize("path", sorted((ROOT / "configs").rglob("*.cfg")), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    parse_config(path.read_text())


def _summaries():
    return [
        RunSummary("none", 3000.0, 0.0, 0.196, 0.109, 0.0),
        RunSummary("iud+dgia", 3000.0, 2013.0, 0.665, 0.419, 0.671),
        RunSummary("uniform", 3000.0, 2900.0, 0.4, 0.12, 0.9667),
    ]


def test_report_markers_and_order():
    rows = report.build_rows(_summaries())
    assert [r[0] for r in rows[1:]] == ["iud+dgia", "uniform", "none"]
    none_row = rows[3]
    assert none_row[2] == none_row[5] == none_row[6] == none_row[7] == "/"
    assert rows[1][3].endswith("*") and rows[1][2].endswith("*")
    assert rows[1][6] == "0.699*"


def test_report_csv_and_text_agree():
    text, table = report.report(_summaries())
    for row in list(csv.reader(io.StringIO(table)))[1:]:
        line = next(l for l in text.splitlines() if l.startswith(row[0] + " "))
        assert line.split()[1:] == row[1:]


def test_report_needs_baseline():
    with pytest.raises(report.ReportError):
        report.build_rows(_summaries()[1:])
    assert len(report.build_rows(_summaries()[1:], returns=False)[0]) == 6


def test_report_averages_seeds():
    a = RunSummary("none", 10.0, 0.0, 0.2, 0.1, 0.0)
    b = RunSummary("none", 10.0, 0.0, 0.4, 0.3, 0.0)
    (avg,) = report.average_by_strategy([a, b])
    assert avg.mean_gaup == pytest.approx(0.3)


def test_parse_seeds():
    assert cli.parse_seeds("0-3") == [0, 1, 2, 3]
    assert cli.parse_seeds("1,5,7-8") == [1, 5, 7, 8]


def test_validate_command(capsys):
    assert cli.main(["validate", "--dataset", str(DATA / "tiny.txt"), "--expect-nodes", "6",
                     "--expect-edges", "9", "--clustering"]) == 0
    out = capsys.readouterr().out
    assert "users: 6" in out and "edges: 9" in out
    assert cli.main(["validate", "--dataset", str(DATA / "tiny.txt"), "--expect-nodes", "7"]) == 1
    assert "MISMATCH" in capsys.readouterr().out


def test_validate_missing_file_exit_code(tmp_path, capsys):
    assert cli.main(["validate", "--dataset", str(tmp_path / "no.txt")]) == 2


def test_run_matrix_report_end_to_end(tmp_path, capsys, monkeypatch):
    cfgs = tmp_path / "cfgs"
    cfgs.mkdir()
    for s in ("none", "uniform", "iud+dgia"):
        (cfgs / f"{s.replace('+', '_')}.cfg").write_text(MINIMAL.replace("dgia", s) + "horizon = 5\n")
    out = tmp_path / "out"
    monkeypatch.setenv(cli.OUT_ENV, str(out))
    assert cli.main(["matrix", "--configs", str(cfgs), "--seeds", "0-1", "--parallel", "2"]) == 0
    assert len(list(out.glob("*-s[01].csv"))) == 6
    assert len(load_summary_csv((out / "summary.csv").read_text())) == 6
    assert cli.main(["report", "--in", str(out)]) == 0
    text = capsys.readouterr().out
    assert "iud+dgia" in text and (out / "report.csv").exists()

    single = tmp_path / "single"
    assert cli.main(["run", "--config", str(cfgs / "none.cfg"), "--set", "budget=20", "--out", str(single),
                     "--dump-influence", str(tmp_path / "inf")]) == 0
    assert (single / "none-none-s0.csv").exists()


def test_failed_run_exit_code(tmp_path):
    c = tmp_path / "bad.cfg"
    c.write_text("dataset = /no/such/file\nbudget = 1\nstrategy = none\n")
    assert cli.main(["run", "--config", str(c), "--out", str(tmp_path / "o")]) == 1


def test_config_error_exit_code(tmp_path, capsys):
    c = tmp_path / "bad.cfg"
    c.write_text("budget = 1\n")
    assert cli.main(["run", "--config", str(c), "--out", str(tmp_path / "o")]) == 2
    assert "missing" in capsys.readouterr().err
    assert cli.main(["matrix", "--configs", str(tmp_path / "empty")]) == 2
