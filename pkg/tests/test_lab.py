import csv
import io
import json
import math

import pytest

from nphilab.cli import main
from nphilab.lab import (
    SUITES,
    ConfigError,
    LabConfig,
    VerificationReport,
    config_to_dict,
    emit,
    report_csv,
    report_json,
    run,
)

AFF = {"type": "taylor", "coeffs": [0.8, 0.4]}
W = {"type": "taylor", "coeffs": [0, 1]}


def cfg(symbol=AFF, **kw):
    d = {"symbol": symbol, "truncation": {"I": 16, "J": 16, "ladder": [16, 24, 32]}}
    d.update(kw)
    return d


def by_name(report):
    return {r.name: r for r in report.records}


# --- config validation ----------------------------------------------------------


def test_config_defaults():
    c = LabConfig.from_dict({"symbol": AFF})
    assert (c.I, c.J, c.ladder, c.suites) == (40, 40, (20, 40, 80), ())
    assert c.effective_guard == 3


def test_config_errors_list_every_field():
    bad = {"symbol": {"type": "taylor", "coeffs": [0, 0]}, "truncation": {"I": -1, "ladder": [5, 3]},
           "tolerances": {"norm": 0}, "suites": ["nope"], "mobius_alpha": 2}
    with pytest.raises(ConfigError) as exc:
        LabConfig.from_dict(bad)
    assert set(exc.value.fields) == {"symbol", "truncation.I", "truncation.ladder", "tolerances.norm",
                                     "suites", "mobius_alpha"}


def test_config_missing_symbol_and_low_guard():
    with pytest.raises(ConfigError) as exc:
        LabConfig.from_dict({})
    assert "symbol" in exc.value.fields
    with pytest.raises(ConfigError) as exc:
        LabConfig.from_dict(cfg(truncation={"guard": 1}))
    assert "truncation.guard" in exc.value.fields


def test_boundary_path_shorthand():
    c = LabConfig.from_dict(cfg(witnesses={"boundary_path": {"theta": 0, "count": 3}}))
    assert c.boundary_path == pytest.approx((0.5, 0.75, 0.875))


def test_config_roundtrip():
    c = LabConfig.from_dict(cfg(suites=["norms"], mobius_alpha=[0.1, 0.2], witnesses={"w0_list": [0, [0.1, 0.1]]}))
    assert LabConfig.from_dict(config_to_dict(c)) == c


# --- runs -------------------------------------------------------------------------


def test_empty_suites_give_empty_report():
    rep = run(cfg())
    assert rep.records == [] and not rep.has_failures


def test_bergman_suite_records():
    rep = run(cfg(suites=["bergman"]))
    recs = by_name(rep)
    assert recs["hs_bergman"].status == "pass"
    assert recs["hs_bergman"].expected == pytest.approx(math.pi**2 / 3 - 3)
    assert recs["trace_bergman"].status == "pass"
    assert all(r.paper_anchor for r in rep.records)


def test_identities_exact_path_for_w():
    recs = by_name(run(cfg(symbol=W, suites=["identities"])))
    assert recs["exact_r1"].status == "pass" and recs["exact_r2"].status == "pass"


def test_non_inner_symbol_marks_inner_suites_untested():
    rep = run(cfg(suites=["inner", "mobius", "example1"]))
    assert rep.records and all(r.status == "untested" for r in rep.records)
    assert all(r.note for r in rep.records)


def test_example1_suite_passes_for_linear_symbol():
    rep = run(cfg(symbol={"type": "taylor", "coeffs": [0, 2]}, suites=["example1"]))
    assert {r.status for r in rep.records} == {"pass"}


def test_report_roundtrip_and_determinism():
    c = cfg(suites=["bergman", "norms", "compactness"])
    a, b = run(c), run(c)
    assert report_json(a) == report_json(b)
    back = VerificationReport.from_dict(json.loads(report_json(a)))
    assert back.records == a.records


def test_report_csv_columns():
    rep = run(cfg(suites=["bergman"]))
    rows = list(csv.DictReader(io.StringIO(report_csv(rep))))
    assert len(rows) == len(rep.records)
    assert list(rows[0]) == ["suite", "name", "paper_anchor", "computed_re", "computed_im", "expected_re",
                             "expected_im", "abs_err", "tolerance", "status", "note"]


def test_thread_cap_does_not_change_output(monkeypatch):
    c = cfg(suites=["bergman", "compactness"])
    monkeypatch.setenv("NPHILAB_THREADS", "1")
    a = report_json(run(c))
    monkeypatch.setenv("NPHILAB_THREADS", "3")
    assert report_json(run(c)) == a


def test_small_ladder_becomes_untested_record():
    recs = run(cfg(suites=["compactness"], truncation={"ladder": [4, 8, 16]})).records
    assert [(r.name, r.status) for r in recs] == [("compactness_precondition", "untested")]


def test_emit_rejects_unknown_format():
    with pytest.raises(ValueError):
        emit(VerificationReport(), "xml")


# --- CLI --------------------------------------------------------------------------


def write(tmp_path, obj, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_cli_json_to_stdout(tmp_path, capsys):
    path = write(tmp_path, cfg(suites=["bergman"]))
    assert main(["run", "--config", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert {r["name"] for r in out["records"]} == {"trace_bergman", "hs_bergman"}


def test_cli_suite_override_and_csv_file(tmp_path):
    path = write(tmp_path, cfg(suites=["norms"]))
    out = tmp_path / "r.csv"
    assert main(["run", "--config", path, "--format", "csv", "--out", str(out), "--suite", "bergman"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert {r["suite"] for r in rows} == {"bergman"}


def test_cli_invalid_config_exit_code(tmp_path, capsys):
    path = write(tmp_path, {"symbol": {"type": "taylor", "coeffs": []}})
    assert main(["run", "--config", path]) == 2
    err = json.loads(capsys.readouterr().err)
    assert "symbol" in err["fields"]
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_unwritable_output(tmp_path):
    path = write(tmp_path, cfg(suites=["bergman"]))
    assert main(["run", "--config", path, "--out", str(tmp_path / "no" / "dir" / "r.json")]) == 2


def test_cli_exit_one_on_failure(tmp_path):
    # ||S_z|| = 1 for inner symbols is approached slowly; (30, 30) is still 0.025 short
    path = write(tmp_path, {"symbol": {"type": "blaschke", "zeros": [0, 0.5]},
                            "truncation": {"I": 30, "J": 30}, "suites": ["norms"]})
    assert main(["run", "--config", path, "--out", str(tmp_path / "r.json")]) == 1


def test_cli_writes_artifacts(tmp_path):
    plots = tmp_path / "plots"
    path = write(tmp_path, cfg(suites=["compactness"], plot_dir=str(plots)))
    main(["run", "--config", path, "--out", str(tmp_path / "r.json")])
    assert (plots / "svdecay.csv").read_text().startswith("trunc_size,rank,sigma")


def test_cli_rejects_unknown_suite(tmp_path):
    path = write(tmp_path, cfg())
    with pytest.raises(SystemExit):
        main(["run", "--config", path, "--suite", "bogus"])
    assert "bergman" in SUITES
