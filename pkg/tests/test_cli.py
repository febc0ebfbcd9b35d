"""Command-line interface: commands, exit codes, report formats."""

import json
import subprocess
import sys

import pytest

from corpus import SPEC_S3SUM, central_product_q8, spec_product, spec_symmetric
from groupvna.cli import run


@pytest.fixture()
def specs(tmp_path):
    paths = {}
    docs = {
        "s3": spec_symmetric(3),
        "s5": spec_symmetric(5),
        "q8": {"family": "quaternion8"},
        "s3sum": SPEC_S3SUM,
        "s3xs3": spec_product(spec_symmetric(3), spec_symmetric(3)),
        "dinf": {"family": "dihedral_infinite"},
        "free2": {"family": "free", "rank": 2},
    }
    for name, doc in docs.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    return paths


def _run_json(capsys, argv):
    code = run(argv + ["--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_classify_command(specs, capsys):
    code, report = _run_json(capsys, ["classify", "--spec", specs["s3sum"],
                                      "--k", "2", "--epsilon", "0.05"])
    assert code == 0
    cert = report["results"]["certificate"]
    assert cert["verdict"] == "not_type_I"
    assert cert["growth"]["achieved_measure"] == {"num": 20, "den": 27}
    assert report["results"]["replay"]["passed"]


def test_classify_byte_identical_runs(specs, capsys):
    outputs = []
    for _ in range(2):
        code = run(["classify", "--spec", specs["s3sum"], "--seed", "0", "--format", "json"])
        assert code == 0
        outputs.append(json.loads(capsys.readouterr().out))
    certs = [json.dumps(o["results"]["certificate"], sort_keys=True) for o in outputs]
    assert certs[0] == certs[1]
    for o in outputs:
        del o["wall_time_ms"]
    assert json.dumps(outputs[0], sort_keys=True) == json.dumps(outputs[1], sort_keys=True)


def test_classify_inconclusive_exit_code(specs):
    assert run(["classify", "--spec", specs["free2"]]) == 3


def test_spectrum_command(specs, capsys):
    code, report = _run_json(capsys, ["spectrum", "--spec", specs["s3"]])
    assert code == 0
    atoms = report["results"]["spectrum"]["atoms"]
    assert [(a["dim"], a["measure_num"], a["measure_den"]) for a in atoms] == [
        (1, 1, 6), (1, 1, 6), (2, 2, 3)]


def test_spectrum_requires_finite(specs, capsys):
    assert run(["spectrum", "--spec", specs["dinf"]]) == 2
    assert "error" in capsys.readouterr().err


def test_chartab_command(specs, capsys):
    code, report = _run_json(capsys, ["chartab", "--spec", specs["s3"]])
    assert code == 0
    table = report["results"]["table"]
    assert [r["degree"] for r in table["rows"]] == [1, 1, 2]
    assert report["results"]["orthogonality"]["max_row_residual"] == 0.0


def test_lemma6_command(specs, capsys):
    code, report = _run_json(capsys, ["lemma6", "--spec", specs["q8"]])
    assert code == 0
    assert report["results"]["nonabelian_measure"] == {"num": 1, "den": 2}
    assert report["results"]["bound_holds"]


def test_lemma7_command_product_default(specs, capsys):
    code, report = _run_json(capsys, ["lemma7", "--spec", specs["s3xs3"]])
    assert code == 0
    atoms = report["results"]["lemma7"]["supported_atoms"]
    assert atoms and all(a["dim"] == 4 for a in atoms)


def test_lemma7_command_explicit_generators(tmp_path, capsys):
    spec, h0, h1 = central_product_q8()
    path = tmp_path / "q8oq8.json"
    path.write_text(json.dumps(spec))
    code, report = _run_json(capsys, [
        "lemma7", "--spec", str(path),
        "--h0", json.dumps(h0), "--h1", json.dumps(h1),
    ])
    assert code == 0
    assert [a["dim"] for a in report["results"]["lemma7"]["supported_atoms"]] == [4]


def test_lemma7_needs_subgroups_for_non_product(specs, capsys):
    assert run(["lemma7", "--spec", specs["s3"]]) == 2


def test_growth_command(specs, capsys):
    code, report = _run_json(capsys, ["growth", "--spec", specs["s3sum"], "--k", "2"])
    assert code == 0
    g = report["results"]["growth"]
    assert g["levels_required"] == 3
    assert g["achieved_measure"] == {"num": 20, "den": 27}


def test_growth_no_witness_is_inconclusive(specs):
    assert run(["growth", "--spec", specs["s3sum"], "--k", "3", "--levels", "2"]) == 3


def test_lemma10_command(specs, capsys):
    code, report = _run_json(capsys, ["lemma10", "--spec", specs["s3sum"], "--k", "5"])
    assert code == 0
    w = report["results"]["witness"]
    assert w["complete"] and len(w["levels"]) == 5
    assert w["checks"]["pairwise_commuting"]


def test_fc_command(specs, capsys):
    code, report = _run_json(capsys, ["fc", "--spec", specs["dinf"], "--count", "10",
                                      "--class-budget", "500"])
    assert code == 0
    verdicts = report["results"]["verdicts"]
    assert len(verdicts) == 10
    kinds = {v["describe"]: v["verdict"] for v in verdicts}
    assert kinds["t^1"] == "fc" and kinds["s"] == "not_fc_evidence"


def test_icc_command(specs, capsys):
    code, report = _run_json(capsys, ["icc-check", "--spec", specs["free2"],
                                      "--count", "53", "--class-budget", "300"])
    assert code == 0
    assert report["results"]["icc"]["gram_is_identity"]


def test_icc_command_fails_on_fc_contradiction(specs, capsys):
    assert run(["icc-check", "--spec", specs["dinf"], "--class-budget", "200"]) == 1
    assert "not icc" in capsys.readouterr().err


def test_usage_errors(specs, capsys):
    assert run(["bogus", "--spec", specs["s3"]]) == 2
    assert run(["lemma6", "--spec", specs["s3"], "--bogus-flag"]) == 2
    assert run(["lemma6", "--spec", "/nonexistent/path.json"]) == 2
    capsys.readouterr()


def test_malformed_spec_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"family": "symmetric"}')
    assert run(["spectrum", "--spec", str(bad)]) == 2
    assert '"n"' in capsys.readouterr().err


def test_json_report_round_trips(specs, capsys):
    code, report = _run_json(capsys, ["lemma6", "--spec", specs["q8"]])
    assert code == 0
    assert json.loads(json.dumps(report)) == report


def test_text_and_json_numeric_parity(specs, capsys):
    code = run(["growth", "--spec", specs["s3sum"], "--k", "2"])
    text = capsys.readouterr().out
    assert code == 0
    code, report = _run_json(capsys, ["growth", "--spec", specs["s3sum"], "--k", "2"])
    assert code == 0
    g = report["results"]["growth"]
    assert f"{g['achieved_measure']['num']}/{g['achieved_measure']['den']}" in text
    assert f"levels_required: {g['levels_required']}" in text
    assert str(g["dim_threshold"]) in text


def test_cross_process_certificate_determinism(specs):
    import os
    outs = []
    for hash_seed in ("1", "20394"):
        proc = subprocess.run(
            [sys.executable, "-m", "groupvna", "classify", "--spec", specs["s3sum"],
             "--format", "json"],
            capture_output=True, text=True, timeout=180,
            env={**os.environ, "PYTHONHASHSEED": hash_seed},
        )
        assert proc.returncode == 0
        outs.append(json.dumps(json.loads(proc.stdout)["results"]["certificate"],
                               sort_keys=True))
    assert outs[0] == outs[1]


def test_console_entry_point(specs):
    proc = subprocess.run(
        [sys.executable, "-m", "groupvna.cli", "lemma6", "--spec", specs["q8"],
         "--format", "json"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    report = json.loads(proc.stdout)
    assert report["results"]["bound_holds"]
