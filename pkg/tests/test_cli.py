import json

import pytest

from ferrichain import StructureDictionary, load_ground_state
from ferrichain.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, apply_overrides, config_hash, main, resolve, validate

BASE = {
    "lattice": {"n_sites": 8, "pattern": ["1/2", "3/2"], "boundary": "ring"},
    "model": {"J": 1.0, "B": 0.1},
    "solver": {"seed": 0},
}


def write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1))
    return str(path)


def csv_body(path):
    return "".join(l for l in open(path) if not l.startswith("#"))


def test_validate_well_formed():
    assert validate(dict(BASE, study={"kind": "solve"})) == []
    assert validate(json.dumps(BASE), "solve") == []


def test_validate_missing_separations_is_one_diagnostic():
    diags = validate(BASE, "negativity-scan")
    assert len(diags) == 1 and diags[0].key == "study.separations"


def test_validate_odd_alternating_is_one_diagnostic():
    doc = json.loads(json.dumps(BASE))
    doc["lattice"]["n_sites"] = 9
    diags = validate(doc, "solve")
    assert len(diags) == 1 and "even" in diags[0].message


def test_validate_cross_field_and_lines():
    text = '{\n "lattice": {"n_sites": 8},\n "model": {\n  "B": "strong"\n },\n "study": {"kind": "approx-gs"}\n}'
    diags = validate(text, source="x.json")
    keys = {d.key: d for d in diags}
    assert set(keys) == {"model.B", "study.dictionary"}
    assert keys["model.B"].line == 4
    assert str(keys["model.B"]).startswith("x.json:4: model.B:")
    assert validate("{ nope", source="x.json")[0].line == 1
    assert validate(dict(BASE, extra={}), "solve")[0].key == "extra"
    assert validate(BASE, "flying")[0].key == "study.kind"
    assert validate(dict(BASE, study={"kind": "solve"}), "sector-scan")


def test_overrides():
    doc, diags = apply_overrides(BASE, ["model.B=0.25", "solver.method=dense", "study.sites=[0,2]"])
    assert not diags
    assert doc["model"]["B"] == 0.25 and doc["solver"]["method"] == "dense"
    assert doc["study"]["sites"] == [0, 2]
    assert BASE["model"]["B"] == 0.1
    _, diags = apply_overrides(BASE, ["model=3", "novalue"])
    assert len(diags) == 2


def test_config_hash_is_canonical():
    a = resolve(BASE, "solve")
    b = resolve(json.loads(json.dumps(BASE, sort_keys=True)), "solve")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(resolve(BASE, "amplitudes"))
    moved = resolve(dict(BASE, output={"directory": "elsewhere"}), "solve")
    assert config_hash(moved) == config_hash(a)


def test_solve_writes_ground_state(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "solve"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_OK
    gs = load_ground_state(out / "ground_state.csv")
    assert gs.lattice.n_sites == 8 and gs.neel_amplitude > 0
    text = (out / "ground_state.csv").read_text()
    assert "# tool: " in text and "# config_sha256: " in text
    saved = json.loads((out / "config.json").read_text())
    assert saved["study"]["kind"] == "solve" and saved["output"]["directory"] == str(out)
    assert "E0 =" in capsys.readouterr().out


def test_config_errors_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    assert main(["negativity-scan", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "study.separations" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["approx-gs", "--config", cfg, "--set", "study.dictionary=nowhere.json",
                 "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_solver_failure_exit_3(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "fail"
    code = main(["solve", "--config", cfg, "--out", str(out), "--set", "solver.method=lanczos",
                 "--set", "solver.tolerance=1e-30", "--set", "solver.max_restarts=1"])
    assert code == EXIT_SOLVER
    dump = json.loads((out / "solve_report.json").read_text())
    assert dump["report"]["converged"] is False
    assert "residual" in capsys.readouterr().err


@pytest.mark.parametrize("study,extra,name", [
    ("negativity-scan", ["--set", "study.separations=[0,1,2]"], "negativity_scan.csv"),
    ("fidelity-truncation", [], "fidelity_truncation.csv"),
    ("fidelity-distort", ["--set", "study.trials=6"], "fidelity_distort.csv"),
    ("amplitudes", ["--set", "study.K=12"], "amplitudes.csv"),
    ("sector-scan", ["--set", "model.B_grid=[0,1,3]", "--set", "lattice.n_sites=6"], "sector_scan.csv"),
])
def test_reruns_are_byte_identical(tmp_path, study, extra, name):
    cfg = write(tmp_path, BASE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([study, "--config", cfg, "--out", str(a), *extra]) == EXIT_OK
    assert main([study, "--config", cfg, "--out", str(b), *extra]) == EXIT_OK
    assert csv_body(a / name) == csv_body(b / name)
    # the hash ignores the output directory, so headers match too
    assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "config.json").exists()


def test_dictionary_then_approx(tmp_path):
    cfg = write(tmp_path, dict(BASE, lattice={"n_sites": 10, "pattern": ["1/2", "3/2"]}))
    d = tmp_path / "d"
    assert main(["dictionary", "--config", cfg, "--out", str(d)]) == EXIT_OK
    dic = StructureDictionary.load(d / "dictionary.json")
    assert "config_sha256" in dic.provenance and dic.singles
    x = tmp_path / "x"
    assert main(["approx-gs", "--config", cfg, "--out", str(x),
                 "--set", f"study.dictionary={d / 'dictionary.json'}",
                 "--set", "study.compare_exact=true"]) == EXIT_OK
    summary = json.loads((x / "approx_gs_summary.json").read_text())
    assert summary["overlap"] > 0.99 and summary["rdm_fidelity"] > 0.99
    assert summary["provenance"]["tool"].startswith("ferrichain")


def test_study_reads_saved_ground_state(tmp_path):
    cfg = write(tmp_path, BASE)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "s")]) == EXIT_OK
    gs_path = tmp_path / "s" / "ground_state.csv"
    a = tmp_path / "from-file"
    b = tmp_path / "fresh"
    assert main(["fidelity-truncation", "--config", cfg, "--out", str(a),
                 "--set", f"study.ground_state={gs_path}"]) == EXIT_OK
    assert main(["fidelity-truncation", "--config", cfg, "--out", str(b)]) == EXIT_OK
    assert csv_body(a / "fidelity_truncation.csv") == csv_body(b / "fidelity_truncation.csv")


def test_svg_and_thread_env(tmp_path, monkeypatch):
    pytest.importorskip("matplotlib")
    monkeypatch.setenv("FERRICHAIN_THREADS", "1")
    cfg = write(tmp_path, dict(BASE, output={"formats": ["csv", "svg"]}))
    runs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["fidelity-truncation", "--config", cfg, "--out", str(out)]) == EXIT_OK
        runs.append((out / "fidelity_truncation.svg").read_bytes())
    assert runs[0].startswith(b"<?xml")
    assert runs[0] == runs[1]
