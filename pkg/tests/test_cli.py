import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fellbench import absorption as ab
from fellbench import io as fio
from fellbench.cli import main
from fellbench.presets import preset_bundle


def run_cli(args, env_seed=None):
    env = dict(os.environ)
    if env_seed is not None:
        env["FB_SEED"] = str(env_seed)
    proc = subprocess.run([sys.executable, "-m", "fellbench.cli", *args],
                          capture_output=True, text=True, env=env)
    return proc


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    code = main(["gen", "symmetric-inverse-monoid", "2", "--out", str(d)])
    assert code == 0
    return d


def test_gen_writes_all_companions(workdir):
    base = workdir / "symmetric-inverse-monoid-2"
    for suffix in (".bundle.json", ".action.json", ".witness.json", ".rep.json"):
        assert (base.parent / (base.name + suffix)).exists()


def test_validate_pass(workdir, capsys):
    path = str(workdir / "symmetric-inverse-monoid-2.bundle.json")
    assert main(["validate", path]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "pass"
    assert report["metrics"]["commutation_defect"] < 1e-9


def test_validate_corrupted_matrix_exits_1(workdir, tmp_path):
    data = fio.load_json(str(workdir / "symmetric-inverse-monoid-2.bundle.json"))
    data["fibers"][1]["basis"][0][0][1] = [0.25, 0.1]
    bad = tmp_path / "broken.bundle.json"
    fio.dump_json(data, str(bad))
    assert main(["validate", str(bad)]) == 1


def test_validate_malformed_exits_2(tmp_path):
    bad = tmp_path / "nonsense.json"
    bad.write_text("{ not json")
    assert main(["validate", str(bad)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_algebras_report(workdir, capsys):
    path = str(workdir / "symmetric-inverse-monoid-2.bundle.json")
    assert main(["algebras", path, "--which", "both"]) == 0
    report = json.loads(capsys.readouterr().out)
    m = report["metrics"]
    assert m["dim_qc"] == 7 and m["dim_cstar_max"] == 7
    assert m["dim_calg"] == 7 and m["dim_cstar_red"] == 7
    assert m["blocks_max"] == [1, 1, 1, 2] == m["blocks_red"]
    assert m["weak_containment"] is True


def test_ap_with_witness_file(workdir, capsys):
    path = str(workdir / "symmetric-inverse-monoid-2.bundle.json")
    wpath = str(workdir / "symmetric-inverse-monoid-2.witness.json")
    assert main(["ap", path, "--witness", wpath]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"]["defect"] <= 1e-9
    assert abs(report["metrics"]["bound"] - 1.0) <= 1e-9


def test_ap_with_synth_action(workdir, capsys):
    path = str(workdir / "symmetric-inverse-monoid-2.bundle.json")
    apath = str(workdir / "symmetric-inverse-monoid-2.action.json")
    assert main(["ap", path, "--synth", apath]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "pass"


def test_ap_bad_section_label_exits_1(workdir, tmp_path):
    path = str(workdir / "symmetric-inverse-monoid-2.bundle.json")
    data = fio.load_json(str(workdir / "symmetric-inverse-monoid-2.witness.json"))
    # move a diagonal value onto an off-diagonal slot: no longer in F_{ss*}
    sec = data["sections"][0]
    mat = sec[0]["matrix"]
    mat[0][1] = [0.7, 0.0]
    bad = tmp_path / "bad.witness.json"
    fio.dump_json(data, str(bad))
    assert main(["ap", path, "--witness", str(bad)]) == 1


def test_absorb_carrier_rep(workdir, capsys):
    path = str(workdir / "symmetric-inverse-monoid-2.bundle.json")
    rpath = str(workdir / "symmetric-inverse-monoid-2.rep.json")
    assert main(["absorb", path, rpath]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"]["pi1_faithful"] is True
    assert report["metrics"]["generated_dim"] == 7


def test_absorb_degenerate_rep_exits_1(workdir, tmp_path):
    path = str(workdir / "symmetric-inverse-monoid-2.bundle.json")
    bundle = fio.bundle_from_dict(fio.load_json(path))
    rep = ab.zero_representation(bundle, 2)
    rpath = tmp_path / "zero.rep.json"
    fio.dump_json(fio.representation_to_dict(rep), str(rpath))
    assert main(["absorb", path, str(rpath)]) == 1


def test_gen_presets_validate(tmp_path):
    cases = [
        (["gen", "trivial-group", "1", "--out", str(tmp_path)], "trivial-group-1"),
        (["gen", "pair-groupoid", "3", "--out", str(tmp_path)], "pair-groupoid-3"),
        (["gen", "group-zero-line", "2", "2", "--out", str(tmp_path)], "group-zero-line-2-2"),
        (["gen", "random", "7", "10", "5", "--out", str(tmp_path)], "random-5"),
    ]
    for args, name in cases:
        assert main(args) == 0
        assert main(["validate", str(tmp_path / f"{name}.bundle.json")]) == 0


def test_gen_too_large_rejected(tmp_path):
    code = main(["gen", "symmetric-inverse-monoid", "6", "--out", str(tmp_path)])
    assert code == 1


def test_report_determinism(workdir):
    path = str(workdir / "symmetric-inverse-monoid-2.bundle.json")
    a = run_cli(["algebras", path], env_seed=0)
    b = run_cli(["algebras", path], env_seed=0)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_exit_code_contract_pair(workdir):
    # wrong file kind for the subcommand is an input error
    apath = str(workdir / "symmetric-inverse-monoid-2.action.json")
    proc = run_cli(["validate", apath])
    assert proc.returncode == 2
