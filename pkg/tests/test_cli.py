import json
import math

import pytest

from ringcap.cli import ConfigError, RunConfig, run


def write_ring(path, inner, outer):
    path.write_text(json.dumps({"inner": inner, "outer": outer}))
    return str(path)


def disk(r, center=(0.0, 0.0)):
    return {"kind": "disk", "center": list(center), "r": r}


@pytest.fixture
def ann_e(tmp_path):
    return write_ring(tmp_path / "ring_e.json", disk(1.0), disk(math.e))


@pytest.fixture
def ann_4(tmp_path):
    return write_ring(tmp_path / "ring_4.json", disk(1.0), disk(4.0))


def test_oracle_annulus(capsys):
    assert run(["oracle", "annulus", "--r", "1", "--R", "4", "--p", "1.5"]) == 0
    assert float(capsys.readouterr().out.split()[0]) == pytest.approx(7.25519745694, rel=1e-10)


def test_oracle_disk_green(capsys):
    assert run(["oracle", "disk-green", "--R", "1", "--p", "2", "--s", "0.5"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(math.log(2) / (2 * math.pi))


def test_solve_report(ann_e, tmp_path):
    out = tmp_path / "rep.json"
    assert run(["solve", "--domain", ann_e, "--p", "2", "--mesh", "128x32", "--levels", "21",
                "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["cap_energy"] == pytest.approx(2 * math.pi, rel=1e-2)
    cfg = rep["config"]
    assert cfg["mesh"] == [128, 32] and cfg["n_t"] == 21 and cfg["p"] == [2.0]
    assert RunConfig.from_dict({k: v for k, v in cfg.items() if k != "version"}).mesh == (128, 32)


def test_csv_deterministic(ann_4, tmp_path):
    paths = [tmp_path / f"prof{i}.csv" for i in range(2)]
    for path in paths:
        assert run(["solve", "--domain", ann_4, "--p", "1.5", "--mesh", "64x16",
                    "--out", str(tmp_path / "r.json"), "--csv", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_text().splitlines()[0].startswith("t,A,L,dA")


def test_verify_all_on_annulus(ann_4, tmp_path):
    out = tmp_path / "v.json"
    code = run(["verify", "--suite", "all", "--domain", ann_4, "--p", "1.5", "--out", str(out),
                "--csv", str(tmp_path / "v.csv")])
    assert code == 0
    rep = json.loads(out.read_text())
    verdicts = {c["name"]: c["verdict"] for cfg in rep["configs"] for c in cfg["checks"]}
    assert any(n.startswith("green_") for n in verdicts)
    assert set(verdicts.values()) == {"equality-case"}


def test_exit_codes(tmp_path, ann_e):
    assert run(["solve", "--domain", str(tmp_path / "missing.json")]) == 2
    assert run(["solve", "--domain", ann_e, "--p", "3"]) == 2
    assert run(["solve", "--domain", ann_e, "--mesh", "8x2"]) == 2
    assert run(["bogus"]) == 2
    bad = write_ring(tmp_path / "bad.json", disk(3.0), disk(1.0))
    assert run(["solve", "--domain", bad, "--mesh", "64x16"]) == 2


def test_unknown_config_fields_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"command": "solve", "colour": "blue"})
    with pytest.raises(ConfigError):
        RunConfig("solve", n_t=3)
