import copy
import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from contagion.cli import main
from contagion.config import ConfigError, load_config, parse_config, schema
from contagion.env import Explicit, Exponential, PowerLaw

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = {
    "d": 1,
    "initial": [{"x": [0.0], "w": 1.0, "u": 1.0}],
    "regime": {"type": "power_law", "xi": 1.0, "alpha": 0.0},
    "displacement": {"laws": [{"type": "discrete", "support": [[-1.0], [1.0]], "probs": [0.5, 0.5]}]},
    "steps": 3,
    "replicates": 20000,
    "seed": 3,
}


def doc(**changes):
    d = copy.deepcopy(BASE)
    d.update(changes)
    return d


def write(tmp_path, body, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(body))
    return str(p)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert isinstance(cfg.regime, (PowerLaw, Exponential, Explicit))
    assert len(cfg.environment(n_steps=5)) == 5


def test_schema_is_draft_2020_12():
    assert "2020-12" in schema()["$schema"]


def test_generators_and_explicit_regime():
    cfg = parse_config(doc(regime={"type": "exponential", "xi": {"type": "iid", "values": [1, 2], "probs": [0.5, 0.5]},
                                   "tau": {"type": "markov", "switch": [0.1, 0.2], "emit": [0.3, 1.5]}}))
    assert cfg.regime_tag == "exponential"
    steps = [{"w": [1.0, 2.0], "u": [1.0, 1.0]}, {"w": [], "u": []}, {"w": [0.5], "u": [0.0]}]
    cfg = parse_config(doc(regime={"type": "explicit", "steps": steps}))
    envs = cfg.environment()
    assert envs.k.tolist()[1:] == [2, 0, 1]


@pytest.mark.parametrize("change, where", [
    ({"displacement": None}, "$"),
    ({"initial": [{"x": [0.0, 1.0]}]}, "$.initial[0].x"),
    ({"displacement": {"laws": [{"type": "discrete", "support": [[0.0], [1.0]], "probs": [0.5, 0.6]}]}},
     "$.displacement.laws[0]"),
    ({"displacement": {"laws": [{"type": "gaussian", "mean": [0.0, 0.0], "cov": [[1, 0], [0, 1]]}]}},
     "$.displacement.laws[0]"),
    ({"regime": {"type": "explicit", "steps": [{"w": [1.0], "u": [1.0]}]}}, "$.regime.steps"),
    ({"regime": {"type": "explicit", "steps": [{"w": [1.0], "u": []}] * 3}}, "$.regime.steps[0]"),
    ({"regime": {"type": "exponential"}, "resource": "weight"}, "$.resource"),
    ({"regime": {"type": "power_law", "alpha": -2.0}}, "$.regime.alpha"),
    ({"steps": 0}, "$.steps"),
])
def test_config_errors_name_the_entry(change, where):
    body = doc(**change)
    body = {k: v for k, v in body.items() if v is not None}
    with pytest.raises(ConfigError) as err:
        parse_config(body)
    assert err.value.where == where


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_simulate_is_reproducible(tmp_path, capsys):
    cfg = str(CONFIGS / "minimal.json")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    a = (tmp_path / "a" / "points_r0000.csv").read_text()
    assert a == (tmp_path / "b" / "points_r0000.csv").read_text()
    assert len(a.splitlines()) == 12
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["runs"][0]["points"] == 11 and summary["seed"] == 7
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "8"]) == 0
    assert (tmp_path / "c" / "points_r0000.csv").read_text() != a


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"


def test_invalid_config_exits_2(tmp_path, capsys):
    body = doc()
    del body["displacement"]
    assert main(["simulate", "--config", write(tmp_path, body), "--out", str(tmp_path)]) == 2
    assert "displacement" in json.loads(capsys.readouterr().err)["message"]


def test_wrong_theorem_exits_2(tmp_path, capsys):
    assert main(["verify", "--theorem", "2", "--config", str(CONFIGS / "exponential.json"),
                 "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["where"] == "$.regime"


def test_oracle_command(tmp_path, capsys):
    body = doc(options={"tv_tol": 0.02})
    assert main(["oracle", "--config", write(tmp_path, body), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "oracle_law.csv").open()))
    assert rows[0] == ["x_0", "probability"] and len(rows) == 8
    report = json.loads((tmp_path / "oracle_report.json").read_text())
    assert report["passed"] and report["command"] == "oracle"
    assert capsys.readouterr().out.count("[PASS]") == 2


def test_oracle_rejects_continuous_laws(tmp_path):
    assert main(["oracle", "--config", str(CONFIGS / "minimal.json"), "--out", str(tmp_path)]) == 2


def test_identity_command(tmp_path):
    body = doc(steps=20, replicates=3000,
               displacement={"laws": [{"type": "gaussian", "mean": [1.0], "cov": [[1.0]]}]})
    assert main(["identity", "--config", write(tmp_path, body), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "identity_report.json").read_text())["passed"]


def test_verify_summable(tmp_path, capsys):
    assert main(["verify", "--theorem", "1", "--config", str(CONFIGS / "summable.json"), "--out", str(tmp_path)]) == 0
    assert "[FAIL]" not in capsys.readouterr().out


def test_bench_writes_table(tmp_path):
    body = doc(options={"sizes": [1000, 10000], "bench_steps": 10000, "draws": 20000})
    code = main(["bench", "--config", write(tmp_path, body), "--out", str(tmp_path)])
    assert code in (0, 1)
    rows = list(csv.reader((tmp_path / "bench.csv").open()))
    assert rows[0] == ["N", "reads_per_draw", "ns_per_draw"] and [r[0] for r in rows[1:]] == ["1000", "10000"]


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "contagion", "simulate", "--config", str(CONFIGS / "minimal.json"),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and (tmp_path / "summary.json").exists()
