import csv
import json
from pathlib import Path

import numpy as np
import pytest

from mgshadow.cli import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    damping_table_draw,
    invertible_signed_perm_noise,
    load_config,
    main,
    reproduce_figure,
    run_experiment,
)
from mgshadow.noise import Depolarizing, Noiseless
from mgshadow.rotations import SeededRng


def small_config(tmp_path, **overrides):
    cfg = {
        "task": "calibrate",
        "n": 2,
        "group": "orth",
        "noise": {"kind": "depolarizing", "p": 0.2},
        "samples": {"n_c": 300, "k_c": 4, "n_e": 200, "k_e": 4},
        "master_seed": 11,
        "out_dir": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    return cfg


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_config_validation_messages():
    with pytest.raises(ConfigError, match=r"\$\.task"):
        config_from_dict({"task": "nope", "n": 2, "noise": {"kind": "noiseless"}})
    with pytest.raises(ConfigError, match=r"\$\.n"):
        config_from_dict({"task": "calibrate", "noise": {"kind": "noiseless"}})
    with pytest.raises(ConfigError, match=r"\$\.noise"):
        config_from_dict({"task": "calibrate", "n": 2, "noise": {"kind": "bogus"}})
    with pytest.raises(ConfigError, match=r"\$\.samples\.n_c"):
        config_from_dict(
            {"task": "calibrate", "n": 2, "noise": {"kind": "noiseless"},
             "samples": {"n_c": 0}}
        )
    with pytest.raises(ConfigError, match="register has 4"):
        config_from_dict(
            {"task": "slater", "n": 3, "noise": {"kind": "x-rotation", "thetas": [0.1] * 3}}
        )


def test_json_syntax_errors_carry_line_numbers(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "task": "calibrate",\n  oops\n}\n')
    with pytest.raises(ConfigError, match=r"bad\.json:3"):
        load_config(bad)


def test_calibrate_task_writes_estimates_and_exact_rows(tmp_path):
    config = config_from_dict(small_config(tmp_path))
    path, failed = run_experiment(config)
    assert not failed
    rows = read_rows(path)
    assert [r["estimator"] for r in rows].count("exact") == 3
    mitigated = {int(r["x_index"]): float(r["value"]) for r in rows if r["estimator"] == "mitigated"}
    exact = {int(r["x_index"]): float(r["value"]) for r in rows if r["estimator"] == "exact"}
    assert mitigated[0] == 1.0
    for k in (1, 2):
        assert abs(mitigated[k] - exact[k]) < 0.1
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    assert header == CSV_COLUMNS


def test_output_is_byte_identical_and_jobs_invariant(tmp_path):
    config = config_from_dict(small_config(tmp_path, task="majorana", repetitions=3, S=[1, 2]))
    p1, _ = run_experiment(config, out_path=tmp_path / "a.csv")
    p2, _ = run_experiment(config, out_path=tmp_path / "b.csv")
    p3, _ = run_experiment(config, out_path=tmp_path / "c.csv", jobs=3)
    assert p1.read_bytes() == p2.read_bytes() == p3.read_bytes()


def test_rows_carry_seed_and_config_hash(tmp_path):
    config = config_from_dict(small_config(tmp_path))
    path, _ = run_experiment(config)
    rows = read_rows(path)
    assert all(r["seed"] == "11" for r in rows)
    assert len({r["config_hash"] for r in rows}) == 1
    assert rows[0]["config_hash"] == config.config_hash()


def test_majorana_task_emits_all_estimators(tmp_path):
    config = config_from_dict(
        small_config(tmp_path, task="majorana", repetitions=2, S=[1, 2])
    )
    path, failed = run_experiment(config)
    rows = read_rows(path)
    kinds = {r["estimator"] for r in rows}
    assert kinds == {"mitigated", "cs-baseline", "exact"}
    reps = {r["repetition"] for r in rows if r["estimator"] == "mitigated"}
    assert reps == {"0", "1"}
    spread = {r["std_error"] for r in rows if r["estimator"] == "mitigated"}
    assert len(spread) == 1  # cross-repetition spread is shared


def test_mitigation_failure_recorded_as_flag_and_exit_code(tmp_path):
    sigma = (3, 4, 1, 5, 6, 8, 7, 2)
    Q = np.zeros((8, 8))
    for i, t in enumerate(sigma):
        Q[i, t - 1] = 1.0
    cfg = small_config(
        tmp_path,
        task="majorana",
        n=4,
        group="signed-perm",
        noise={"kind": "gaussian-unitary", "q": Q.tolist()},
        S=[1, 2, 3, 4],
    )
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code = main(["--config", str(cfg_path)])
    assert code == 3
    rows = read_rows(Path(cfg["out_dir"]) / "majorana.csv")
    flagged = [r for r in rows if r["flag"] == "mitigation-failure"]
    assert flagged and flagged[0]["value"] == "nan"
    # the unmitigated baseline still reports a number
    assert any(r["estimator"] == "cs-baseline" and r["value"] != "nan" for r in rows)


def test_main_handles_config_errors_with_exit_2(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"task": "calibrate"}))
    assert main(["--config", str(cfg_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_seed_and_out_overrides(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(small_config(tmp_path)))
    out = tmp_path / "override"
    assert main(["--config", str(cfg_path), "--seed", "99", "--out", str(out)]) == 0
    rows = read_rows(out / "calibrate.csv")
    assert rows[0]["seed"] == "99"


def test_theory_table_and_plan_tasks(tmp_path):
    cfg = config_from_dict(
        {"task": "theory-table", "n": 1, "noise": {"kind": "x-rotation", "thetas": [0.5]},
         "out_dir": str(tmp_path)}
    )
    path, _ = run_experiment(cfg)
    rows = {r["component"]: float(r["value"]) for r in read_rows(path)}
    assert rows["f_avg"] == pytest.approx((np.cos(0.5) + 2) / 3, abs=1e-12)
    assert rows["f_z"] == pytest.approx(np.cos(0.25) ** 2, abs=1e-12)
    assert rows["b_1"] == pytest.approx(np.cos(0.5), abs=1e-12)

    cfg = config_from_dict(
        {"task": "plan", "n": 4, "noise": {"kind": "depolarizing", "p": 0.2},
         "plan_k": 1, "plan_m": 16, "out_dir": str(tmp_path)}
    )
    path, _ = run_experiment(cfg)
    vals = {r["component"]: float(r["value"]) for r in read_rows(path)}
    assert vals["r_e"] == vals["n_e"] * vals["k_e"]
    assert vals["r_c"] == vals["n_c"] * vals["k_c"]


def test_gaussian_overlap_and_slater_tasks_run_small(tmp_path):
    cfg = config_from_dict(small_config(
        tmp_path, task="gaussian-overlap", n=2,
        noise={"kind": "noiseless"}, gaussian_mu=[0.8, 0.5],
    ))
    path, failed = run_experiment(cfg)
    assert not failed
    rows = read_rows(path)
    exact = [float(r["value"]) for r in rows if r["estimator"] == "exact"]
    mit = [float(r["value"]) for r in rows if r["estimator"] == "mitigated"]
    assert abs(exact[0] - mit[0]) < 0.2

    cfg = config_from_dict(small_config(
        tmp_path, task="slater", n=2, noise={"kind": "noiseless"}, slater_tau=1,
    ))
    path, failed = run_experiment(cfg)
    rows = read_rows(path)
    comps = {(r["estimator"], r["component"]) for r in rows}
    assert ("mitigated", "re") in comps and ("mitigated", "im") in comps
    assert ("exact", "im") in comps


def test_damping_table_draw_is_valid_and_scaled():
    for j in (1, 6):
        model = damping_table_draw(4, j, SeededRng(1, j))
        T = model.table
        assert T.shape == (16, 16)
        lo, hi = (j - 1) / 192.0, j / 192.0
        off = T[~np.eye(16, dtype=bool)]
        assert off.min() >= lo and off.max() <= hi
        assert (T.sum(axis=1) <= 1).all()


def test_invertible_signed_perm_noise_has_bounded_fidelities():
    model = invertible_signed_perm_noise(4, SeededRng(5))
    B = model.analytic_B(4)
    assert np.abs(B).min() >= 0.2
    M = model.q.entries
    assert set(np.unique(M)) <= {-1.0, 0.0, 1.0}
    assert np.abs(M @ M.T - np.eye(8)).max() == 0.0


def test_reproduce_figure_bundle_smoke(tmp_path):
    paths = reproduce_figure("fig2a", tmp_path, master_seed=3, scale=0.01)
    rows = read_rows(paths[0])
    assert {r["x_index"] for r in rows} == {str(j) for j in range(1, 7)}
    assert {r["estimator"] for r in rows} == {"mitigated", "cs-baseline", "exact"}
    strengths = sorted({float(r["noise_strength"]) for r in rows})
    assert strengths == pytest.approx([0.05 * j for j in range(1, 7)])
    again = reproduce_figure("fig2a", tmp_path / "again", master_seed=3, scale=0.01)
    assert paths[0].read_bytes() == again[0].read_bytes()


def test_reproduce_figure_sample_sweep_counts(tmp_path):
    paths = reproduce_figure("fig2e", tmp_path, master_seed=3, scale=0.01)
    rows = read_rows(paths[0])
    counts = sorted({int(r["sample_count"]) for r in rows})
    want = sorted({max(10, round(0.01 * int(np.floor(900 + 100 * np.exp(j))))) for j in range(6)})
    assert counts == want


def test_unknown_figure_rejected(tmp_path):
    with pytest.raises(ConfigError):
        reproduce_figure("fig9z", tmp_path)
