"""Reproducible experiment runner: JSON config in, CSV out.

Every run derives all randomness from one master seed through fixed stream
offsets, so a (config, seed) pair maps to byte-identical CSV output no matter
how many workers execute it. Each row carries the seed and a hash of the
resolved configuration for exact replay.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .engine import (
    EstimatorConfig,
    GaussianStateSpec,
    MitigationFailure,
    SlaterSpec,
    calibrate,
    dense_gamma_tilde,
    estimate_gaussian_overlap,
    estimate_gaussian_overlap_unmitigated,
    estimate_majorana,
    estimate_slater_overlap,
    estimate_unmitigated,
    general_round_values,
    ideal_f2k,
    majorana_round_values,
    gaussian_round_coeffs,
    slater_observable,
    slater_register_size,
    slater_register_state,
)
from .noise import (
    Depolarizing,
    GaussianUnitary,
    GenAmpDamping,
    NoiseModel,
    Noiseless,
    XRotation,
    fidelity_table,
    noise_from_config,
)
from .rotations import (
    RotationQ,
    SeededRng,
    sample_haar_orthogonal,
    sample_signed_permutation,
)
from .simulator import GROUPS, random_pure_state, run_shadow_rounds
from .theory import exact_f2k_vector, fidelity_vector, plan_samples

TASKS = ("calibrate", "majorana", "gaussian-overlap", "slater", "theory-table", "plan")

CSV_COLUMNS = [
    "panel",
    "task",
    "x_index",
    "noise_label",
    "noise_strength",
    "sample_count",
    "estimator",
    "component",
    "repetition",
    "value",
    "std_error",
    "std_error_within",
    "rounds",
    "seed",
    "config_hash",
    "flag",
]

# stream-offset layout: every repetition owns a disjoint block of round indices
_CAL_BLOCK = 10_000_000_000
_EST_BLOCK = 20_000_000_000
_CS_BLOCK = 30_000_000_000
_REP_STRIDE = 1_000_000
_STATE_STREAM = 1
_Q1_STREAM = 2
_GSPEC_STREAM = 3
_SLATER_STREAM = 4


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    n: int
    noise: NoiseModel
    group: str = "signed-perm"
    master_seed: int = 0
    repetitions: int = 1
    n_e: int = 4000
    k_e: int = 10
    n_c: int = 4000
    k_c: int = 20
    cs_n_e: int | None = None
    majorana_indices: tuple[int, ...] = (1, 2)
    q1_seed: int = 1
    state_seed: int = 2
    gaussian_mu: tuple[float, ...] | None = None
    gaussian_q_seed: int = 3
    slater_tau: int = 1
    slater_u_seed: int = 4
    eps_e: float = 0.1
    delta_e: float = 0.05
    eps_c: float = 0.1
    delta_c: float = 0.05
    plan_m: int = 1
    plan_k: int = 1
    round_offset: int = 0
    out_dir: str = "results"

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(self.n_e, self.k_e, self.n_c, self.k_c)

    def device_qubits(self) -> int:
        """Register the noisy device acts on (extended for the slater task)."""
        if self.task == "slater":
            return slater_register_size(self.n, self.slater_tau)
        return self.n

    def resolved(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "noise"}
        d["noise"] = self.noise.to_config()
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _require(cfg: dict, key: str, types, where: str):
    if key not in cfg:
        raise ConfigError(f"config error at $.{where}{key}: missing required field")
    val = cfg[key]
    if not isinstance(val, types):
        raise ConfigError(
            f"config error at $.{where}{key}: expected {types}, got {type(val).__name__}"
        )
    return val


def config_from_dict(cfg: dict) -> ExperimentConfig:
    task = _require(cfg, "task", str, "")
    if task not in TASKS:
        raise ConfigError(f"config error at $.task: {task!r} is not one of {TASKS}")
    n = _require(cfg, "n", int, "")
    if not 1 <= n <= 6:
        raise ConfigError("config error at $.n: mode count must be in [1, 6]")
    noise_cfg = _require(cfg, "noise", dict, "")
    try:
        noise = noise_from_config(noise_cfg)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"config error at $.noise: {exc}") from exc

    kwargs: dict = {"task": task, "n": n, "noise": noise}
    samples = cfg.get("samples", {})
    if not isinstance(samples, dict):
        raise ConfigError("config error at $.samples: expected an object")
    for key in ("n_e", "k_e", "n_c", "k_c"):
        if key in samples:
            val = _require(samples, key, int, "samples.")
            if val < 1:
                raise ConfigError(f"config error at $.samples.{key}: must be >= 1")
            kwargs[key] = val
    if "cs_n_e" in samples:
        kwargs["cs_n_e"] = _require(samples, "cs_n_e", int, "samples.")

    simple = {
        "group": str,
        "master_seed": int,
        "repetitions": int,
        "q1_seed": int,
        "state_seed": int,
        "gaussian_q_seed": int,
        "slater_tau": int,
        "slater_u_seed": int,
        "eps_e": (int, float),
        "delta_e": (int, float),
        "eps_c": (int, float),
        "delta_c": (int, float),
        "plan_m": int,
        "plan_k": int,
        "out_dir": str,
    }
    for key, types in simple.items():
        if key in cfg:
            kwargs[key] = _require(cfg, key, types, "")
    if kwargs.get("group", "signed-perm") not in GROUPS:
        raise ConfigError(f"config error at $.group: must be one of {GROUPS}")
    if kwargs.get("repetitions", 1) < 1:
        raise ConfigError("config error at $.repetitions: must be >= 1")
    if "S" in cfg:
        S = cfg["S"]
        if not isinstance(S, list) or not all(isinstance(s, int) for s in S):
            raise ConfigError("config error at $.S: expected a list of integers")
        kwargs["majorana_indices"] = tuple(S)
    if "gaussian_mu" in cfg:
        mu = cfg["gaussian_mu"]
        if not isinstance(mu, list) or not all(isinstance(m, (int, float)) for m in mu):
            raise ConfigError("config error at $.gaussian_mu: expected a list of numbers")
        kwargs["gaussian_mu"] = tuple(float(m) for m in mu)
    config = ExperimentConfig(**kwargs)
    required_n = config.device_qubits()
    if noise.modes is not None and noise.modes != required_n:
        raise ConfigError(
            f"config error at $.noise: channel is built for {noise.modes} qubits "
            f"but the device register has {required_n}"
        )
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config error: cannot read {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config error at {path}:{exc.lineno}:{exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config error: top level must be a JSON object")
    return config_from_dict(cfg)


def _fmt(value) -> str:
    if isinstance(value, float):
        if np.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


@dataclass
class _Row:
    panel: str
    task: str
    x_index: int
    noise_label: str
    noise_strength: float
    sample_count: int
    estimator: str
    component: str
    repetition: int
    value: float
    std_error: float
    std_error_within: float
    rounds: int
    seed: int
    config_hash: str
    flag: str = ""


def _write_csv(path: Path, rows: list[_Row]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return path


def _spread(values: list[float]) -> float:
    v = np.asarray(values, dtype=float)
    if len(v) <= 1:
        return 0.0
    return float(np.sqrt(np.mean((v - v.mean()) ** 2)))


def _attach_spread(rows: list[_Row]) -> None:
    groups: dict[tuple, list[_Row]] = {}
    for r in rows:
        if r.estimator == "exact" or r.flag:
            continue
        groups.setdefault(
            (r.panel, r.x_index, r.estimator, r.component), []
        ).append(r)
    for grp in groups.values():
        se = _spread([r.value for r in grp])
        for r in grp:
            r.std_error = se


def _rep_estimates(config: ExperimentConfig, rep: int):
    """One repetition of the config's estimation task; returns row fragments."""
    seed = config.master_seed
    n = config.n
    model = config.noise
    ec = config.estimator_config()
    base = rep * _REP_STRIDE + config.round_offset
    out = []

    if config.task == "calibrate":
        cal = calibrate(model, n, ec, config.group, SeededRng(seed, _CAL_BLOCK + base))
        for k in range(n + 1):
            flag = "mitigation-failure" if k in cal.failed else ""
            out.append(
                ("mitigated", "re", k, float(cal.f_hat[k]), float(cal.std_error[k]),
                 cal.rounds_used, flag)
            )
        return out

    if config.task == "majorana":
        S = config.majorana_indices
        k = len(S) // 2
        Q1 = sample_signed_permutation(n, SeededRng(seed, _Q1_STREAM)).rotation()
        rho = random_pure_state(n, SeededRng(seed, _STATE_STREAM))
        cal = calibrate(model, n, ec, config.group, SeededRng(seed, _CAL_BLOCK + base))
        batch = run_shadow_rounds(
            rho, model, config.group, ec.estimation_rounds,
            SeededRng(seed, _EST_BLOCK + base),
        )
        phase = 1j**k
        raw = majorana_round_values(batch, S, Q1)
        within = float((raw / phase).real.std(ddof=1) / np.sqrt(len(raw)))
        try:
            v = estimate_majorana(batch, cal, S, Q1, ec)
            out.append(("mitigated", "re", 0, float((v / phase).real),
                        within / abs(float(cal.f_hat[k])), ec.estimation_rounds, ""))
        except MitigationFailure:
            out.append(("mitigated", "re", 0, float("nan"), 0.0,
                        ec.estimation_rounds, "mitigation-failure"))
        cs_ne = config.cs_n_e or ec.n_e
        cs_ec = EstimatorConfig(cs_ne, ec.k_e, ec.n_c, ec.k_c)
        cs_batch = run_shadow_rounds(
            rho, model, config.group, cs_ec.estimation_rounds,
            SeededRng(seed, _CS_BLOCK + base),
        )
        v_cs = estimate_unmitigated(cs_batch, S, Q1, cs_ec)
        cs_raw = majorana_round_values(cs_batch, S, Q1) / ideal_f2k(n, k)
        cs_within = float((cs_raw / phase).real.std(ddof=1) / np.sqrt(len(cs_raw)))
        out.append(("cs-baseline", "re", 0, float((v_cs / phase).real), cs_within,
                    cs_ec.estimation_rounds, ""))
        return out

    if config.task == "gaussian-overlap":
        rho = random_pure_state(n, SeededRng(seed, _STATE_STREAM))
        gspec = _gaussian_spec(config)
        cal = calibrate(model, n, ec, config.group, SeededRng(seed, _CAL_BLOCK + base))
        batch = run_shadow_rounds(
            rho, model, config.group, ec.estimation_rounds,
            SeededRng(seed, _EST_BLOCK + base),
        )
        coeffs = gaussian_round_coeffs(batch, gspec)
        try:
            v = estimate_gaussian_overlap(batch, cal, gspec, ec)
            inv = np.array([cal.inverse(k) for k in range(n + 1)])
            within = float((coeffs @ inv).real.std(ddof=1) / np.sqrt(len(batch)))
            out.append(("mitigated", "re", 0, v, within, ec.estimation_rounds, ""))
        except MitigationFailure:
            out.append(("mitigated", "re", 0, float("nan"), 0.0,
                        ec.estimation_rounds, "mitigation-failure"))
        cs_ne = config.cs_n_e or ec.n_e
        cs_ec = EstimatorConfig(cs_ne, ec.k_e, ec.n_c, ec.k_c)
        cs_batch = run_shadow_rounds(
            rho, model, config.group, cs_ec.estimation_rounds,
            SeededRng(seed, _CS_BLOCK + base),
        )
        v_cs = estimate_gaussian_overlap_unmitigated(cs_batch, gspec, cs_ec)
        cs_coeffs = gaussian_round_coeffs(cs_batch, gspec)
        inv0 = np.array([1.0 / ideal_f2k(n, k) for k in range(n + 1)])
        cs_within = float((cs_coeffs @ inv0).real.std(ddof=1) / np.sqrt(len(cs_batch)))
        out.append(("cs-baseline", "re", 0, v_cs, cs_within,
                    cs_ec.estimation_rounds, ""))
        return out

    if config.task == "slater":
        psi, sspec = _slater_inputs(config)
        reg = slater_register_size(config.n, sspec.tau)
        rho_ext = slater_register_state(psi, sspec.tau)
        cal = calibrate(model, reg, ec, config.group, SeededRng(seed, _CAL_BLOCK + base))
        batch = run_shadow_rounds(
            rho_ext, model, config.group, ec.estimation_rounds,
            SeededRng(seed, _EST_BLOCK + base),
        )
        H = slater_observable(sspec, config.n)
        per_k = general_round_values(batch, H)
        try:
            v = estimate_slater_overlap(batch, cal, sspec, psi, ec)
            inv = np.array([cal.inverse(k) for k in range(reg + 1)])
            vals = 2.0 * per_k @ inv
            for comp, part in (("re", vals.real), ("im", vals.imag)):
                within = float(part.std(ddof=1) / np.sqrt(len(batch)))
                val = float(v.real) if comp == "re" else float(v.imag)
                out.append((f"mitigated", comp, 0, val, within,
                            ec.estimation_rounds, ""))
        except MitigationFailure:
            for comp in ("re", "im"):
                out.append(("mitigated", comp, 0, float("nan"), 0.0,
                            ec.estimation_rounds, "mitigation-failure"))
        cs_ne = config.cs_n_e or ec.n_e
        cs_ec = EstimatorConfig(cs_ne, ec.k_e, ec.n_c, ec.k_c)
        cs_batch = run_shadow_rounds(
            rho_ext, model, config.group, cs_ec.estimation_rounds,
            SeededRng(seed, _CS_BLOCK + base),
        )
        inv0 = np.array([1.0 / ideal_f2k(reg, k) for k in range(reg + 1)])
        cs_vals = 2.0 * general_round_values(cs_batch, H) @ inv0
        from .engine import median_of_means

        v_cs = median_of_means(cs_vals, cs_ec.n_e, cs_ec.k_e)
        for comp, part in (("re", cs_vals.real), ("im", cs_vals.imag)):
            within = float(part.std(ddof=1) / np.sqrt(len(cs_batch)))
            val = float(v_cs.real) if comp == "re" else float(v_cs.imag)
            out.append(("cs-baseline", comp, 0, val, within,
                        cs_ec.estimation_rounds, ""))
        return out

    raise ConfigError(f"task {config.task!r} has no per-repetition estimates")


def _gaussian_spec(config: ExperimentConfig) -> GaussianStateSpec:
    if config.gaussian_mu is not None:
        mu = config.gaussian_mu
    else:
        gen = SeededRng(config.master_seed, _GSPEC_STREAM).generator()
        mu = tuple(gen.uniform(0.05, 1.0, size=config.n))
    q = sample_haar_orthogonal(config.n, SeededRng(config.master_seed, _GSPEC_STREAM + 100))
    return GaussianStateSpec(mu=mu, q=q)


def _slater_inputs(config: ExperimentConfig):
    gen = SeededRng(config.master_seed, _SLATER_STREAM).generator()
    n = config.n
    v = gen.standard_normal(2**n) + 1j * gen.standard_normal(2**n)
    psi = v / np.linalg.norm(v)
    z = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
    u, _ = np.linalg.qr(z)
    return psi, SlaterSpec(tau=config.slater_tau, u=u)


def _exact_rows(config: ExperimentConfig) -> list[tuple]:
    """(component, x_index, value) triples of the dense reference values."""
    n = config.n
    if config.task == "calibrate":
        exact = exact_f2k_vector(config.noise, n)
        return [("re", k, float(exact[k])) for k in range(n + 1)]
    if config.task == "majorana":
        S = config.majorana_indices
        k = len(S) // 2
        Q1 = sample_signed_permutation(n, SeededRng(config.master_seed, _Q1_STREAM)).rotation()
        rho = random_pure_state(n, SeededRng(config.master_seed, _STATE_STREAM))
        truth = np.trace(dense_gamma_tilde(n, S, Q1) @ rho) / 1j**k
        return [("re", 0, float(truth.real))]
    if config.task == "gaussian-overlap":
        rho = random_pure_state(n, SeededRng(config.master_seed, _STATE_STREAM))
        gspec = _gaussian_spec(config)
        return [("re", 0, float(np.real(np.trace(rho @ gspec.dense()))))]
    if config.task == "slater":
        psi, sspec = _slater_inputs(config)
        truth = complex(np.vdot(psi, sspec.dense_state()))
        return [("re", 0, truth.real), ("im", 0, truth.imag)]
    return []


def run_experiment(
    config: ExperimentConfig,
    out_path: str | Path | None = None,
    jobs: int = 1,
) -> tuple[Path, bool]:
    """Execute one config; returns (csv path, any-mitigation-failure)."""
    chash = config.config_hash()
    out_path = Path(out_path) if out_path else Path(config.out_dir) / f"{config.task}.csv"
    rows: list[_Row] = []
    label = config.noise.label
    strength = config.noise.strength

    def mk(est, comp, x, rep, val, within, rounds, flag=""):
        return _Row(
            panel=config.task, task=config.task, x_index=x, noise_label=label,
            noise_strength=strength, sample_count=config.n_e, estimator=est,
            component=comp, repetition=rep, value=val, std_error=0.0,
            std_error_within=within, rounds=rounds, seed=config.master_seed,
            config_hash=chash, flag=flag,
        )

    if config.task == "theory-table":
        if config.n != 1:
            raise ConfigError("config error at $.n: theory-table needs n = 1")
        f_avg, f_z, b1 = fidelity_table(config.noise, 1)
        for comp, val in (("f_avg", f_avg), ("f_z", f_z), ("b_1", b1)):
            rows.append(mk("exact", comp, 0, -1, val, 0.0, 0))
        return _write_csv(out_path, rows), False

    if config.task == "plan":
        plan = plan_samples(
            config.noise, config.n, config.plan_k, config.plan_m,
            config.eps_e, config.delta_e, config.eps_c, config.delta_c,
        )
        for comp in ("r_e", "n_e", "k_e", "r_c", "n_c", "k_c"):
            rows.append(mk("exact", comp, 0, -1, float(getattr(plan, comp)), 0.0, 0))
        return _write_csv(out_path, rows), False

    reps = range(config.repetitions)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rep_results = list(pool.map(lambda r: _rep_estimates(config, r), reps))
    else:
        rep_results = [_rep_estimates(config, r) for r in reps]

    failed = False
    for rep, frags in zip(reps, rep_results):
        for est, comp, x, val, within, rounds, flag in frags:
            failed = failed or bool(flag)
            rows.append(mk(est, comp, x, rep, val, within, rounds, flag))
    for comp, x, val in _exact_rows(config):
        rows.append(mk("exact", comp, x, -1, val, 0.0, 0))
    _attach_spread(rows)
    return _write_csv(out_path, rows), failed


# ---------------------------------------------------------------------------
# Figure reproduction sweeps

FIGURES = (
    "fig2a", "fig2b", "fig2c", "fig2d",
    "fig2e", "fig2f", "fig2g", "fig2h",
    "supp3", "supp4",
)


def damping_table_draw(n: int, j: int, rng: SeededRng) -> GenAmpDamping:
    """Jump table with p_uv uniform in ([0, 1] + j - 1) / (6 * 2^(n+1))."""
    d = 2**n
    gen = rng.generator()
    T = (gen.random((d, d)) + (j - 1)) / (6.0 * 2 ** (n + 1))
    np.fill_diagonal(T, 0.0)
    return GenAmpDamping(n, table=T)


def invertible_signed_perm_noise(
    n: int, rng: SeededRng, min_fidelity: float = 0.2, max_tries: int = 500
) -> GaussianUnitary:
    """Matchgate noise from the signed-permutation group with every channel
    eigenvalue bounded away from zero (pair-preserving draws, rejected until
    min_k |B_k| clears the floor)."""
    gen = rng.generator()
    for _ in range(max_tries):
        Q = np.zeros((2 * n, 2 * n))
        for j in range(n):
            s1, s2 = 2.0 * gen.integers(0, 2, size=2) - 1.0
            if gen.integers(0, 2):
                Q[2 * j, 2 * j + 1] = s1
                Q[2 * j + 1, 2 * j] = s2
            else:
                Q[2 * j, 2 * j] = s1
                Q[2 * j + 1, 2 * j + 1] = s2
        model = GaussianUnitary(RotationQ(Q))
        if np.abs(model.analytic_B(n)).min() >= min_fidelity:
            return model
    raise RuntimeError("could not draw an invertible signed-permutation noise")


def _x_rotation_theta(j: int) -> float:
    return np.pi / (2.0 * (8 - j))


def _noise_sweep(kind: str, n: int, seed: int) -> list[NoiseModel]:
    if kind == "depolarizing":
        return [Depolarizing(0.05 * j) for j in range(1, 7)]
    if kind == "damping":
        return [damping_table_draw(n, j, SeededRng(seed, 50 + j)) for j in range(1, 7)]
    if kind == "x-rotation":
        return [XRotation((_x_rotation_theta(j),) * n) for j in range(1, 7)]
    if kind == "gaussian-unitary":
        return [
            invertible_signed_perm_noise(n, SeededRng(seed, 60 + j)) for j in range(1, 7)
        ]
    raise ValueError(kind)


def _mitigated_n_e(base: int, model: NoiseModel) -> int:
    p = min(model.strength, 0.95)
    return int(round(base / (1.0 - p)))


def _sample_sweep_counts() -> list[int]:
    return [int(np.floor(900 + 100 * np.exp(j))) for j in range(6)]


def reproduce_figure(
    figure: str,
    out_dir: str | Path = "results",
    master_seed: int = 0,
    scale: float = 1.0,
    jobs: int = 1,
) -> list[Path]:
    """Write the CSV bundle for one figure panel family.

    `scale` multiplies every sample count (floor 1 group of 10 rounds), which
    keeps smoke tests cheap; published panels use scale = 1.
    """
    if figure not in FIGURES:
        raise ConfigError(f"config error at --figure: {figure!r} not in {FIGURES}")
    out_dir = Path(out_dir)

    def scaled(v: int) -> int:
        return max(10, int(round(v * scale)))

    noise_kinds = {
        "fig2a": "depolarizing", "fig2b": "damping", "fig2c": "x-rotation",
        "fig2d": "gaussian-unitary",
        "fig2e": "depolarizing", "fig2f": "damping", "fig2g": "x-rotation",
        "fig2h": "gaussian-unitary",
    }
    n = 4
    paths: list[Path] = []

    if figure in ("fig2a", "fig2b", "fig2c", "fig2d"):
        kind = noise_kinds[figure]
        models = _noise_sweep(kind, n, master_seed)
        rows: list[_Row] = []
        for j, model in enumerate(models, start=1):
            if kind == "gaussian-unitary":
                n_e = scaled(8000)
            else:
                n_e = scaled(_mitigated_n_e(4000, model))
            cfg = ExperimentConfig(
                task="majorana", n=n, noise=model, master_seed=master_seed,
                repetitions=10 if scale >= 1 else 2,
                n_e=n_e, k_e=10, n_c=scaled(4000), k_c=20, cs_n_e=scaled(4000),
                round_offset=j * 50 * _REP_STRIDE,
            )
            rows.extend(_panel_rows(cfg, figure, j, jobs))
        _attach_spread(rows)
        paths.append(_write_csv(out_dir / f"{figure}.csv", rows))
        return paths

    if figure in ("fig2e", "fig2f", "fig2g", "fig2h"):
        kind = noise_kinds[figure]
        sweep = _noise_sweep(kind, n, master_seed)
        fixed = {"fig2e": Depolarizing(0.2), "fig2f": sweep[4],
                 "fig2g": sweep[5], "fig2h": sweep[4]}[figure]
        rows = []
        for j, n_e in enumerate(_sample_sweep_counts()):
            cfg = ExperimentConfig(
                task="majorana", n=n, noise=fixed, master_seed=master_seed,
                repetitions=10 if scale >= 1 else 2,
                n_e=scaled(n_e), k_e=10, n_c=scaled(4000), k_c=20, cs_n_e=scaled(n_e),
                round_offset=j * 50 * _REP_STRIDE,
            )
            rows.extend(_panel_rows(cfg, figure, j, jobs, sample_count=scaled(n_e)))
        _attach_spread(rows)
        paths.append(_write_csv(out_dir / f"{figure}.csv", rows))
        return paths

    # supplementary panels: overlap tasks under the three standard noises
    task = "gaussian-overlap" if figure == "supp3" else "slater"
    base = 4000 if figure == "supp3" else 2000
    n_task = 4 if figure == "supp3" else 3
    noise_n = n_task if figure == "supp3" else slater_register_size(n_task, 1)
    rows = []
    for kind_idx, kind in enumerate(("depolarizing", "damping", "x-rotation")):
        models = _noise_sweep(kind, noise_n, master_seed)
        for j, model in enumerate(models, start=1):
            cfg = ExperimentConfig(
                task=task, n=n_task, noise=model, master_seed=master_seed,
                repetitions=4 if scale >= 1 else 2,
                n_e=scaled(_mitigated_n_e(base, model)), k_e=5,
                n_c=scaled(4000), k_c=20, cs_n_e=scaled(base),
                round_offset=((kind_idx + 1) * 400 + j * 50) * _REP_STRIDE,
            )
            rows.extend(_panel_rows(cfg, figure, j, jobs))
    _attach_spread(rows)
    paths.append(_write_csv(out_dir / f"{figure}.csv", rows))
    return paths


def _panel_rows(
    cfg: ExperimentConfig, panel: str, x_index: int, jobs: int,
    sample_count: int | None = None,
) -> list[_Row]:
    chash = cfg.config_hash()
    label = cfg.noise.label
    strength = cfg.noise.strength
    count = sample_count if sample_count is not None else cfg.n_e
    rows: list[_Row] = []

    reps = range(cfg.repetitions)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rep_results = list(pool.map(lambda r: _rep_estimates(cfg, r), reps))
    else:
        rep_results = [_rep_estimates(cfg, r) for r in reps]
    for rep, frags in zip(reps, rep_results):
        for est, comp, _x, val, within, rounds, flag in frags:
            rows.append(_Row(
                panel=panel, task=cfg.task, x_index=x_index, noise_label=label,
                noise_strength=strength, sample_count=count, estimator=est,
                component=comp, repetition=rep, value=val, std_error=0.0,
                std_error_within=within, rounds=rounds, seed=cfg.master_seed,
                config_hash=chash, flag=flag,
            ))
    for comp, _x, val in _exact_rows(cfg):
        rows.append(_Row(
            panel=panel, task=cfg.task, x_index=x_index, noise_label=label,
            noise_strength=strength, sample_count=count, estimator="exact",
            component=comp, repetition=-1, value=val, std_error=0.0,
            std_error_within=0.0, rounds=0, seed=cfg.master_seed,
            config_hash=chash, flag="",
        ))
    return rows


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mgshadow",
        description="Noise-calibrated matchgate shadow experiments (JSON config in, CSV out).",
    )
    parser.add_argument("--config", help="path to a JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="worker threads over repetitions")
    parser.add_argument("--figure", default=None, choices=FIGURES,
                        help="emit the CSV bundle for one figure panel family")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="sample-count multiplier for quick figure runs")
    args = parser.parse_args(argv)

    try:
        if args.figure:
            out_dir = args.out or "results"
            paths = reproduce_figure(
                args.figure, out_dir, master_seed=args.seed or 0,
                scale=args.scale, jobs=args.jobs,
            )
            for p in paths:
                print(p)
            return 0
        if not args.config:
            parser.error("one of --config or --figure is required")
        config = load_config(args.config)
        if args.seed is not None:
            config = replace(config, master_seed=args.seed)
        if args.out is not None:
            config = replace(config, out_dir=args.out)
        path, failed = run_experiment(config, jobs=args.jobs)
        print(path)
        return 3 if failed else 0
    except MitigationFailure as exc:
        print(exc, file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
