"""Paired Monte Carlo experiment over wave-height perturbation levels.

Every trial draws one interference channel, one target angle, one noise
realization and one unit-scale perturbation pattern. All waveform arms and
all ``h_rms`` levels of a trial reuse those draws, so arm comparisons are
paired and perturbations at different levels are nested (same pattern,
different scale).

Random substreams are counter based: the generator for a given trial and
draw kind is ``Philox(SeedSequence(master_seed, spawn_key=(trial_id, tag)))``.
Results therefore depend only on ``(config, trial_id)`` and not on the order
or process in which trials run.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import PERTURBATION_STYLES, REAL, PerturbationModel, perturbed_channel, sample_interference_channel, sample_perturbation
from .estimator import EstimationError, MLGrid, complex_noise, estimate_aoa_index
from .geometry import ArrayGeometry, receive_steering, steering_matrix, transmit_steering
from .nsp import DEFAULT_REL_TOLERANCE, NoNullSpaceError, leakage, null_space_basis, project_waveform, projector
from .waveform import correlation_matrix, generate_orthogonal_bpsk

PERTURBED = "perturbed"
STALE = "stale"
PROJECTION_TARGETS = (PERTURBED, STALE)
THETA_MODES = ("random", "sweep")

ARM_ORIGINAL = "original"
ARM_NSP = "nsp"
ARM_NSP_PERTURBED = "nsp_perturbed"
ARM_STALE = "stale"
ARMS = (ARM_ORIGINAL, ARM_NSP, ARM_NSP_PERTURBED, ARM_STALE)

# substream tags
_TAG_CHANNEL, _TAG_TARGET, _TAG_NOISE, _TAG_PERTURBATION = range(4)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    m_tx: int = 4
    m_rx: int = 4
    n_rx: int = 2
    num_samples: int = 256
    grid_step_deg: float = 0.5
    snr_db: float = 25.0
    h_rms_values: tuple = (1.0, 2.0, 3.0, 4.0)
    num_trials: int = 1000
    master_seed: int = 20141
    perturbation_style: str = REAL
    projection_target: str = PERTURBED
    theta_mode: str = "random"
    theta_max_deg: float = 60.0
    element_spacing: float = 0.5
    path_gain: float = 1.0
    rel_tolerance: float = DEFAULT_REL_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "h_rms_values", tuple(float(h) for h in self.h_rms_values))
        for name in ("m_tx", "m_rx", "n_rx", "num_samples"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.n_rx >= self.m_tx:
            raise ConfigError("n_rx", f"n_rx={self.n_rx} >= m_tx={self.m_tx}: no null space")
        if self.num_trials < 1:
            raise ConfigError("num_trials", "must be >= 1")
        if not self.grid_step_deg > 0:
            raise ConfigError("grid_step_deg", "must be > 0")
        if any(not h >= 0 for h in self.h_rms_values):
            raise ConfigError("h_rms_values", "values must be >= 0")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be a 64-bit unsigned integer")
        if self.perturbation_style not in PERTURBATION_STYLES:
            raise ConfigError("perturbation_style", f"must be one of {PERTURBATION_STYLES}")
        if self.projection_target not in PROJECTION_TARGETS:
            raise ConfigError("projection_target", f"must be one of {PROJECTION_TARGETS}")
        if self.theta_mode not in THETA_MODES:
            raise ConfigError("theta_mode", f"must be one of {THETA_MODES}")
        if not 0 <= self.theta_max_deg <= 90:
            raise ConfigError("theta_max_deg", "must lie in [0, 90]")
        if not self.element_spacing > 0:
            raise ConfigError("element_spacing", "must be > 0")
        if not self.rel_tolerance > 0:
            raise ConfigError("rel_tolerance", "must be > 0")
        try:
            generate_orthogonal_bpsk(self.m_tx, self.num_samples)
        except ValueError as exc:
            raise ConfigError("num_samples", str(exc)) from None

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.m_tx, self.m_rx, self.element_spacing)

    @property
    def grid(self) -> MLGrid:
        return MLGrid(self.grid_step_deg)

    def noise_power(self) -> float:
        """Per-entry noise variance from the per-receive-antenna SNR.

        Signal power is ``|alpha|^2`` times the average per-snapshot transmit
        power of the original waveform, ``M_T / L``.
        """
        tx_power = self.m_tx / self.num_samples
        return abs(self.path_gain) ** 2 * tx_power / 10 ** (self.snr_db / 10)

    def target_degrees(self) -> np.ndarray:
        deg = self.grid.degrees
        return deg[np.abs(deg) <= self.theta_max_deg + 1e-9]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["h_rms_values"] = list(self.h_rms_values)
        return d


@dataclass
class TrialResult:
    """One trial at one perturbation level. Angles in degrees.

    The original and unperturbed-NSP fields repeat across the levels of a
    trial. A failed arm has NaN for its estimate.
    """

    trial_id: int
    h_rms: float
    theta_true: float
    theta_hat_original: float
    theta_hat_nsp: float
    theta_hat_nsp_perturbed: float
    leakage_stale: float
    nullity: int
    nullity_perturbed: int = -1
    leakage_original: float = math.nan
    leakage_nsp: float = math.nan
    leakage_nsp_perturbed: float = math.nan
    errors: tuple = ()

    @property
    def failed(self) -> bool:
        return bool(self.errors)


@dataclass(frozen=True)
class ArmRecord:
    """Flat per-arm row, the unit of ``trials.csv``."""

    trial_id: int
    arm: str
    h_rms: float
    theta_true_deg: float
    theta_hat_deg: float
    leakage: float
    nullity: int
    failed: bool


@dataclass(frozen=True)
class SummaryRow:
    arm: str
    h_rms: float
    rmse_deg: float
    bias_deg: float
    mean_leakage: float
    n_trials: int


@dataclass
class ExperimentSummary:
    rows: list = field(default_factory=list)
    n_failed: dict = field(default_factory=dict)

    def get(self, arm: str, h_rms: float = 0.0) -> SummaryRow:
        for row in self.rows:
            if row.arm == arm and row.h_rms == h_rms:
                return row
        raise KeyError((arm, h_rms))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summary: ExperimentSummary
    trials: list


def substream(master_seed: int, trial_id: int, tag: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial_id), int(tag)))
    return np.random.Generator(np.random.Philox(ss))


def _received(geometry, x, theta, gain, noise):
    a = steering_matrix(receive_steering(geometry, theta), transmit_steering(geometry, theta))
    return gain * (a @ x) + noise


def run_trial(config: ExperimentConfig, trial_id: int) -> list[TrialResult]:
    """Run every arm of one trial; one :class:`TrialResult` per ``h_rms``.

    No-null-space and estimation failures mark the affected arm as failed
    instead of raising.
    """
    geo = config.geometry
    grid = config.grid
    grid_deg = grid.degrees
    seed = config.master_seed
    x = generate_orthogonal_bpsk(config.m_tx, config.num_samples)

    h_i = sample_interference_channel(config.n_rx, config.m_tx, substream(seed, trial_id, _TAG_CHANNEL))

    targets = config.target_degrees()
    if config.theta_mode == "sweep":
        theta_deg = float(targets[trial_id % targets.size])
    else:
        theta_deg = float(targets[substream(seed, trial_id, _TAG_TARGET).integers(targets.size)])
    theta = math.radians(theta_deg)

    noise = complex_noise(
        (config.m_rx, config.num_samples), config.noise_power(), substream(seed, trial_id, _TAG_NOISE)
    )
    unit_model = PerturbationModel(1.0, config.perturbation_style)
    unit_dh = sample_perturbation(config.n_rx, config.m_tx, unit_model, substream(seed, trial_id, _TAG_PERTURBATION))

    def estimate(x_used):
        y = _received(geo, x_used, theta, config.path_gain, noise)
        return float(grid_deg[estimate_aoa_index(y, x_used, correlation_matrix(x_used), grid, geo)])

    errors = []

    def guarded(label, fn, default=math.nan):
        try:
            return fn()
        except (NoNullSpaceError, EstimationError) as exc:
            errors.append(f"{label}: {exc}")
            return default

    theta_orig = guarded(ARM_ORIGINAL, lambda: estimate(x))
    leak_orig = leakage(h_i, x)

    p_i = None
    nullity = 0
    try:
        basis = null_space_basis(h_i, config.rel_tolerance)
        p_i = projector(basis)
        nullity = basis.nullity
    except NoNullSpaceError as exc:
        errors.append(f"{ARM_NSP}: {exc}")
    if p_i is not None:
        x_nsp = project_waveform(p_i, x)
        theta_nsp = guarded(ARM_NSP, lambda: estimate(x_nsp))
        leak_nsp = leakage(h_i, x_nsp)
    else:
        x_nsp = None
        theta_nsp = leak_nsp = math.nan
    base_errors = tuple(errors)

    results = []
    for h in config.h_rms_values:
        errors = list(base_errors)
        h_true = perturbed_channel(h_i, h * unit_dh)
        leak_stale = leakage(h_true, x_nsp) if x_nsp is not None else math.nan
        if config.projection_target == STALE:
            x_pert, nullity_pert = x_nsp, nullity
        elif h == 0:
            # zero perturbation: reuse the unperturbed projection bit for bit
            x_pert, nullity_pert = x_nsp, nullity
        else:
            try:
                basis = null_space_basis(h_true, config.rel_tolerance)
                x_pert = project_waveform(projector(basis), x)
                nullity_pert = basis.nullity
            except NoNullSpaceError as exc:
                errors.append(f"{ARM_NSP_PERTURBED}: {exc}")
                x_pert, nullity_pert = None, 0
        if x_pert is None:
            theta_pert = leak_pert = math.nan
        elif x_pert is x_nsp:
            theta_pert = theta_nsp
            leak_pert = leakage(h_true, x_pert)
        else:
            theta_pert = guarded(ARM_NSP_PERTURBED, lambda: estimate(x_pert))
            leak_pert = leakage(h_true, x_pert)
        results.append(
            TrialResult(
                trial_id=int(trial_id),
                h_rms=float(h),
                theta_true=theta_deg,
                theta_hat_original=theta_orig,
                theta_hat_nsp=theta_nsp,
                theta_hat_nsp_perturbed=theta_pert,
                leakage_stale=leak_stale,
                nullity=nullity,
                nullity_perturbed=nullity_pert,
                leakage_original=leak_orig,
                leakage_nsp=leak_nsp,
                leakage_nsp_perturbed=leak_pert,
                errors=tuple(errors),
            )
        )
    return results


def arm_records(trials) -> list[ArmRecord]:
    """Flatten trial results into per-arm rows.

    The original and unperturbed-NSP arms appear once per trial with
    ``h_rms = 0``; the perturbed and stale arms once per trial per level.
    """
    by_trial: dict[int, list[TrialResult]] = {}
    for t in trials:
        by_trial.setdefault(t.trial_id, []).append(t)
    rows = []
    for tid in sorted(by_trial):
        group = by_trial[tid]
        first = group[0]

        def rec(arm, h, theta_hat, leak, nullity):
            return ArmRecord(tid, arm, float(h), first.theta_true, theta_hat, leak, int(nullity), math.isnan(theta_hat))

        rows.append(rec(ARM_ORIGINAL, 0.0, first.theta_hat_original, first.leakage_original, first.nullity))
        rows.append(rec(ARM_NSP, 0.0, first.theta_hat_nsp, first.leakage_nsp, first.nullity))
        for t in group:
            rows.append(rec(ARM_NSP_PERTURBED, t.h_rms, t.theta_hat_nsp_perturbed, t.leakage_nsp_perturbed, t.nullity_perturbed))
        for t in group:
            rows.append(rec(ARM_STALE, t.h_rms, t.theta_hat_nsp, t.leakage_stale, t.nullity))
    return rows


def summarize(records) -> ExperimentSummary:
    """RMSE, bias and mean leakage per (arm, h_rms); failed rows excluded."""
    groups: dict[tuple, list[ArmRecord]] = {}
    for r in records:
        groups.setdefault((r.arm, r.h_rms), []).append(r)
    summary = ExperimentSummary()
    order = {a: i for i, a in enumerate(ARMS)}
    for arm, h in sorted(groups, key=lambda k: (order.get(k[0], len(ARMS)), k[0], k[1])):
        rows = groups[(arm, h)]
        ok = [r for r in rows if not r.failed]
        summary.n_failed[(arm, h)] = len(rows) - len(ok)
        if ok:
            err = np.array([r.theta_hat_deg - r.theta_true_deg for r in ok])
            leak = np.array([r.leakage for r in ok])
            rmse = float(np.sqrt(np.mean(err * err)))
            bias = float(np.mean(err))
            mean_leak = float(np.mean(leak))
        else:
            rmse = bias = mean_leak = math.nan
        summary.rows.append(SummaryRow(arm, h, rmse, bias, mean_leak, len(ok)))
    return summary


def _run_chunk(args):
    config, ids = args
    out = []
    for tid in ids:
        out.extend(run_trial(config, tid))
    return out


def run_trials(config: ExperimentConfig, trial_ids=None, workers: int = 1) -> list[TrialResult]:
    ids = list(range(config.num_trials)) if trial_ids is None else [int(t) for t in trial_ids]
    if workers <= 1 or len(ids) < 2:
        trials = _run_chunk((config, ids))
    else:
        chunks = [(config, ids[i::workers]) for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = [t for part in pool.map(_run_chunk, chunks) for t in part]
    trials.sort(key=lambda t: (t.trial_id, config.h_rms_values.index(t.h_rms)))
    return trials


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run all trials and aggregate.

    Raises
    ------
    ExperimentError
        If every trial failed.
    """
    trials = run_trials(config, workers=workers)
    if trials and all(t.failed for t in trials):
        raise ExperimentError(f"all {config.num_trials} trials failed; first error: {trials[0].errors[0]}")
    return ExperimentResult(config, summarize(arm_records(trials)), trials)


def error_matrix(trials, attr: str = "theta_hat_nsp_perturbed") -> tuple[np.ndarray, np.ndarray]:
    """Per-trial estimation errors arranged as (trial, h_rms level).

    Returns the sorted levels and an array of errors in degrees; trials with
    any failed level are dropped so columns stay paired.
    """
    levels = sorted({t.h_rms for t in trials})
    by_trial: dict[int, dict[float, float]] = {}
    for t in trials:
        by_trial.setdefault(t.trial_id, {})[t.h_rms] = getattr(t, attr) - t.theta_true
    rows = [[d[h] for h in levels] for _, d in sorted(by_trial.items()) if len(d) == len(levels)]
    err = np.array(rows, dtype=float).reshape(-1, len(levels))
    err = err[~np.isnan(err).any(axis=1)]
    return np.array(levels), err


def paired_bootstrap_rmse(errors: np.ndarray, n_boot: int = 2000, level: float = 0.95, seed: int = 0) -> dict:
    """Paired bootstrap of RMSE per column and of consecutive differences.

    Rows (trials) are resampled jointly, keeping columns paired.

    Returns
    -------
    dict with keys ``rmse`` (point estimates), ``rmse_ci`` (k x 2),
    ``diff`` (point estimates of rmse[i+1] - rmse[i]) and ``diff_ci``.
    """
    errors = np.asarray(errors, dtype=float)
    n, k = errors.shape
    rng = np.random.default_rng(seed)
    sq = errors * errors
    rmse = np.sqrt(sq.mean(axis=0))
    idx = rng.integers(0, n, size=(n_boot, n))
    boot = np.sqrt(sq[idx].mean(axis=1))  # (n_boot, k)
    lo, hi = (1 - level) / 2, 1 - (1 - level) / 2
    bdiff = np.diff(boot, axis=1)
    return {
        "rmse": rmse,
        "rmse_ci": np.quantile(boot, [lo, hi], axis=0).T,
        "diff": np.diff(rmse),
        "diff_ci": np.quantile(bdiff, [lo, hi], axis=0).T.reshape(-1, 2),
    }


def leakage_law(trials) -> dict:
    """Least-squares fit of mean stale-ICSI leakage^2 against h_rms^2."""
    levels = sorted({t.h_rms for t in trials})
    y = []
    for h in levels:
        vals = np.array([t.leakage_stale for t in trials if t.h_rms == h])
        vals = vals[~np.isnan(vals)]
        y.append(np.mean(vals * vals))
    x = np.array(levels) ** 2
    y = np.array(y)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return {"h2": x, "mean_leakage_sq": y, "slope": float(slope), "intercept": float(intercept), "r2": float(r2)}
