"""Monte Carlo harness and exact doubled-space purity oracle.

Trials are pure functions of (config, seed, trial index); any partition of the
trial range across workers reassembles to identical results, so output files
are byte-stable under ``workers``.  Each trial is evaluated with fixed-shape
linear algebra on purpose: batching trials through BLAS can change summation
order with the batch size, which would break that contract.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import (
    average_distance_bound,
    distance_tail_bound,
    expectation_tail_bound,
    filtered_distance_tail_bound,
    operator_basis_tail_bound,
    suggested_epsilon,
)
from .errors import ShapeMismatchError, TypicalityError
from .filtering import FilteredEnsemble, MeasurementFilter, apply_filter, load_filter
from .linalg import (
    DEFAULT_DIMENSION_CAP,
    BipartiteShape,
    check_cap,
    purity,
    require_hermitian,
)
from .sampling import SampleStream, reduced_state_from_coords, sample_coords
from .spin_chain import SpinChainModel, build_subspace, typical_projector, typical_window
from .subspace import CanonicalEnsemble, ConstraintSubspace, canonical_ensemble, full_space
from .weyl import weyl_basis

SCHEMA_VERSION = 1

#: Weyl-family tracking is skipped above this system dimension (d_S^4 per trial).
_COEFF_TRACK_MAX_DIM = 32

TRIALS_CSV_COLUMNS = ("trial", "trace_distance", "purity", "max_coeff_dev")


@dataclass(frozen=True)
class ExperimentConfig:
    """Reproducible description of one Monte Carlo run.

    ``subspace`` is an inline spec: {"kind": "spin-chain", n, k, num_excited},
    {"kind": "full", dim_system, dim_environment} or {"kind": "file", path}.
    ``filter`` is optional: {"kind": "typical-window", half_width} or
    {"kind": "file", path}.
    """

    subspace: dict
    trials: int
    seed: int
    epsilon: float | None = None
    filter: dict | None = None
    workers: int = 1
    track_coefficients: bool = True
    cap: int = DEFAULT_DIMENSION_CAP

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def canonical_dict(self) -> dict:
        return {
            "subspace": self.subspace,
            "trials": self.trials,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "filter": self.filter,
            "track_coefficients": self.track_coefficients,
            "cap": self.cap,
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def resolve_subspace(spec: dict, *, cap: int = DEFAULT_DIMENSION_CAP) -> ConstraintSubspace:
    """Materialize a subspace from an inline config spec."""
    kind = spec.get("kind")
    if kind == "spin-chain":
        model = SpinChainModel(
            n=int(spec["n"]), k=int(spec["k"]), num_excited=int(spec["num_excited"])
        )
        return build_subspace(model, cap=cap)
    if kind == "full":
        shape = BipartiteShape(int(spec["dim_system"]), int(spec["dim_environment"]))
        return full_space(shape, cap=cap)
    if kind == "file":
        return ConstraintSubspace.load(spec["path"])
    raise ValueError(f"unknown subspace kind {kind!r}")


def resolve_filter(
    spec: dict | None, subspace_spec: dict, *, cap: int = DEFAULT_DIMENSION_CAP
) -> MeasurementFilter | None:
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind == "typical-window":
        if subspace_spec.get("kind") != "spin-chain":
            raise ShapeMismatchError("typical-window filters need a spin-chain subspace")
        model = SpinChainModel(
            n=int(subspace_spec["n"]),
            k=int(subspace_spec["k"]),
            num_excited=int(subspace_spec["num_excited"]),
        )
        window = typical_window(model, float(spec["half_width"]))
        return typical_projector(model, window, cap=cap)
    if kind == "file":
        return load_filter(spec["path"])
    raise ValueError(f"unknown filter kind {kind!r}")


@dataclass(frozen=True)
class SummaryStats:
    """Moments, extremes, quantiles and tail frequencies of one sample set."""

    count: int
    mean: float
    stddev: float
    standard_error: float
    minimum: float
    maximum: float
    quantiles: dict
    tail_frequencies: dict

    @classmethod
    def from_samples(cls, values: np.ndarray, thresholds: Sequence[float] = ()) -> "SummaryStats":
        values = np.asarray(values, dtype=float)
        n = values.size
        if n == 0:
            raise ValueError("no samples")
        stddev = float(values.std(ddof=1)) if n > 1 else 0.0
        quantiles = {
            q: float(np.quantile(values, q / 100.0)) for q in (50, 90, 99)
        }
        tails = {float(t): float(np.mean(values >= t)) for t in thresholds}
        stats = cls(
            count=n,
            mean=float(values.mean()),
            stddev=stddev,
            standard_error=stddev / np.sqrt(n),
            minimum=float(values.min()),
            maximum=float(values.max()),
            quantiles=quantiles,
            tail_frequencies=tails,
        )
        for q in stats.quantiles.values():
            if not (stats.minimum - 1e-12 <= q <= stats.maximum + 1e-12):
                raise TypicalityError("inconsistent quantiles")
        return stats

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "stddev": self.stddev,
            "standard_error": self.standard_error,
            "min": self.minimum,
            "max": self.maximum,
            "quantiles": {str(k): v for k, v in self.quantiles.items()},
            "tail_frequencies": {repr(k): v for k, v in self.tail_frequencies.items()},
        }


@dataclass(frozen=True)
class BoundRow:
    """One formula-versus-data comparison.

    ``satisfied`` allows three binomial (or mean) standard errors of slack;
    ``vacuous`` marks bounds that exceed the trivial maximum and therefore
    carry no information at this scale (still required to be satisfied).
    """

    name: str
    formula_value: float
    empirical_value: float
    satisfied: bool
    vacuous: bool
    threshold: float | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "formula_value": self.formula_value,
            "empirical_value": self.empirical_value,
            "satisfied": self.satisfied,
            "vacuous": self.vacuous,
            "threshold": self.threshold,
        }


def _tail_row(name: str, distances: np.ndarray, threshold: float, bound: float) -> BoundRow:
    freq = float(np.mean(distances >= threshold))
    p_star = min(bound, 1.0)
    sigma = float(np.sqrt(max(p_star * (1.0 - p_star), 0.0) / distances.size))
    return BoundRow(
        name=name,
        formula_value=float(bound),
        empirical_value=freq,
        satisfied=bool(freq <= bound + 3.0 * sigma),
        vacuous=bool(bound >= 1.0),
        threshold=float(threshold),
    )


def bound_confrontation_report(
    distances: np.ndarray,
    ensemble: CanonicalEnsemble,
    epsilon: float | None = None,
    filtered: FilteredEnsemble | None = None,
) -> list[BoundRow]:
    """Confront the sampled distances with every applicable closed form."""
    sub = ensemble.subspace
    d_s = sub.shape.dim_system
    d_r = sub.dim_subspace
    eps = suggested_epsilon(d_r) if epsilon is None else epsilon
    n = distances.size
    mean = float(distances.mean())
    se_mean = float(distances.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    rows: list[BoundRow] = []
    sharp, loose = average_distance_bound(d_s, d_r, ensemble.effective_env_dim)
    for name, value in (("average_distance_eff", sharp), ("average_distance_dr", loose)):
        rows.append(
            BoundRow(
                name=name,
                formula_value=float(value),
                empirical_value=mean,
                satisfied=bool(mean <= value + 3.0 * se_mean),
                vacuous=bool(value >= 2.0),
            )
        )
    tail = distance_tail_bound(d_s, d_r, ensemble.effective_env_dim, eps)
    rows.append(_tail_row("distance_tail", distances, tail.threshold, tail.tail_bound))
    threshold, bound = operator_basis_tail_bound(d_s, d_r)
    rows.append(_tail_row("operator_basis_tail", distances, threshold, bound))
    if filtered is not None and not filtered.degenerate:
        ftail = filtered_distance_tail_bound(
            filtered.support_dim,
            filtered.effective_env_dim,
            d_r,
            filtered.miss_weight,
            eps,
        )
        rows.append(
            _tail_row("filtered_distance_tail", distances, ftail.threshold, ftail.tail_bound)
        )
    return rows


# -- trial evaluation --------------------------------------------------------


def _distance_block(
    sub: ConstraintSubspace,
    mean_state: np.ndarray,
    ops: np.ndarray | None,
    seed: int,
    start: int,
    count: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    distances = np.empty(count)
    purities = np.empty(count)
    devs = np.empty(count) if ops is not None else None
    for i in range(count):
        coords = sample_coords(sub.dim_subspace, SampleStream(seed, start + i))
        rho = reduced_state_from_coords(sub, coords)
        diff = rho - mean_state
        distances[i] = float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
        purities[i] = purity(rho)
        if devs is not None:
            devs[i] = float(np.max(np.abs(np.einsum("xab,ab->x", ops.conj(), diff))))
    return distances, purities, devs


def _expectation_block(
    sub: ConstraintSubspace,
    mean_state: np.ndarray,
    observables: np.ndarray,
    ops: np.ndarray | None,
    seed: int,
    start: int,
    count: int,
) -> tuple[np.ndarray, np.ndarray | None]:
    targets = np.einsum("oab,ba->o", observables, mean_state).real
    deviations = np.empty((count, observables.shape[0]))
    devs = np.empty(count) if ops is not None else None
    for i in range(count):
        coords = sample_coords(sub.dim_subspace, SampleStream(seed, start + i))
        rho = reduced_state_from_coords(sub, coords)
        values = np.einsum("oab,ba->o", observables, rho).real
        deviations[i] = values - targets
        if devs is not None:
            diff = rho - mean_state
            devs[i] = float(np.max(np.abs(np.einsum("xab,ab->x", ops.conj(), diff))))
    return deviations, devs


def _split_blocks(trials: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, trials))
    base, extra = divmod(trials, workers)
    blocks = []
    start = 0
    for w in range(workers):
        count = base + (1 if w < extra else 0)
        blocks.append((start, count))
        start += count
    return blocks


def _run_blocks(fn, common_args: tuple, trials: int, workers: int) -> list:
    blocks = _split_blocks(trials, workers)
    if len(blocks) == 1 or workers == 1:
        return [fn(*common_args, start, count) for start, count in blocks]
    with ProcessPoolExecutor(max_workers=len(blocks)) as pool:
        futures = [pool.submit(fn, *common_args, start, count) for start, count in blocks]
        return [f.result() for f in futures]


@dataclass
class DistanceExperimentResult:
    config: ExperimentConfig
    subspace_info: dict
    distances: np.ndarray
    purities: np.ndarray
    max_coeff_devs: np.ndarray | None
    distance_stats: SummaryStats
    purity_stats: SummaryStats
    coeff_stats: SummaryStats | None
    bound_rows: list = field(default_factory=list)

    @property
    def all_bounds_satisfied(self) -> bool:
        return all(row.satisfied for row in self.bound_rows)


def run_distance_experiment(config: ExperimentConfig) -> DistanceExperimentResult:
    """Sample pure states, record distance/purity per trial, confront bounds."""
    sub = resolve_subspace(config.subspace, cap=config.cap)
    ensemble = canonical_ensemble(sub)
    filt = resolve_filter(config.filter, config.subspace, cap=config.cap)
    filtered = apply_filter(sub, filt) if filt is not None else None
    ops = None
    if config.track_coefficients and sub.shape.dim_system <= _COEFF_TRACK_MAX_DIM:
        ops = weyl_basis(sub.shape.dim_system)

    results = _run_blocks(
        _distance_block,
        (sub, ensemble.system_state, ops, config.seed),
        config.trials,
        config.workers,
    )
    distances = np.concatenate([r[0] for r in results])
    purities = np.concatenate([r[1] for r in results])
    devs = np.concatenate([r[2] for r in results]) if ops is not None else None

    eps = suggested_epsilon(sub.dim_subspace) if config.epsilon is None else config.epsilon
    tail = distance_tail_bound(
        sub.shape.dim_system, sub.dim_subspace, ensemble.effective_env_dim, eps
    )
    thresholds = [tail.threshold]
    rows = bound_confrontation_report(distances, ensemble, eps, filtered)
    info = {
        "dim_system": sub.shape.dim_system,
        "dim_environment": sub.shape.dim_environment,
        "dim_subspace": sub.dim_subspace,
        "effective_env_dim": ensemble.effective_env_dim,
        "system_purity": ensemble.system_purity,
        "environment_purity": ensemble.environment_purity,
    }
    if filtered is not None:
        info["filter_miss_weight"] = filtered.miss_weight
        info["filter_support_dim"] = filtered.support_dim
        info["filtered_effective_env_dim"] = filtered.effective_env_dim
    return DistanceExperimentResult(
        config=config,
        subspace_info=info,
        distances=distances,
        purities=purities,
        max_coeff_devs=devs,
        distance_stats=SummaryStats.from_samples(distances, thresholds),
        purity_stats=SummaryStats.from_samples(purities),
        coeff_stats=SummaryStats.from_samples(devs) if devs is not None else None,
        bound_rows=rows,
    )


@dataclass
class ExpectationExperimentResult:
    config: ExperimentConfig
    observable_stats: list
    observable_means: list
    observable_targets: list
    observable_bounds: list
    family_stats: SummaryStats | None
    family_bound: BoundRow | None


def run_expectation_experiment(
    config: ExperimentConfig, observables: Sequence[np.ndarray]
) -> ExpectationExperimentResult:
    """Deviation statistics of observable expectation values from their
    ensemble values, plus the full operator-family deviation.
    """
    sub = resolve_subspace(config.subspace, cap=config.cap)
    d_s = sub.shape.dim_system
    ensemble = canonical_ensemble(sub)
    obs = np.stack([require_hermitian(o) for o in observables])
    if obs.shape[1] != d_s:
        raise ShapeMismatchError("observables must act on the system space")
    ops = weyl_basis(d_s) if config.track_coefficients and d_s <= _COEFF_TRACK_MAX_DIM else None

    results = _run_blocks(
        _expectation_block,
        (sub, ensemble.system_state, obs, ops, config.seed),
        config.trials,
        config.workers,
    )
    deviations = np.concatenate([r[0] for r in results])
    devs = np.concatenate([r[1] for r in results]) if ops is not None else None

    d_r = sub.dim_subspace
    eps = suggested_epsilon(d_r) if config.epsilon is None else config.epsilon
    stats = []
    mean_values = []
    obs_rows = []
    targets = np.einsum("oab,ba->o", obs, ensemble.system_state).real
    for idx in range(obs.shape[0]):
        signed = deviations[:, idx]
        samples = np.abs(signed)
        stats.append(SummaryStats.from_samples(samples, [eps]))
        mean_values.append(float(targets[idx] + signed.mean()))
        norm = float(np.max(np.abs(np.linalg.eigvalsh(obs[idx]))))
        bound = expectation_tail_bound(max(norm, 1e-300), d_r, eps)
        obs_rows.append(_tail_row(f"expectation_tail_{idx}", samples, eps, bound))
    family_stats = None
    family_row = None
    if devs is not None:
        family_stats = SummaryStats.from_samples(devs, [eps])
        family_bound = d_s**2 * expectation_tail_bound(1.0, d_r, eps)
        family_row = _tail_row("coefficient_family_tail", devs, eps, family_bound)
    return ExpectationExperimentResult(
        config=config,
        observable_stats=stats,
        observable_means=mean_values,
        observable_targets=[float(v) for v in targets],
        observable_bounds=obs_rows,
        family_stats=family_stats,
        family_bound=family_row,
    )


# -- exact purity oracle ------------------------------------------------------


def exact_average_purity(sub: ConstraintSubspace, *, cap: int = DEFAULT_DIMENSION_CAP) -> float:
    """Mean system purity over Haar-uniform states on the subspace, exactly.

    Doubling the space turns the purity into the expectation of a swap
    operator; Haar-averaging the doubled projector leaves a symmetric-subspace
    projector whose two terms contract, through the basis tensor, into the
    pairwise overlaps of the per-vector reduced matrices:

        <Tr rho_S^2> = (T1 + T2) / (d_R (d_R + 1)),

    where T1 sums Tr(R_i R_j) over the system marginals R_i of the basis
    vectors and T2 the same over environment marginals.  No composite-squared
    operator is ever materialized.
    """
    check_cap(sub.shape.dim, cap)
    one_hot = sub.one_hot
    d_r = sub.dim_subspace
    if one_hot is not None:
        sys_idx, env_idx = one_hot
        t1 = float(np.sum(np.bincount(sys_idx).astype(float) ** 2))
        t2 = float(np.sum(np.bincount(env_idx).astype(float) ** 2))
    else:
        t = sub.basis_tensor()
        sys_marginals = np.einsum("iae,ibe->iab", t, t.conj())
        env_marginals = np.einsum("ise,isf->ief", t, t.conj())
        t1 = float(np.einsum("iab,jba->", sys_marginals, sys_marginals).real)
        t2 = float(np.einsum("iab,jba->", env_marginals, env_marginals).real)
    return (t1 + t2) / (d_r * (d_r + 1))


def purity_inequality_check(
    sub: ConstraintSubspace, *, cap: int = DEFAULT_DIMENSION_CAP
) -> tuple[float, float]:
    """Exact mean purity against the sum of the marginal purities.

    Returns (lhs, rhs) = (<Tr rho_S^2>, Tr Omega_S^2 + Tr Omega_E^2) and
    raises if lhs exceeds rhs beyond 1e-10.
    """
    lhs = exact_average_purity(sub, cap=cap)
    ens = canonical_ensemble(sub)
    rhs = ens.system_purity + ens.environment_purity
    if lhs > rhs + 1e-10:
        raise TypicalityError(f"mean purity {lhs!r} exceeded marginal-purity sum {rhs!r}")
    return lhs, rhs


def mc_average_purity(
    sub: ConstraintSubspace, trials: int, seed: int, workers: int = 1
) -> tuple[float, float]:
    """Monte Carlo mean system purity and its standard error."""
    results = _run_blocks(
        _distance_block,
        (sub, np.zeros((sub.shape.dim_system,) * 2, dtype=complex), None, seed),
        trials,
        workers,
    )
    purities = np.concatenate([r[1] for r in results])
    return float(purities.mean()), float(purities.std(ddof=1) / np.sqrt(trials))


# -- output artifacts ---------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def write_trials_csv(fh, result: DistanceExperimentResult) -> None:
    """One row per trial: (trial, trace_distance, purity, max_coeff_dev)."""
    fh.write(",".join(TRIALS_CSV_COLUMNS) + "\n")
    devs = result.max_coeff_devs
    for i in range(result.distances.size):
        dev = _fmt(devs[i]) if devs is not None else ""
        fh.write(
            f"{i},{_fmt(result.distances[i])},{_fmt(result.purities[i])},{dev}\n"
        )


def summary_dict(result: DistanceExperimentResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": result.config.seed,
        "config": result.config.canonical_dict(),
        "config_hash": result.config.config_hash(),
        "subspace": result.subspace_info,
        "stats": {
            "trace_distance": result.distance_stats.to_dict(),
            "purity": result.purity_stats.to_dict(),
            "max_coeff_dev": result.coeff_stats.to_dict() if result.coeff_stats else None,
        },
        "bounds": [row.to_dict() for row in result.bound_rows],
    }


def write_summary_json(fh, result: DistanceExperimentResult) -> None:
    json.dump(summary_dict(result), fh, sort_keys=True, indent=2)
    fh.write("\n")
