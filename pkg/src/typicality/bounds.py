"""Closed-form concentration bounds and Lipschitz-constant probes.

Everything here is a pure function of scalar inputs.  Probability bounds are
reported unclamped (they may exceed 1 at small dimension); ``vacuous`` flags
and clamped display values are provided alongside.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import SubspaceMismatchError
from .linalg import operator_norm, require_hermitian, trace_norm
from .sampling import PureState, reduced_state_from_coords
from .subspace import CanonicalEnsemble

#: Constant in the spherical concentration exponent, 1/(18 pi^3).
LEVY_CONSTANT = 1.0 / (18.0 * math.pi**3)


def state_sphere_dim(dim_subspace: int) -> int:
    """Real sphere dimension of normalized states on a complex space."""
    return 2 * dim_subspace - 1


def suggested_epsilon(dim_subspace: int) -> float:
    """Deviation scale that balances the two error terms, d_R^(-1/3)."""
    return float(dim_subspace) ** (-1.0 / 3.0)


def levy_tail(sphere_dim: int, lipschitz: float, epsilon: float) -> float:
    """Tail probability that a Lipschitz function on the sphere deviates
    from its mean by at least ``epsilon``:

        2 * exp(-2 C (d + 1) epsilon^2 / lipschitz^2)
    """
    if sphere_dim <= 0 or lipschitz <= 0 or epsilon <= 0:
        raise ValueError("sphere_dim, lipschitz and epsilon must be positive")
    exponent = -2.0 * LEVY_CONSTANT * (sphere_dim + 1) * epsilon**2 / lipschitz**2
    return 2.0 * math.exp(exponent)


@dataclass(frozen=True)
class DistanceTailBound:
    """Prob[ ||rho_S - Omega_S|| >= threshold ] <= tail_bound."""

    dim_system: int
    dim_subspace: int
    effective_env_dim: float
    epsilon: float
    threshold: float
    tail_bound: float

    @property
    def vacuous(self) -> bool:
        return self.tail_bound >= 1.0 or self.threshold >= 2.0

    @property
    def tail_bound_clamped(self) -> float:
        return min(self.tail_bound, 1.0)

    def table_row(self) -> dict:
        return {
            "d_S": self.dim_system,
            "d_R": self.dim_subspace,
            "d_E_eff": self.effective_env_dim,
            "epsilon": self.epsilon,
            "eta": self.threshold,
            "eta_prime": self.tail_bound,
            "source_formula": "distance_tail",
        }


def distance_tail_bound(
    dim_system: int,
    dim_subspace: int,
    effective_env_dim: float,
    epsilon: float,
) -> DistanceTailBound:
    """Concentration of the trace distance between a sampled reduced state
    and the ensemble mean: threshold = epsilon + sqrt(d_S / d_E_eff), tail
    2 exp(-C d_R epsilon^2).
    """
    if min(dim_system, dim_subspace) < 1 or effective_env_dim <= 0:
        raise ValueError("dimensions must be positive")
    threshold = epsilon + math.sqrt(dim_system / effective_env_dim)
    tail = 2.0 * math.exp(-LEVY_CONSTANT * dim_subspace * epsilon**2)
    return DistanceTailBound(
        dim_system=dim_system,
        dim_subspace=dim_subspace,
        effective_env_dim=effective_env_dim,
        epsilon=epsilon,
        threshold=threshold,
        tail_bound=tail,
    )


def average_distance_bound(
    dim_system: int, dim_subspace: int, effective_env_dim: float
) -> tuple[float, float]:
    """Bounds on the mean trace distance: (sqrt(d_S/d_E_eff), sqrt(d_S^2/d_R)).

    The first is the sharper one; the second only needs the subspace
    dimension and dominates the first whenever d_E_eff >= d_R / d_S.
    """
    if min(dim_system, dim_subspace) < 1 or effective_env_dim <= 0:
        raise ValueError("dimensions must be positive")
    return (
        math.sqrt(dim_system / effective_env_dim),
        math.sqrt(dim_system**2 / dim_subspace),
    )


@dataclass(frozen=True)
class FilteredDistanceTailBound:
    """Distance tail after conditioning on an almost-certain measurement."""

    support_dim: int
    filtered_effective_env_dim: float
    dim_subspace: int
    miss_weight: float
    epsilon: float
    threshold: float
    tail_bound: float

    @property
    def vacuous(self) -> bool:
        return self.tail_bound >= 1.0 or self.threshold >= 2.0

    @property
    def tail_bound_clamped(self) -> float:
        return min(self.tail_bound, 1.0)

    def table_row(self) -> dict:
        return {
            "d_S": self.support_dim,
            "d_R": self.dim_subspace,
            "d_E_eff": self.filtered_effective_env_dim,
            "epsilon": self.epsilon,
            "eta": self.threshold,
            "eta_prime": self.tail_bound,
            "source_formula": "filtered_distance_tail",
        }


def filtered_distance_tail_bound(
    support_dim: int,
    filtered_effective_env_dim: float,
    dim_subspace: int,
    miss_weight: float,
    epsilon: float,
) -> FilteredDistanceTailBound:
    """Filtered variant: threshold gains the 4 sqrt(miss_weight) penalty for
    the filter's failure probability; the tail exponent is unchanged.
    """
    if not 0.0 <= miss_weight <= 1.0:
        raise ValueError("miss_weight must lie in [0, 1]")
    threshold = (
        epsilon
        + math.sqrt(support_dim / filtered_effective_env_dim)
        + 4.0 * math.sqrt(miss_weight)
    )
    tail = 2.0 * math.exp(-LEVY_CONSTANT * dim_subspace * epsilon**2)
    return FilteredDistanceTailBound(
        support_dim=support_dim,
        filtered_effective_env_dim=filtered_effective_env_dim,
        dim_subspace=dim_subspace,
        miss_weight=miss_weight,
        epsilon=epsilon,
        threshold=threshold,
        tail_bound=tail,
    )


def expectation_tail_bound(op_norm: float, dim_subspace: int, epsilon: float) -> float:
    """Tail for the deviation of one bounded observable's expectation value:
    2 exp(-C d_R epsilon^2 / ||O||^2).
    """
    if op_norm <= 0:
        raise ValueError("operator norm must be positive")
    return 2.0 * math.exp(-LEVY_CONSTANT * dim_subspace * epsilon**2 / op_norm**2)


def operator_basis_tail_bound(dim_system: int, dim_subspace: int) -> tuple[float, float]:
    """Distance tail obtained through a complete unitary operator basis.

    Returns ``(threshold, tail_bound)`` with threshold (d_S^2/d_R)^(1/3) and
    tail 2 d_S^2 exp(-C (d_R/d_S^2)^(1/3)); informative once d_R >> d_S^2.
    """
    if min(dim_system, dim_subspace) < 1:
        raise ValueError("dimensions must be positive")
    beta = (dim_subspace / dim_system**2) ** (1.0 / 3.0)
    return 1.0 / beta, 2.0 * dim_system**2 * math.exp(-LEVY_CONSTANT * beta)


def sphere_distance(coords_a: np.ndarray, coords_b: np.ndarray) -> float:
    """Euclidean distance between unit vectors, minimized over a global phase."""
    overlap = abs(np.vdot(coords_a, coords_b))
    return math.sqrt(max(0.0, 2.0 - 2.0 * overlap))


@dataclass(frozen=True)
class LipschitzReport:
    """Worst observed ratio |f(a) - f(b)| / dist(a, b) over sampled pairs."""

    max_ratio: float
    bound: float
    pairs_checked: int
    pairs_skipped: int
    max_state_ratio: float | None = None

    @property
    def satisfied(self) -> bool:
        ok = self.max_ratio <= self.bound + 1e-9
        if self.max_state_ratio is not None:
            ok = ok and self.max_state_ratio <= self.bound + 1e-9
        return ok


def lipschitz_distance_report(
    ensemble: CanonicalEnsemble, pairs: Iterable[tuple[PureState, PureState]]
) -> LipschitzReport:
    """Probe the Lipschitz constant of phi -> ||rho_S(phi) - Omega_S||.

    ``max_ratio`` tracks differences of that function; ``max_state_ratio``
    tracks the intermediate marginal distance ||rho_1 - rho_2|| against the
    same phase-aligned sphere distance.  Both are bounded by 2.
    """
    sub = ensemble.subspace
    mean_state = ensemble.system_state
    max_ratio = 0.0
    max_state_ratio = 0.0
    checked = 0
    skipped = 0
    for a, b in pairs:
        if not (a.subspace.equals(sub) and b.subspace.equals(sub)):
            raise SubspaceMismatchError("pair does not live on the ensemble's subspace")
        dist = sphere_distance(a.coords, b.coords)
        if dist == 0.0:
            skipped += 1
            continue
        rho_a = reduced_state_from_coords(sub, a.coords)
        rho_b = reduced_state_from_coords(sub, b.coords)
        f_a = trace_norm(rho_a - mean_state)
        f_b = trace_norm(rho_b - mean_state)
        max_ratio = max(max_ratio, abs(f_a - f_b) / dist)
        max_state_ratio = max(max_state_ratio, trace_norm(rho_a - rho_b) / dist)
        checked += 1
    return LipschitzReport(
        max_ratio=max_ratio,
        bound=2.0,
        pairs_checked=checked,
        pairs_skipped=skipped,
        max_state_ratio=max_state_ratio,
    )


def lipschitz_expectation_report(
    observable: np.ndarray, pairs: Iterable[tuple[PureState, PureState]]
) -> LipschitzReport:
    """Probe the Lipschitz constant of phi -> <phi|X|phi>.

    ``observable`` is Hermitian, either on subspace coordinates (d_R x d_R)
    or on the composite space; the bound is twice its operator norm.
    """
    x = require_hermitian(observable)
    bound = 2.0 * operator_norm(x)
    max_ratio = 0.0
    checked = 0
    skipped = 0
    for a, b in pairs:
        if a.coords.shape[0] == x.shape[0]:
            va, vb = a.coords, b.coords
        elif a.ambient.shape[0] == x.shape[0]:
            va, vb = a.ambient, b.ambient
        else:
            raise SubspaceMismatchError("observable matches neither coordinate space")
        dist = sphere_distance(a.coords, b.coords)
        if dist == 0.0:
            skipped += 1
            continue
        f_a = float(np.vdot(va, x @ va).real)
        f_b = float(np.vdot(vb, x @ vb).real)
        max_ratio = max(max_ratio, abs(f_a - f_b) / dist)
        checked += 1
    return LipschitzReport(
        max_ratio=max_ratio, bound=bound, pairs_checked=checked, pairs_skipped=skipped
    )


BOUND_TABLE_COLUMNS = ("d_S", "d_R", "d_E_eff", "epsilon", "eta", "eta_prime", "source_formula")


def write_bound_table(rows: Sequence[dict], fh) -> None:
    """Emit bound rows as CSV with the fixed column set, 17 significant digits."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(BOUND_TABLE_COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(row.get(col, "")) for col in BOUND_TABLE_COLUMNS])


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)
