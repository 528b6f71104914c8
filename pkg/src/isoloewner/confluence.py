"""Fuchsian approximants converging to a pole of order k + 1.

A double pole ``A0/(z-lam) + A1/(z-lam)^2`` is the limit of two simple
poles at ``lam`` and ``lam + eps s`` with residues ``A0 - A1/(eps s)`` and
``A1/(eps s)``. For higher order the residues at ``lam + (j-1) eps s``
solve a Vandermonde moment system.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .algebra import Mat2C, frobenius
from .errors import DegenerateFit, IllConditioned, InvalidSpec, PoleHit, ZeroRate
from .loewner import DrivingPath, DrivingSpec, fmt_float, run_trajectory

DEFAULT_LADDER = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
PROBE_MARGIN = 10.0
SOLVE_TOL = 1e-8


@dataclass(frozen=True)
class ConfluenceSpec:
    target_A0: Mat2C
    target_A1: Mat2C
    s: complex
    epsilon: float
    base_lambda: complex = 0j
    k: int = 1
    higher: tuple = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "target_A0", np.asarray(self.target_A0, dtype=complex).reshape(2, 2))
        object.__setattr__(self, "target_A1", np.asarray(self.target_A1, dtype=complex).reshape(2, 2))
        object.__setattr__(self, "higher", tuple(np.asarray(h, dtype=complex).reshape(2, 2) for h in self.higher))
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise InvalidSpec("epsilon must be positive")
        if self.k < 1:
            raise InvalidSpec("rank k must be >= 1")
        if len(self.higher) > self.k - 1:
            raise InvalidSpec("at most k - 1 higher targets")
        if self.s == 0:
            raise ZeroRate("confluence rate s must be nonzero")

    @property
    def targets(self) -> list[Mat2C]:
        """A_{1,0..k}; unspecified higher coefficients are zero."""
        extra = list(self.higher) + [np.zeros((2, 2), dtype=complex)] * (self.k - 1 - len(self.higher))
        return [self.target_A0, self.target_A1] + extra

    def with_epsilon(self, eps: float) -> "ConfluenceSpec":
        return ConfluenceSpec(self.target_A0, self.target_A1, self.s, eps, self.base_lambda, self.k, self.higher)


def split_double_pole(spec: ConfluenceSpec) -> tuple[Mat2C, Mat2C, complex, complex]:
    """Residues and poles of the two coalescing simple poles."""
    eps_s = spec.epsilon * spec.s
    A2 = spec.target_A1 / eps_s
    A1 = spec.target_A0 - A2
    return A1, A2, complex(spec.base_lambda), complex(spec.base_lambda + eps_s)


def vandermonde_split(spec: ConfluenceSpec, targets: Sequence[Mat2C] | None = None) -> list[tuple[Mat2C, complex]]:
    """Residues at ``lam + (j-1) eps s`` matching the first k + 1 moments."""
    tg = spec.targets if targets is None else [np.asarray(t, dtype=complex).reshape(2, 2) for t in targets]
    k = len(tg) - 1
    if k < 1:
        raise InvalidSpec("need at least two targets")
    nodes = np.arange(k + 1) * spec.epsilon * spec.s
    V = nodes[None, :] ** np.arange(k + 1)[:, None]
    rhs = np.stack([t.reshape(4) for t in tg])
    try:
        sol = np.linalg.solve(V, rhs)
    except np.linalg.LinAlgError as exc:
        raise IllConditioned("moment system is singular") from exc
    resid = float(np.max(np.abs(V @ sol - rhs))) if np.all(np.isfinite(sol)) else np.inf
    scale = max(float(np.max(np.abs(rhs))), 1e-300)
    if not resid <= SOLVE_TOL * scale:
        raise IllConditioned(f"moment residual {resid:.3g} exceeds {SOLVE_TOL:g} of the targets")
    return [(sol[j].reshape(2, 2), complex(spec.base_lambda + nodes[j])) for j in range(k + 1)]


def fuchsian_eval(parts: Sequence[tuple[Mat2C, complex]], z: complex) -> Mat2C:
    return sum(A / (z - p) for A, p in parts)


def irregular_eval(spec: ConfluenceSpec, z: complex) -> Mat2C:
    w = z - spec.base_lambda
    return sum(A / w ** (m + 1) for m, A in enumerate(spec.targets))


@dataclass(frozen=True)
class ConfluenceRate:
    eps: NDArray[np.float64]
    mismatch: NDArray[np.float64]
    slope: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("eps,mismatch\n")
        for e, m in zip(self.eps, self.mismatch):
            buf.write(f"{fmt_float(e)},{fmt_float(m)}\n")
        return buf.getvalue()


def mismatch(spec: ConfluenceSpec, probes: Sequence[complex]) -> float:
    """Largest Frobenius gap between the Fuchsian and irregular Lax matrices."""
    if spec.k == 1:
        A1, A2, l1, l2 = split_double_pole(spec)
        parts = [(A1, l1), (A2, l2)]
    else:
        parts = vandermonde_split(spec)
    margin = PROBE_MARGIN * spec.epsilon * abs(spec.s) * spec.k
    worst = 0.0
    for z in probes:
        if abs(z - spec.base_lambda) < margin:
            raise PoleHit(f"probe {z} within {margin:.3g} of the coalescing poles")
        worst = max(worst, float(frobenius(fuchsian_eval(parts, z) - irregular_eval(spec, z))))
    return worst


def confluence_rate(
    spec: ConfluenceSpec, probe_points: Sequence[complex], eps_ladder: Sequence[float] = DEFAULT_LADDER
) -> ConfluenceRate:
    """Least-squares slope of log mismatch against log eps."""
    eps = np.asarray(eps_ladder, dtype=float)
    if eps.size < 2:
        raise DegenerateFit("need at least two ladder points")
    mm = np.array([mismatch(spec.with_epsilon(float(e)), probe_points) for e in eps])
    if not np.all(mm > 0):
        raise DegenerateFit("mismatch vanishes on the ladder; slope undefined")
    slope = float(np.polyfit(np.log(eps), np.log(mm), 1)[0])
    return ConfluenceRate(eps, mm, slope)


def birkhoff_from_confluence(
    spec: DrivingSpec, lam: complex, s: complex, eps: float, path: DrivingPath | None = None
) -> tuple[complex, complex]:
    """Flow the pair lam, lam + eps s under one driving path.

    Returns ``(Lambda_2 - Lambda_1)/eps`` at the final time and the Birkhoff
    value ``g'(lam) s`` tracked by the flow, which the difference approaches
    as eps -> 0.
    """
    pair = run_trajectory(spec, [lam, lam + eps * s], [s, s], path=path)[-1]
    return complex((pair.Lam[1] - pair.Lam[0]) / eps), complex(pair.S[0])
