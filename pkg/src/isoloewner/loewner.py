"""Chordal Loewner flow of marked points and their variational data.

For each tracked puncture the flow carries

    Lambda' = 2/(Lambda - Z)
    g'      : d g'  = -2 g' /(Lambda - Z)^2
    pre     : d pre =  4 g' /(Lambda - Z)^3          (pre-Schwarzian g''/g')
    schw    : d schw = -12 g'^2/(Lambda - Z)^4       (Schwarzian)
    S       : d S   = -2 S  /(Lambda - Z)^2          (Birkhoff value, S_0 = s)
    kint    : d kint = 1/(Lambda - Z)^2              (kernel integral)

The kernel integral gives the exponential form of the general-rank
Birkhoff values, ``s_k * exp(-2k * kint)``, which is compared against
``s_k * g'^k`` as an independent route.

Within a step the driving function is interpolated linearly and all
deterministic components advance by one RK4 step.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateConfig, IndexOutOfRange, InvalidSpec, StepRejected, Stopped

SWALLOW = "SWALLOW"
CONTINUATION_THRESHOLD = "CONTINUATION_THRESHOLD"

DEFAULT_GUARD_FACTOR = 1e-3
MAX_REFINE_DEPTH = 14


class DrivingKind(str, enum.Enum):
    ZERO = "ZERO"
    TABLE = "TABLE"
    BROWNIAN = "BROWNIAN"
    SLE_KAPPA_RHO = "SLE_KAPPA_RHO"


@dataclass(frozen=True)
class DrivingSpec:
    kind: DrivingKind
    dt: float
    T: float
    seed: int = 0
    kappa: float = 4.0
    rho: float = -2.0
    xi0: float | None = None
    samples: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DrivingKind(self.kind))
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise InvalidSpec(f"dt must be positive, got {self.dt}")
        if not (self.T > 0 and np.isfinite(self.T)):
            raise InvalidSpec(f"T must be positive, got {self.T}")
        if self.kappa < 0:
            raise InvalidSpec("kappa must be nonnegative")
        if self.kind is DrivingKind.SLE_KAPPA_RHO and not self.xi0:
            raise InvalidSpec("SLE_KAPPA_RHO needs a nonzero force point xi0")
        if self.kind is DrivingKind.TABLE:
            if self.samples is None or len(self.samples) != self.n_steps + 1:
                raise InvalidSpec("TABLE driving needs n_steps + 1 samples of Z")
        if not (0 <= self.seed < 2**64):
            raise InvalidSpec("seed must fit in 64 unsigned bits")

    @property
    def n_steps(self) -> int:
        n = int(round(self.T / self.dt))
        if n < 1 or abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise InvalidSpec(f"T={self.T} is not a whole number of steps dt={self.dt}")
        return n


@dataclass(frozen=True)
class DrivingPath:
    t: NDArray[np.float64]
    Z: NDArray[np.float64]
    B: NDArray[np.float64]
    dB: NDArray[np.float64]
    Xi: NDArray[np.float64] | None = None
    threshold_index: int | None = None

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def _odd_part(n: int) -> tuple[int, int]:
    level = 0
    while n % 2 == 0:
        n //= 2
        level += 1
    return n, level


def _level_rng(seed: int, path_index: int, level: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path_index, level))
    return np.random.default_rng(ss)


def brownian_grid(seed: int, T: float, n: int, path_index: int = 0) -> NDArray[np.float64]:
    """Standard Brownian motion on ``n`` equal steps of ``[0, T]``.

    The path is built on a root grid of ``m`` steps (the odd part of ``n``)
    and refined by Brownian-bridge midpoints, one random stream per level.
    Doubling ``n`` therefore keeps every existing grid value and only adds
    midpoints, so convergence studies see a single underlying path.
    """
    m, levels = _odd_part(n)
    h = T / m
    B = np.concatenate([[0.0], np.cumsum(_level_rng(seed, path_index, 0).normal(0.0, np.sqrt(h), m))])
    for level in range(1, levels + 1):
        mid = 0.5 * (B[:-1] + B[1:]) + _level_rng(seed, path_index, level).normal(
            0.0, np.sqrt(h / 4.0), B.size - 1
        )
        out = np.empty(2 * B.size - 1)
        out[0::2] = B
        out[1::2] = mid
        B = out
        h /= 2.0
    return B


def sample_driving(spec: DrivingSpec, path_index: int = 0, guard: float | None = None) -> DrivingPath:
    """Driving function on the grid ``t_k = k T / n``.

    For the force-point kind the pair (Z, Xi) follows the Euler-Maruyama
    discretization of ``dZ = sqrt(kappa) dB + dXi``, ``dXi = -rho dt/(Xi - Z)``.
    Once ``|Xi - Z|`` falls below ``guard`` (default 1e-3 |xi0|) or changes sign,
    both are frozen and ``threshold_index`` records the first such index.
    """
    n = spec.n_steps
    t = np.linspace(0.0, spec.T, n + 1)
    dt = spec.T / n
    if spec.kind is DrivingKind.ZERO:
        zeros = np.zeros(n + 1)
        return DrivingPath(t=t, Z=zeros, B=zeros.copy(), dB=np.zeros(n))
    if spec.kind is DrivingKind.TABLE:
        Z = np.asarray(spec.samples, dtype=float)
        scale = np.sqrt(spec.kappa) if spec.kappa > 0 else 1.0
        B = Z / scale
        return DrivingPath(t=t, Z=Z, B=B, dB=np.diff(B))
    B = brownian_grid(spec.seed, spec.T, n, path_index)
    dB = np.diff(B)
    sk = np.sqrt(spec.kappa)
    if spec.kind is DrivingKind.BROWNIAN:
        return DrivingPath(t=t, Z=sk * B, B=B, dB=dB)

    xi0 = float(spec.xi0)
    guard = DEFAULT_GUARD_FACTOR * abs(xi0) if guard is None else guard
    Z = np.zeros(n + 1)
    Xi = np.zeros(n + 1)
    Xi[0] = xi0
    side = np.sign(xi0)
    hit = None
    for k in range(n):
        if hit is not None:
            Z[k + 1], Xi[k + 1] = Z[k], Xi[k]
            continue
        dxi = -spec.rho * dt / (Xi[k] - Z[k])
        Xi[k + 1] = Xi[k] + dxi
        Z[k + 1] = Z[k] + sk * dB[k] + dxi
        gap = Xi[k + 1] - Z[k + 1]
        if np.sign(gap) != side or abs(gap) < guard:
            hit = k + 1
    return DrivingPath(t=t, Z=Z, B=B, dB=dB, Xi=Xi, threshold_index=hit)


@dataclass(frozen=True)
class DrivingBatch:
    """Driving functions for many paths on a shared grid; rows are paths."""

    t: NDArray[np.float64]
    Z: NDArray[np.float64]
    dB: NDArray[np.float64]
    Xi: NDArray[np.float64] | None
    threshold_index: NDArray[np.int64]

    @property
    def paths(self) -> int:
        return int(self.Z.shape[0])


def sample_driving_batch(spec: DrivingSpec, paths: int, guard: float | None = None) -> DrivingBatch:
    """Row ``p`` equals ``sample_driving(spec, p, guard)``; the force-point
    recursion is vectorized across rows. Rows that never reach the threshold
    carry ``threshold_index = n_steps + 1``."""
    n = spec.n_steps
    t = np.linspace(0.0, spec.T, n + 1)
    dt = spec.T / n
    never = np.full(paths, n + 1, dtype=np.int64)
    if spec.kind in (DrivingKind.ZERO, DrivingKind.TABLE):
        one = sample_driving(spec, 0, guard)
        return DrivingBatch(t, np.tile(one.Z, (paths, 1)), np.tile(one.dB, (paths, 1)), None, never)
    B = np.stack([brownian_grid(spec.seed, spec.T, n, p) for p in range(paths)])
    dB = np.diff(B, axis=1)
    sk = np.sqrt(spec.kappa)
    if spec.kind is DrivingKind.BROWNIAN:
        return DrivingBatch(t, sk * B, dB, None, never)

    xi0 = float(spec.xi0)
    guard = DEFAULT_GUARD_FACTOR * abs(xi0) if guard is None else guard
    Z = np.zeros((paths, n + 1))
    Xi = np.zeros((paths, n + 1))
    Xi[:, 0] = xi0
    side = np.sign(xi0)
    hit = never.copy()
    live = np.ones(paths, dtype=bool)
    for k in range(n):
        gap0 = np.where(live, Xi[:, k] - Z[:, k], 1.0)
        dxi = np.where(live, -spec.rho * dt / gap0, 0.0)
        Xi[:, k + 1] = Xi[:, k] + dxi
        Z[:, k + 1] = Z[:, k] + np.where(live, sk * dB[:, k], 0.0) + dxi
        gap = Xi[:, k + 1] - Z[:, k + 1]
        crossed = live & ((np.sign(gap) != side) | (np.abs(gap) < guard))
        hit[crossed] = k + 1
        live &= ~crossed
    return DrivingBatch(t, Z, dB, Xi, hit)


# ---------------------------------------------------------------------------
# flow state


@dataclass(frozen=True)
class LoewnerState:
    t: float
    Z: float
    B: float
    lam: NDArray[np.complex128]
    Lam: NDArray[np.complex128]
    gprime: NDArray[np.complex128]
    pre: NDArray[np.complex128]
    schw: NDArray[np.complex128]
    S: NDArray[np.complex128]
    kint: NDArray[np.complex128]
    s0: NDArray[np.complex128]
    guard: float = 0.0
    Xi: float | None = None
    xi0: float | None = None
    stopped: bool = False
    stop_reason: str | None = None

    @property
    def n(self) -> int:
        return int(self.lam.size)

    def with_stop(self, reason: str) -> "LoewnerState":
        return replace(self, stopped=True, stop_reason=reason)


def initial_state(
    lam: Sequence[complex],
    s: Sequence[complex],
    *,
    xi0: float | None = None,
    guard: float | None = None,
    guard_factor: float = DEFAULT_GUARD_FACTOR,
) -> LoewnerState:
    lam_a = np.asarray(lam, dtype=complex).reshape(-1)
    s_a = np.asarray(s, dtype=complex).reshape(-1)
    if lam_a.size != s_a.size:
        raise DegenerateConfig("need one Birkhoff value per puncture")
    if lam_a.size and np.min(np.abs(lam_a)) == 0:
        raise DegenerateConfig("punctures must differ from the driving start 0")
    for i in range(lam_a.size):
        for j in range(i):
            if lam_a[i] == lam_a[j]:
                raise DegenerateConfig("punctures must be pairwise distinct")
    if guard is None:
        dists = list(np.abs(lam_a))
        if xi0 is not None:
            dists.append(abs(xi0))
        guard = guard_factor * min(dists) if dists else 0.0
    n = lam_a.size
    return LoewnerState(
        t=0.0,
        Z=0.0,
        B=0.0,
        lam=lam_a,
        Lam=lam_a.copy(),
        gprime=np.ones(n, dtype=complex),
        pre=np.zeros(n, dtype=complex),
        schw=np.zeros(n, dtype=complex),
        S=s_a.copy(),
        kint=np.zeros(n, dtype=complex),
        s0=s_a.copy(),
        guard=float(guard),
        Xi=None if xi0 is None else float(xi0),
        xi0=None if xi0 is None else float(xi0),
    )


def flow_rates(Lam, gp, S, Z):
    """Time derivatives of the tracked quantities at driving value ``Z``.

    Broadcasts over leading axes; ``Z`` must broadcast against ``Lam[..., 0]``.
    """
    w = Lam - np.asarray(Z)[..., None]
    w2 = w * w
    return {
        "Lam": 2.0 / w,
        "gp": -2.0 * gp / w2,
        "pre": 4.0 * gp / (w2 * w),
        "schw": -12.0 * gp * gp / (w2 * w2),
        "S": -2.0 * S / w2,
        "kint": 1.0 / w2,
    }


MAX_RELATIVE_MOVE = 0.1


def _point_rates(L, gp, S, z, guard, side):
    w = L - z
    aw = abs(w)
    if not aw >= guard or aw == 0:
        raise StepRejected("swallow guard tripped inside step")
    if side is not None and (w.real > 0) != (side > 0):
        raise StepRejected("boundary point crossed the driving function")
    iw = 1.0 / w
    iw2 = iw * iw
    return 2.0 * iw, -2.0 * gp * iw2, 4.0 * gp * iw2 * iw, -12.0 * gp * gp * iw2 * iw2, -2.0 * S * iw2, iw2


def _rk4_points(lam0, y, Z0, dZ, dt, guard):
    """One RK4 step for every tracked point, in scalar arithmetic.

    ``y`` is a list of per-point tuples (Lam, gp, pre, schw, S, kint).
    Rejects the step when a stage comes within ``guard`` of the driving
    function, when a boundary point would cross it, or when the step is
    too coarse for the local rate (2 dt/|Lambda - Z|^2 > MAX_RELATIVE_MOVE).
    """
    h = dt
    h2 = 0.5 * h
    h6 = h / 6.0
    zm = Z0 + 0.5 * dZ
    z1 = Z0 + dZ
    out = []
    for p, (L, gp, pre, schw, S, kint) in enumerate(y):
        lp = complex(lam0[p])
        side = lp.real if lp.imag == 0 else None
        if 2.0 * h / abs(L - Z0) ** 2 > MAX_RELATIVE_MOVE:
            raise StepRejected("step too coarse near the driving function")
        a1, b1, c1, d1, e1, f1 = _point_rates(L, gp, S, Z0, guard, side)
        a2, b2, c2, d2, e2, f2 = _point_rates(L + h2 * a1, gp + h2 * b1, S + h2 * e1, zm, guard, side)
        a3, b3, c3, d3, e3, f3 = _point_rates(L + h2 * a2, gp + h2 * b2, S + h2 * e2, zm, guard, side)
        a4, b4, c4, d4, e4, f4 = _point_rates(L + h * a3, gp + h * b3, S + h * e3, z1, guard, side)
        out.append((
            L + h6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            gp + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
            pre + h6 * (c1 + 2.0 * c2 + 2.0 * c3 + c4),
            schw + h6 * (d1 + 2.0 * d2 + 2.0 * d3 + d4),
            S + h6 * (e1 + 2.0 * e2 + 2.0 * e3 + e4),
            kint + h6 * (f1 + 2.0 * f2 + 2.0 * f3 + f4),
        ))
    return out


def _rk4_force_point(Xi, Z0, dZ, dt, guard):
    def rate(x, z):
        gap = x - z
        if abs(gap) < guard:
            raise StepRejected("force point guard tripped inside step")
        return 2.0 / gap

    k1 = rate(Xi, Z0)
    k2 = rate(Xi + 0.5 * dt * k1, Z0 + 0.5 * dZ)
    k3 = rate(Xi + 0.5 * dt * k2, Z0 + 0.5 * dZ)
    k4 = rate(Xi + dt * k3, Z0 + dZ)
    return Xi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def advance_flow(
    state: LoewnerState, dZ: float, dB: float, dt: float, dXi: float | None = None
) -> LoewnerState:
    """Advance every tracked quantity by one RK4 step of length ``dt``.

    ``Z`` moves linearly by ``dZ`` across the step. If a force point is
    tracked and ``dXi`` is given, it moves linearly by ``dXi`` (driving
    supplied); otherwise it follows the Loewner flow as a marked point.
    """
    if state.stopped:
        raise Stopped(state.stop_reason)
    if dt < 0:
        raise InvalidSpec("dt must be nonnegative")
    if dt == 0:
        return state
    Z0 = state.Z
    y = list(zip(state.Lam.tolist(), state.gprime.tolist(), state.pre.tolist(), state.schw.tolist(),
                 state.S.tolist(), state.kint.tolist()))
    y = _rk4_points(state.lam, y, Z0, dZ, dt, state.guard)
    Z1 = Z0 + dZ
    if state.Xi is None:
        Xi1 = None
    elif dXi is None:
        Xi1 = _rk4_force_point(state.Xi, Z0, dZ, dt, state.guard)
    else:
        Xi1 = state.Xi + dXi
    arr = np.array(y, dtype=complex).reshape(state.n, 6).T
    new = LoewnerState(state.t + dt, Z1, state.B + dB, state.lam, arr[0], arr[1], arr[2], arr[3], arr[4],
                       arr[5], state.s0, state.guard, Xi1, state.xi0)
    if any(abs(p[0] - Z1) < state.guard for p in y):
        return new.with_stop(SWALLOW)
    if Xi1 is not None:
        gap = Xi1 - Z1
        if abs(gap) < state.guard or np.sign(gap) != np.sign(state.xi0):
            return new.with_stop(CONTINUATION_THRESHOLD)
    return new


def evolve_birkhoff_general(state: LoewnerState, i: int, k: int, s_ik: complex) -> complex:
    """Rank-k Birkhoff value via the exponential of the kernel integral."""
    if not 0 <= i < state.n:
        raise IndexOutOfRange(f"puncture index {i} outside 0..{state.n - 1}")
    if k < 1:
        raise IndexOutOfRange("rank k must be >= 1")
    if k == 1 and state.s0[i] == s_ik:
        return complex(state.S[i])
    return complex(s_ik * np.exp(-2.0 * k * state.kint[i]))


def _advance_refined(state, dZ, dB, dt, dXi, depth):
    """Advance, bisecting the step on rejection. Returns (state, completed)."""
    try:
        return advance_flow(state, dZ, dB, dt, dXi), True
    except StepRejected:
        if depth >= MAX_REFINE_DEPTH:
            return state, False
    half_xi = None if dXi is None else dXi / 2
    mid, ok = _advance_refined(state, dZ / 2, dB / 2, dt / 2, half_xi, depth + 1)
    if not ok or mid.stopped:
        return mid, ok
    return _advance_refined(mid, dZ / 2, dB / 2, dt / 2, half_xi, depth + 1)


def run_trajectory(
    spec: DrivingSpec,
    lam: Sequence[complex],
    s: Sequence[complex],
    *,
    guard_factor: float = DEFAULT_GUARD_FACTOR,
    path: DrivingPath | None = None,
) -> list[LoewnerState]:
    """States on every grid time until ``T`` or the first stopping event.

    A step rejected by the swallow guard is bisected; if the guard still
    trips at the finest level, the last good state is marked ``SWALLOW``.
    """
    xi0 = spec.xi0 if spec.kind is DrivingKind.SLE_KAPPA_RHO else None
    state = initial_state(lam, s, xi0=xi0, guard_factor=guard_factor)
    if path is None:
        path = sample_driving(spec)
    states = [state]
    for k in range(path.dB.size):
        dXi = None if path.Xi is None else path.Xi[k + 1] - path.Xi[k]
        dt = path.t[k + 1] - path.t[k]
        state, ok = _advance_refined(state, path.Z[k + 1] - path.Z[k], path.dB[k], dt, dXi, 0)
        if not ok:
            state = state.with_stop(SWALLOW)
        states.append(state)
        if state.stopped:
            break
    return states


def trajectory_csv(states: Sequence[LoewnerState]) -> str:
    """CSV text with one row per state; fixed float formatting."""
    if not states:
        raise ValueError("empty trajectory")
    n = states[0].n
    cols = ["t", "Z", "B"]
    has_xi = states[0].Xi is not None
    if has_xi:
        cols.append("Xi")
    for i in range(n):
        for name in ("Lambda", "gprime", "pre", "schw", "S"):
            cols += [f"{name}{i}_re", f"{name}{i}_im"]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for st in states:
        row = [st.t, st.Z, st.B]
        if has_xi:
            row.append(st.Xi)
        for i in range(n):
            for arr in (st.Lam, st.gprime, st.pre, st.schw, st.S):
                row += [arr[i].real, arr[i].imag]
        buf.write(",".join(fmt_float(v) for v in row) + "\n")
    return buf.getvalue()


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")
