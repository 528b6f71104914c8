"""Irregular observables along Loewner paths, drift ledger and Monte Carlo.

The observable is ``M_t = F_t tau_t Y_t`` (or ``F_t tau_t Ytilde_t^-1 Y_t``
with a force point), where ``Y_t = Y(Z_t; Lambda_t, S_t)`` solves the
linear system of a Lax family co-moving with the Loewner flow.

One step couples everything in a single scheme: the Loewner quantities,
the family coefficients, ``log F``, ``log tau``, the drift part of ``Y``
and ``Ytilde^-1`` advance by one joint RK4 step with ``Z`` linear across
the step; the Brownian part of ``Y`` is then applied as the Euler-Maruyama
factor ``(Id + sqrt(kappa) A(Z_n) dB)``.

The Ito drift of ``Y`` is
``(kappa/2)(A' + A^2) + A c + sum U_i Lambda_i' + sum V_i S_i'`` with ``c``
the drift of ``Z`` (zero unless a force point acts). At ``kappa = 4`` it
collapses to ``Tr(A^2) Id + A c``. For general ``kappa`` the drift of ``M``
is ``[(kappa/4) Tr A^2 + rateF + rateTau] Id + (kappa/2 - 2) A'``, which is
what the ledger reports.

All engine arrays carry a leading path axis so the same kernel runs a
single trajectory or a whole Monte Carlo batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from ._rk4 import rk4_step
from .algebra import IDENTITY, Mat2C, frobenius
from .errors import InvalidConfig, Stopped, ZeroBirkhoff
from .isomonodromy import (
    LaxFamily,
    deformation_U_arrays,
    deformation_V_arrays,
    ell_arrays,
    hamiltonians_arrays,
    lax_arrays,
    lax_dz_arrays,
    schlesinger_arrays,
)
from .loewner import (
    CONTINUATION_THRESHOLD,
    DEFAULT_GUARD_FACTOR,
    MAX_RELATIVE_MOVE,
    SWALLOW,
    DrivingBatch,
    DrivingKind,
    DrivingSpec,
    LoewnerState,
    flow_rates,
    initial_state,
    sample_driving_batch,
)

MIN_PATHS = 100


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class DriftLedger:
    trA2: complex
    rateF: complex
    rateTau: complex
    residual: complex
    kappa: float = 4.0
    traceless_defect: float = 0.0

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / max(1.0, abs(self.trA2))


@dataclass(frozen=True)
class MartingaleState:
    t: float
    Y: Mat2C
    logF: complex
    logTau: complex
    M: Mat2C
    ledger: DriftLedger
    Ytilde_inv: Mat2C | None = None

    @property
    def trace(self) -> complex:
        return complex(self.M[0, 0] + self.M[1, 1])


def _assemble(logF, logTau, Y, Yti):
    core = Y if Yti is None else Yti @ Y
    return np.exp(logF + logTau)[..., None, None] * core


# ---------------------------------------------------------------------------
# rates on single states


def _check_live(lo: LoewnerState) -> None:
    if lo.stopped:
        raise Stopped(lo.stop_reason)


def covariance_rate_arrays(Lam, Z, S, alpha):
    w = Lam - np.asarray(Z)[..., None]
    iw = 1.0 / w
    iw2 = iw * iw
    return -2.0 * np.sum(alpha**2 * iw2 + S**2 * iw2 * iw2 - 2.0 * alpha * S * iw2 * iw, axis=-1)


def tau_rate_arrays(Lam, Z, S, A0, A1):
    w = Lam - np.asarray(Z)[..., None]
    ell = ell_arrays(Lam, A0, A1)
    h_lam, h_s = hamiltonians_arrays(ell, S)
    return np.sum(h_lam * (2.0 / w) + h_s * (-2.0 * S / w**2), axis=-1)


def covariance_rate(lo: LoewnerState, fam: LaxFamily) -> complex:
    """d log F / dt with alpha taken from the family."""
    _check_live(lo)
    if lo.n == 0:
        return 0j
    return complex(covariance_rate_arrays(lo.Lam, lo.Z, lo.S, fam.alpha))


def covariance_factor_parts(gprime_log, pre, schw, alpha, s):
    """log F = sum alpha^2 log g' + s^2 schw/6 + s alpha pre (s the initial Birkhoff value)."""
    return np.sum(alpha**2 * gprime_log + s**2 * schw / 6.0 + s * alpha * pre, axis=-1)


def covariance_factor(lo: LoewnerState, alpha, s=None) -> complex:
    """Closed-form F from the geometric derivatives at the punctures.

    ``log g'`` is taken as ``-2 kint`` so the branch follows the flow.
    """
    if lo.n == 0:
        return 1.0 + 0j
    alpha = np.asarray(alpha, dtype=complex).reshape(lo.n)
    s = lo.s0 if s is None else np.asarray(s, dtype=complex).reshape(lo.n)
    return complex(np.exp(covariance_factor_parts(-2.0 * lo.kint, lo.pre, lo.schw, alpha, s)))


def tau_rate(lo: LoewnerState, fam: LaxFamily) -> complex:
    """d log tau / dt = sum l1/w - l2/w^2 + l3^2/(8 S^2 w^2) with w = Lambda - Z."""
    _check_live(lo)
    if lo.n == 0:
        return 0j
    if np.any(lo.S == 0):
        raise ZeroBirkhoff("tau rate needs nonzero Birkhoff values")
    w = lo.Lam - lo.Z
    ell = ell_arrays(fam.lam, fam.A0, fam.A1)
    return complex(np.sum(ell[:, 0] / w - ell[:, 1] / w**2 + ell[:, 2] ** 2 / (8.0 * lo.S**2 * w**2)))


def drift_ledger(lo: LoewnerState, fam: LaxFamily, kappa: float = 4.0) -> DriftLedger:
    """Scalar drift of M: (kappa/4) Tr A(Z)^2 + rateF + rateTau.

    At kappa = 4 this is Tr A^2 + rateF + rateTau. The matrix part of the
    drift, (kappa/2 - 2) A'(Z), is reported as ``traceless_defect``.
    """
    _check_live(lo)
    if lo.n == 0:
        return DriftLedger(0j, 0j, 0j, 0j, kappa, 0.0)
    A = lax_arrays(fam.lam, fam.A0, fam.A1, lo.Z)
    tr = complex(np.trace(A @ A))
    rf = covariance_rate(lo, fam)
    rt = tau_rate(lo, fam)
    defect = abs(kappa / 2.0 - 2.0) * float(frobenius(lax_dz_arrays(fam.lam, fam.A0, fam.A1, lo.Z)))
    return DriftLedger(tr, rf, rt, kappa / 4.0 * tr + rf + rt, kappa, defect)


# ---------------------------------------------------------------------------
# coupled engine


def _joint_rhs(y, Z, c, Xi, kappa, alpha, track_xi):
    """Time derivatives of the joint state at driving value Z (per path)."""
    Lam, S, A0, A1 = y["Lam"], y["S"], y["A0"], y["A1"]
    r = flow_rates(Lam, y["gp"], S, Z)
    dLam, dS = r["Lam"], r["S"]
    dA0, dA1 = schlesinger_arrays(Lam, A0, A1, S, dLam, dS)
    out = {
        "Lam": dLam,
        "gp": r["gp"],
        "pre": r["pre"],
        "schw": r["schw"],
        "S": dS,
        "kint": r["kint"],
        "A0": dA0,
        "A1": dA1,
        "logF": covariance_rate_arrays(Lam, Z, S, alpha),
        "logTau": tau_rate_arrays(Lam, Z, S, A0, A1),
    }
    A = lax_arrays(Lam, A0, A1, Z)
    Ad = lax_dz_arrays(Lam, A0, A1, Z)
    U = deformation_U_arrays(Lam, A0, A1, Z)
    V = deformation_V_arrays(Lam, A1, S, Z)
    drift = (
        0.5 * kappa * (Ad + A @ A)
        + A * c[..., None, None]
        + np.einsum("...i,...iab->...ab", dLam, U)
        + np.einsum("...i,...iab->...ab", dS, V)
    )
    out["Y"] = drift @ y["Y"]
    if track_xi:
        Ax = lax_arrays(Lam, A0, A1, Xi)
        Ux = deformation_U_arrays(Lam, A0, A1, Xi)
        Vx = deformation_V_arrays(Lam, A1, S, Xi)
        gen = (
            Ax * c[..., None, None]
            + np.einsum("...i,...iab->...ab", dLam, Ux)
            + np.einsum("...i,...iab->...ab", dS, Vx)
        )
        out["Yti"] = -y["Yti"] @ gen
    return out


@dataclass
class EngineState:
    """Joint per-path state; every array has the path axis first."""

    t: float
    Z: NDArray[np.float64]
    Xi: NDArray[np.float64] | None
    y: dict
    alpha: NDArray[np.complex128]
    s0: NDArray[np.complex128]
    active: NDArray[np.bool_]
    reason: NDArray[np.object_]

    @property
    def M(self):
        return _assemble(self.y["logF"], self.y["logTau"], self.y["Y"], self.y.get("Yti"))


def engine_init(fam: LaxFamily, paths: int, xi0: float | None = None) -> EngineState:
    n = fam.n
    if n and np.any(fam.s == 0):
        raise ZeroBirkhoff("observable needs nonzero Birkhoff values")
    tile = lambda a: np.tile(np.asarray(a)[None], (paths,) + (1,) * np.asarray(a).ndim)  # noqa: E731
    y = {
        "Lam": tile(fam.lam),
        "gp": np.ones((paths, n), dtype=complex),
        "pre": np.zeros((paths, n), dtype=complex),
        "schw": np.zeros((paths, n), dtype=complex),
        "S": tile(fam.s),
        "kint": np.zeros((paths, n), dtype=complex),
        "A0": tile(fam.A0),
        "A1": tile(fam.A1),
        "logF": np.zeros(paths, dtype=complex),
        "logTau": np.zeros(paths, dtype=complex),
        "Y": tile(IDENTITY),
    }
    Xi = None
    if xi0 is not None:
        y["Yti"] = tile(IDENTITY)
        Xi = np.full(paths, float(xi0))
    alpha = tile(fam.alpha) if n else np.zeros((paths, 0), dtype=complex)
    return EngineState(
        t=0.0,
        Z=np.zeros(paths),
        Xi=Xi,
        y=y,
        alpha=alpha,
        s0=tile(fam.s),
        active=np.ones(paths, dtype=bool),
        reason=np.full(paths, None, dtype=object),
    )


@dataclass
class StepDiagnostics:
    ledger: NDArray[np.complex128]
    ledger_relative: NDArray[np.float64]
    trA2: NDArray[np.complex128]
    rateF: NDArray[np.complex128]
    rateTau: NDArray[np.complex128]
    traceless_defect: NDArray[np.float64]
    alpha_drift: NDArray[np.float64]


def engine_diagnostics(st: EngineState, kappa: float) -> StepDiagnostics:
    y = st.y
    P = st.Z.size
    if y["Lam"].shape[-1] == 0:
        z = np.zeros(P)
        zc = z.astype(complex)
        return StepDiagnostics(zc, z, zc, zc, zc, z, z)
    A = lax_arrays(y["Lam"], y["A0"], y["A1"], st.Z)
    tr = np.trace(A @ A, axis1=-2, axis2=-1)
    rf = covariance_rate_arrays(y["Lam"], st.Z, y["S"], st.alpha)
    rt = tau_rate_arrays(y["Lam"], st.Z, y["S"], y["A0"], y["A1"])
    res = kappa / 4.0 * tr + rf + rt
    defect = abs(kappa / 2.0 - 2.0) * frobenius(lax_dz_arrays(y["Lam"], y["A0"], y["A1"], st.Z))
    alpha_now = np.einsum("...iab,...iba->...i", y["A0"], y["A1"]) / (2.0 * y["S"])
    drift = np.max(np.abs(alpha_now - st.alpha), axis=-1)
    return StepDiagnostics(res, np.abs(res) / np.maximum(1.0, np.abs(tr)), tr, rf, rt, defect, drift)


def engine_step(
    st: EngineState,
    dZ: NDArray[np.float64],
    dB: NDArray[np.float64],
    dt: float,
    kappa: float,
    dXi: NDArray[np.float64] | None = None,
    substeps: int = 1,
) -> EngineState:
    """Advance every active path by one driving step; inactive paths stay frozen.

    The deterministic part takes ``substeps`` RK4 steps along the same
    linear driving segment, so refining it leaves the driving untouched.
    """
    P = st.Z.size
    track_xi = st.Xi is not None
    c = np.zeros(P) if dXi is None else dXi / dt
    Z0, Xi0 = st.Z, st.Xi
    h = dt / substeps

    def stage(j):
        def f(theta, y):
            u = (j + theta) / substeps
            Z = Z0 + u * dZ
            Xi = None if not track_xi else Xi0 + u * dXi
            return _joint_rhs(y, Z, c, Xi, kappa, st.alpha, track_xi)

        return f

    with np.errstate(all="ignore"):
        A_start = lax_arrays(st.y["Lam"], st.y["A0"], st.y["A1"], Z0)
        new = st.y
        for j in range(substeps):
            new = rk4_step(stage(j), new, h)
        new = dict(new)
        kick = IDENTITY + math.sqrt(kappa) * A_start * dB[:, None, None]
        new["Y"] = kick @ new["Y"]
    act = st.active
    y = {k: np.where(act.reshape((P,) + (1,) * (v.ndim - 1)), new[k], v) for k, v in st.y.items()}
    Z = np.where(act, Z0 + dZ, Z0)
    Xi = None if not track_xi else np.where(act, Xi0 + dXi, Xi0)
    return EngineState(st.t + dt, Z, Xi, y, st.alpha, st.s0, act.copy(), st.reason.copy())


def engine_stop_checks(st: EngineState, dt: float, guard: float) -> None:
    """Stop paths whose next step would be too coarse near a puncture.

    A path stops (SWALLOW) once some |Lambda_i - Z| drops below
    max(guard, sqrt(2 dt / MAX_RELATIVE_MOVE)). The rule only uses the
    current state, so it defines a stopping time.
    """
    if st.y["Lam"].shape[-1] == 0:
        return
    near = max(guard, math.sqrt(2.0 * dt / MAX_RELATIVE_MOVE))
    dist = np.min(np.abs(st.y["Lam"] - st.Z[:, None]), axis=-1)
    hit = st.active & ~(dist >= near)
    st.reason[hit] = SWALLOW
    st.active &= ~hit


@dataclass
class EngineRun:
    final: EngineState
    ledger_max_relative: float
    ledger_max_abs: float
    traceless_defect_max: float
    alpha_max_drift: float
    stop_index: NDArray[np.int64]
    history: list | None = None


def run_engine(
    fam: LaxFamily,
    drive: DrivingBatch,
    kappa: float,
    *,
    guard: float,
    xi0: float | None = None,
    record: bool = False,
    substeps: int = 1,
) -> EngineRun:
    """Co-integrate all paths of ``drive`` until T or their stopping time.

    A force-point path is advanced through the step on which it reaches
    the threshold and stops right after it.
    """
    P = drive.paths
    st = engine_init(fam, P, xi0)
    dt = float(drive.t[1] - drive.t[0])
    n_steps = drive.dB.shape[1]
    stop_index = np.full(P, n_steps, dtype=np.int64)
    led_rel = led_abs = defect = adrift = 0.0
    history = [] if record else None
    for k in range(n_steps + 1):
        with np.errstate(all="ignore"):
            diag = engine_diagnostics(st, kappa)
        act = st.active.copy()
        if np.any(act):
            led_rel = max(led_rel, float(np.max(diag.ledger_relative[act])))
            led_abs = max(led_abs, float(np.max(np.abs(diag.ledger[act]))))
            defect = max(defect, float(np.max(diag.traceless_defect[act])))
            adrift = max(adrift, float(np.max(diag.alpha_drift[act])))
        if record:
            history.append((st.t, st.Z.copy(), None if st.Xi is None else st.Xi.copy(),
                            {key: v.copy() for key, v in st.y.items()}, diag, st.active.copy()))
        if k == n_steps:
            break
        if xi0 is not None:
            crossed = st.active & (drive.threshold_index <= k)
            st.reason[crossed] = CONTINUATION_THRESHOLD
            st.active &= ~crossed
        engine_stop_checks(st, dt, guard)
        stop_index[st.active ^ act] = k
        if not np.any(st.active):
            break
        dXi = None if drive.Xi is None else drive.Xi[:, k + 1] - drive.Xi[:, k]
        st = engine_step(st, drive.Z[:, k + 1] - drive.Z[:, k], drive.dB[:, k], dt, kappa, dXi, substeps)
        if not np.all(np.isfinite(st.y["Y"][st.active])):
            bad = st.active & ~np.all(np.isfinite(st.y["Y"]), axis=(-2, -1))
            raise Stopped(f"non-finite observable on {int(bad.sum())} paths")
    return EngineRun(st, led_rel, led_abs, defect, adrift, stop_index, history)


# ---------------------------------------------------------------------------
# single-path stepping on the public value types


def initial_martingale_state(lo: LoewnerState, fam: LaxFamily, kappa: float = 4.0) -> MartingaleState:
    ledger = drift_ledger(lo, fam, kappa)
    Yti = IDENTITY.copy() if lo.Xi is not None else None
    return MartingaleState(lo.t, IDENTITY.copy(), 0j, 0j, IDENTITY.copy(), ledger, Yti)


def _pack(ms: MartingaleState, lo: LoewnerState, fam: LaxFamily) -> EngineState:
    y = {
        "Lam": lo.Lam[None].copy(),
        "gp": lo.gprime[None].copy(),
        "pre": lo.pre[None].copy(),
        "schw": lo.schw[None].copy(),
        "S": lo.S[None].copy(),
        "kint": lo.kint[None].copy(),
        "A0": fam.A0[None].copy(),
        "A1": fam.A1[None].copy(),
        "logF": np.array([ms.logF]),
        "logTau": np.array([ms.logTau]),
        "Y": ms.Y[None].copy(),
    }
    Xi = None
    if ms.Ytilde_inv is not None:
        y["Yti"] = ms.Ytilde_inv[None].copy()
        Xi = np.array([lo.Xi])
    alpha = fam.alpha[None] if fam.n else np.zeros((1, 0), dtype=complex)
    return EngineState(lo.t, np.array([lo.Z]), Xi, y, alpha, lo.s0[None],
                       np.ones(1, dtype=bool), np.full(1, None, dtype=object))


def step_observable(
    ms: MartingaleState,
    lo: LoewnerState,
    fam: LaxFamily,
    dB: float,
    dt: float,
    *,
    kappa: float = 4.0,
    dZ: float | None = None,
    dXi: float | None = None,
) -> tuple[MartingaleState, LoewnerState, LaxFamily]:
    """One coupled step; returns the advanced observable, flow state and family.

    ``dZ`` defaults to ``sqrt(kappa) dB + dXi``. The observable is only
    defined along the flow, so the three values advance together.
    """
    _check_live(lo)
    if dt == 0 and dB == 0:
        return ms, lo, fam
    dXi_v = 0.0 if dXi is None else float(dXi)
    if dZ is None:
        dZ = math.sqrt(kappa) * dB + dXi_v
    st = _pack(ms, lo, fam)
    st = engine_step(st, np.array([dZ]), np.array([dB]), dt, kappa,
                     None if ms.Ytilde_inv is None else np.array([dXi_v]))
    y = st.y
    lo2 = replace(
        lo,
        t=lo.t + dt,
        Z=lo.Z + dZ,
        B=lo.B + dB,
        Lam=y["Lam"][0],
        gprime=y["gp"][0],
        pre=y["pre"][0],
        schw=y["schw"][0],
        S=y["S"][0],
        kint=y["kint"][0],
        Xi=None if lo.Xi is None else lo.Xi + dXi_v,
    )
    fam2 = LaxFamily(y["Lam"][0], y["A0"][0], y["A1"][0], y["S"][0], fam.regular_at_infinity)
    if lo2.n and np.min(np.abs(lo2.Lam - lo2.Z)) < lo.guard:
        lo2 = lo2.with_stop(SWALLOW)
    elif lo2.Xi is not None:
        gap = lo2.Xi - lo2.Z
        if abs(gap) < lo.guard or np.sign(gap) != np.sign(lo.xi0):
            lo2 = lo2.with_stop(CONTINUATION_THRESHOLD)
    ledger = drift_ledger(lo2, fam2, kappa) if not lo2.stopped else ms.ledger
    Yti = None if ms.Ytilde_inv is None else y["Yti"][0]
    logF, logTau = complex(y["logF"][0]), complex(y["logTau"][0])
    M = _assemble(np.array(logF), np.array(logTau), y["Y"][0], Yti)
    return MartingaleState(lo2.t, y["Y"][0], logF, logTau, M, ledger, Yti), lo2, fam2


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class MCConfig:
    family: LaxFamily
    driving: DrivingSpec
    paths: int
    guard_factor: float = DEFAULT_GUARD_FACTOR

    def __post_init__(self) -> None:
        if self.paths < MIN_PATHS:
            raise InvalidConfig(f"need at least {MIN_PATHS} paths, got {self.paths}")
        if self.driving.kind not in (DrivingKind.BROWNIAN, DrivingKind.SLE_KAPPA_RHO):
            raise InvalidConfig("Monte Carlo needs BROWNIAN or SLE_KAPPA_RHO driving")
        if self.driving.kappa <= 0:
            raise InvalidConfig("Monte Carlo needs kappa > 0")


def _stderr(x: NDArray[np.complex128]) -> float:
    n = x.shape[0]
    dev = np.abs(x - x.mean(axis=0)) ** 2
    return np.sqrt(dev.sum(axis=0) / (n - 1)) / np.sqrt(n)


@dataclass(frozen=True)
class MCResult:
    N: int
    T: float
    dt: float
    seed: int
    kappa: float
    mean: Mat2C
    stderr: NDArray[np.float64]
    trace_mean: complex
    trace_stderr: float
    trace_reference: complex
    stopped_fraction: float
    ledger_max_residual: float
    traceless_defect_max: float
    alpha_max_drift: float
    force_point: float | None = None

    @property
    def deviation(self) -> float:
        return abs(self.trace_mean - self.trace_reference)

    @property
    def passed(self) -> bool:
        return self.deviation <= 3.0 * self.trace_stderr

    def to_json(self) -> dict:
        def cx(z):
            return [float(np.real(z)), float(np.imag(z))]

        names = ("11", "12", "21", "22")
        mean = {k: cx(v) for k, v in zip(names, self.mean.reshape(-1))}
        mean["trace"] = cx(self.trace_mean)
        err = {k: float(v) for k, v in zip(names, np.asarray(self.stderr).reshape(-1))}
        err["trace"] = float(self.trace_stderr)
        return {
            "N": self.N,
            "T": self.T,
            "dt": self.dt,
            "seed": self.seed,
            "kappa": self.kappa,
            "force_point": self.force_point,
            "mean": mean,
            "stderr": err,
            "trace_reference": cx(self.trace_reference),
            "deviation": self.deviation,
            "stopped_fraction": self.stopped_fraction,
            "ledger_max_residual": self.ledger_max_residual,
            "traceless_defect_max": self.traceless_defect_max,
            "alpha_max_drift": self.alpha_max_drift,
            "martingale_check": "passed" if self.passed else "martingale check failed",
        }


def mc_expectation(config: MCConfig) -> MCResult:
    """Sample mean and standard error of the stopped observable at T."""
    spec = config.driving
    fam = config.family
    xi0 = spec.xi0 if spec.kind is DrivingKind.SLE_KAPPA_RHO else None
    guard = initial_state(fam.lam, fam.s, xi0=xi0, guard_factor=config.guard_factor).guard
    drive = sample_driving_batch(spec, config.paths, guard=None)
    run = run_engine(fam, drive, spec.kappa, guard=guard, xi0=xi0)
    M = run.final.M
    trM = M[:, 0, 0] + M[:, 1, 1]
    return MCResult(
        N=config.paths,
        T=spec.T,
        dt=spec.dt,
        seed=spec.seed,
        kappa=spec.kappa,
        mean=M.mean(axis=0),
        stderr=_stderr(M),
        trace_mean=complex(trM.mean()),
        trace_stderr=float(_stderr(trM)),
        trace_reference=2.0 + 0j,
        stopped_fraction=float(np.mean(~run.final.active)),
        ledger_max_residual=run.ledger_max_relative,
        traceless_defect_max=run.traceless_defect_max,
        alpha_max_drift=run.alpha_max_drift,
        force_point=xi0,
    )


@dataclass(frozen=True)
class RhoTrajectory:
    t: NDArray[np.float64]
    Z: NDArray[np.float64]
    Xi: NDArray[np.float64]
    value: NDArray[np.complex128]
    stop_reason: str | None
    ledger_max_residual: float


def sle4_rho_observable(spec: DrivingSpec, fam: LaxFamily, path_index: int = 0,
                        guard_factor: float = DEFAULT_GUARD_FACTOR) -> RhoTrajectory:
    """Tr(Ytilde^-1 Y) F tau along one SLE(kappa, rho) path until it stops."""
    if spec.kind is not DrivingKind.SLE_KAPPA_RHO:
        raise InvalidConfig("force-point observable needs SLE_KAPPA_RHO driving")
    guard = initial_state(fam.lam, fam.s, xi0=spec.xi0, guard_factor=guard_factor).guard
    full = sample_driving_batch(spec, path_index + 1)
    drive = DrivingBatch(full.t, full.Z[path_index:][:1], full.dB[path_index:][:1],
                         full.Xi[path_index:][:1], full.threshold_index[path_index:][:1])
    run = run_engine(fam, drive, spec.kappa, guard=guard, xi0=spec.xi0, record=True)
    ts, Zs, Xis, vals = [], [], [], []
    for t, Z, Xi, y, _diag, active in run.history:
        M = _assemble(y["logF"], y["logTau"], y["Y"], y["Yti"])
        ts.append(t)
        Zs.append(Z[0])
        Xis.append(Xi[0])
        vals.append(M[0, 0, 0] + M[0, 1, 1])
        if not active[0]:
            break
    return RhoTrajectory(np.array(ts), np.array(Zs), np.array(Xis), np.array(vals),
                         run.final.reason[0], run.ledger_max_relative)
