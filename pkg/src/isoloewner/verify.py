"""PDE-level and Lie-algebraic checks of the observables.

* Confluent BPZ residuals of ``Z = tau Tr Y`` by centered differences.
* The force-point variant for ``Z = tau Tr(Y(xi)^-1 Y(z))``.
* The bracket-condition determinant, a confluent Vandermonde matrix.
* A cross-module suite that reruns the main consistency checks.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import (
    DegenerateInput,
    InvalidFamily,
    IsoLoewnerError,
    StencilTooCoarse,
)
from .isomonodromy import (
    LaxFamily,
    advance_isomonodromy,
    deform,
    family_from_dict,
    integrate_Y_in_z,
)
from .loewner import DrivingKind, DrivingSpec, fmt_float, run_trajectory, sample_driving_batch
from .martingale import covariance_factor_parts, run_engine

STENCIL_MARGIN = 10.0
RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# observable grids


@dataclass(frozen=True)
class ObservableGrid:
    """Values of an observable at a centered stencil around a base point.

    Keys: ``c`` (centre), ``z+``/``z-``, ``xi+``/``xi-``, ``lam{i}+``/``lam{i}-``
    and ``s{i}+``/``s{i}-``. Parameter nodes shift by ``h_param`` along the
    real axis, which is enough for functions holomorphic in each parameter.
    """

    z0: complex
    lam: NDArray[np.complex128]
    s: NDArray[np.complex128]
    h_z: float
    h_param: float
    values: Mapping[str, complex]
    xi: complex | None = None


def _check_stencil(z0, lam, h, xi=None) -> None:
    dists = [abs(z0 - l) for l in lam]
    if xi is not None:
        dists.append(abs(z0 - xi))
    if dists and STENCIL_MARGIN * h > min(dists):
        raise StencilTooCoarse(f"step {h:g} is within {STENCIL_MARGIN:g}x of a pole distance {min(dists):.3g}")


def grid_from_function(
    fn: Callable[..., complex],
    z0: complex,
    lam: Sequence[complex],
    s: Sequence[complex],
    h: float,
    xi: complex | None = None,
) -> ObservableGrid:
    """Stencil of ``fn(z, lam, s)`` (or ``fn(z, lam, s, xi)`` with a force point)."""
    lam = np.asarray(lam, dtype=complex)
    s = np.asarray(s, dtype=complex)
    _check_stencil(z0, lam, h, xi)

    def ev(z=z0, la=lam, sv=s, x=xi):
        return complex(fn(z, la, sv) if xi is None else fn(z, la, sv, x))

    vals = {"c": ev(), "z+": ev(z=z0 + h), "z-": ev(z=z0 - h)}
    if xi is not None:
        vals["xi+"] = ev(x=xi + h)
        vals["xi-"] = ev(x=xi - h)
    for i in range(lam.size):
        e = np.zeros(lam.size)
        e[i] = h
        vals[f"lam{i}+"] = ev(la=lam + e)
        vals[f"lam{i}-"] = ev(la=lam - e)
        vals[f"s{i}+"] = ev(sv=s + e)
        vals[f"s{i}-"] = ev(sv=s - e)
    return ObservableGrid(complex(z0), lam, s, h, h, vals, xi)


def tabulate_observable(
    fam: LaxFamily,
    z0: complex,
    h: float,
    *,
    z_base: complex,
    xi: complex | None = None,
    steps: int = 400,
    deform_steps: int = 64,
) -> ObservableGrid:
    """Tabulate ``tau Tr Y`` (or ``tau Tr(Y(xi)^-1 Y(z))``) on the stencil.

    ``Y`` is normalized to the identity at ``z_base`` for the base
    parameters. A parameter node is reached by deforming the family at
    fixed ``z_base`` (which also accumulates log tau), then ``Y`` is carried
    along the segment from ``z_base`` with a fixed number of RK4 steps so
    that its error varies smoothly between nodes.
    """
    _check_stencil(z0, fam.lam, h, xi)

    def at_params(lam, s):
        if np.array_equal(lam, fam.lam) and np.array_equal(s, fam.s):
            return fam, 0j, np.eye(2, dtype=complex)
        f2, logtau, Yb = deform(fam, lam, s, deform_steps, z=z_base)
        return f2, logtau, Yb

    def observable(f2, logtau, Yb, z, x):
        Yz = integrate_Y_in_z(f2, [z_base, z], Yb, steps=steps)
        if x is None:
            return complex(np.exp(logtau) * np.trace(Yz))
        Yx = integrate_Y_in_z(f2, [z_base, x], Yb, steps=steps)
        return complex(np.exp(logtau) * np.trace(np.linalg.solve(Yx, Yz)))

    centre = at_params(fam.lam, fam.s)
    vals = {
        "c": observable(*centre, z0, xi),
        "z+": observable(*centre, z0 + h, xi),
        "z-": observable(*centre, z0 - h, xi),
    }
    if xi is not None:
        vals["xi+"] = observable(*centre, z0, xi + h)
        vals["xi-"] = observable(*centre, z0, xi - h)
    for i in range(fam.n):
        e = np.zeros(fam.n)
        e[i] = h
        vals[f"lam{i}+"] = observable(*at_params(fam.lam + e, fam.s), z0, xi)
        vals[f"lam{i}-"] = observable(*at_params(fam.lam - e, fam.s), z0, xi)
        vals[f"s{i}+"] = observable(*at_params(fam.lam, fam.s + e), z0, xi)
        vals[f"s{i}-"] = observable(*at_params(fam.lam, fam.s - e), z0, xi)
    return ObservableGrid(complex(z0), fam.lam.copy(), fam.s.copy(), h, h, vals, xi)


def _operator_terms(grid: ObservableGrid, alpha, s) -> complex:
    """d^2_z Z - sum_i [d_lam Z/w + s d_s Z/w^2 + (alpha^2/w^2 + 2 s alpha/w^3 + s^2/w^4) Z]."""
    v = grid.values
    hz, hp = grid.h_z, grid.h_param
    zc = v["c"]
    total = (v["z+"] - 2.0 * zc + v["z-"]) / hz**2
    alpha = np.asarray(alpha, dtype=complex).reshape(grid.lam.size)
    s = np.asarray(s, dtype=complex).reshape(grid.lam.size)
    for i, lam in enumerate(grid.lam):
        w = grid.z0 - lam
        d_lam = (v[f"lam{i}+"] - v[f"lam{i}-"]) / (2.0 * hp)
        d_s = (v[f"s{i}+"] - v[f"s{i}-"]) / (2.0 * hp)
        pot = alpha[i] ** 2 / w**2 + 2.0 * s[i] * alpha[i] / w**3 + s[i] ** 2 / w**4
        total -= d_lam / w + s[i] * d_s / w**2 + pot * zc
    return complex(total)


def bpz_residual(grid: ObservableGrid, alpha, s) -> complex:
    """Confluent BPZ operator applied to the tabulated observable."""
    return _operator_terms(grid, alpha, s)


def forcepoint_pde_residual(grid: ObservableGrid, alpha, s) -> complex:
    """BPZ operator with the extra term -(d_z + d_xi) Z/(z - xi)."""
    if grid.xi is None:
        raise DegenerateInput("grid carries no force point")
    v = grid.values
    d_z = (v["z+"] - v["z-"]) / (2.0 * grid.h_z)
    d_xi = (v["xi+"] - v["xi-"]) / (2.0 * grid.h_z)
    return _operator_terms(grid, alpha, s) - complex((d_z + d_xi) / (grid.z0 - grid.xi))


def diagonal_derivative(fam: LaxFamily, z: complex, h: float, *, z_base: complex, steps: int = 400) -> complex:
    """(d_z + d_xi) of Tr(Y(xi)^-1 Y(z)) at xi = z, each by a centered difference."""
    Y = {p: integrate_Y_in_z(fam, [z_base, p], steps=steps) for p in (z - h, z, z + h)}

    def val(a, b):
        return complex(np.trace(np.linalg.solve(Y[b], Y[a])))

    d_z = (val(z + h, z) - val(z - h, z)) / (2.0 * h)
    d_xi = (val(z, z + h) - val(z, z - h)) / (2.0 * h)
    return d_z + d_xi


@dataclass(frozen=True)
class ResidualReport:
    h: NDArray[np.float64]
    residual: NDArray[np.complex128]
    order_estimate: NDArray[np.float64]
    fitted_order: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("h,residual_re,residual_im,order_estimate\n")
        for h, r, o in zip(self.h, self.residual, self.order_estimate):
            buf.write(f"{fmt_float(h)},{fmt_float(r.real)},{fmt_float(r.imag)},{fmt_float(o)}\n")
        return buf.getvalue()


def convergence_report(h: Sequence[float], residual: Sequence[complex]) -> ResidualReport:
    """Pairwise and least-squares orders of |residual| against h (NaN where undefined)."""
    h = np.asarray(h, dtype=float)
    r = np.asarray(residual, dtype=complex)
    mag = np.abs(r)
    order = np.full(h.size, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        order[1:] = np.log(mag[:-1] / mag[1:]) / np.log(h[:-1] / h[1:])
    fitted = float("nan")
    if h.size >= 2 and np.all(mag > 0):
        fitted = float(np.polyfit(np.log(h), np.log(mag), 1)[0])
    return ResidualReport(h, r, order, fitted)


def bpz_ladder(
    fam: LaxFamily,
    z0: complex,
    ladder: Sequence[float],
    *,
    z_base: complex,
    xi: complex | None = None,
    steps: int = 400,
    deform_steps: int = 64,
) -> ResidualReport:
    alpha = fam.alpha
    res = []
    for h in ladder:
        grid = tabulate_observable(fam, z0, h, z_base=z_base, xi=xi, steps=steps, deform_steps=deform_steps)
        res.append(bpz_residual(grid, alpha, fam.s) if xi is None else forcepoint_pde_residual(grid, alpha, fam.s))
    return convergence_report(ladder, res)


# ---------------------------------------------------------------------------
# bracket condition


EQUILIBRATION_SWEEPS = 200


def equilibrate(m: NDArray[np.complex128]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Row and column factors making every row and column of |m| unit-norm.

    Alternating 2-norm sweeps until the factors settle. The quotient
    ``m / (r c)`` is invariant under any row or column rescaling of ``m``.
    """
    a = np.abs(m)
    rows = np.ones(m.shape[0])
    cols = np.ones(m.shape[1])
    for _ in range(EQUILIBRATION_SWEEPS):
        r = np.linalg.norm(a, axis=1)
        a = a / r[:, None]
        rows *= r
        c = np.linalg.norm(a, axis=0)
        a = a / c[None, :]
        cols *= c
        if np.max(np.abs(r - 1.0)) < 1e-14 and np.max(np.abs(c - 1.0)) < 1e-14:
            break
    return rows, cols


@dataclass(frozen=True)
class HormanderMatrix:
    """Bracket-condition matrix with its equilibration.

    ``scale`` is the product of the row and column equilibration factors,
    so ``|det| / scale`` is the determinant of the equilibrated matrix and
    does not depend on how rows or columns are normalized.
    """

    entries: NDArray[np.complex128]
    dim: int
    row_factors: NDArray[np.float64]
    col_factors: NDArray[np.float64]

    @property
    def scale(self) -> float:
        return float(np.prod(self.row_factors) * np.prod(self.col_factors))

    @property
    def normalized(self) -> NDArray[np.complex128]:
        return self.entries / self.row_factors[:, None] / self.col_factors[None, :]


def hormander_matrix(z: float, xi: float, lam: Sequence[complex], s: Sequence[complex]) -> HormanderMatrix:
    """Rows l = 1..4n+1 of the commutator coefficients.

    Columns: (d_z + d_xi) -> 2/(xi-z)^(l+1); for each puncture d_lam,
    d_conj(lam) -> 2/(lam-z)^(l+1) and its conjugate node; d_s, d_conj(s)
    -> -2(l+1) s/(lam-z)^(l+2) and the conjugate analog.
    """
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    s = np.asarray(s, dtype=complex).reshape(-1)
    if lam.size != s.size:
        raise DegenerateInput("need one Birkhoff value per puncture")
    if z == xi:
        raise DegenerateInput("z and xi coincide")
    for i, l in enumerate(lam):
        if l == z or l == xi:
            raise DegenerateInput("a puncture coincides with z or xi")
        for j in range(i):
            if l == lam[j] or l == np.conj(lam[j]):
                raise DegenerateInput("puncture nodes coincide")
    dim = 4 * lam.size + 1
    ell = np.arange(1, dim + 1)[:, None]
    cols = [2.0 / (complex(xi) - z) ** (ell + 1)]
    for l, sv in zip(lam, s):
        for node, sval in ((l, sv), (np.conj(l), np.conj(sv))):
            cols.append(2.0 / (node - z) ** (ell + 1))
        for node, sval in ((l, sv), (np.conj(l), np.conj(sv))):
            cols.append(-2.0 * (ell + 1) * sval / (node - z) ** (ell + 2))
    entries = np.hstack(cols).astype(complex)
    rows, colf = equilibrate(entries)
    return HormanderMatrix(entries, dim, rows, colf)


def hormander_determinant(z: float, xi: float, lam: Sequence[complex], s: Sequence[complex]) -> complex:
    """Determinant, computed as det of the equilibrated matrix times its scale."""
    m = hormander_matrix(z, xi, lam, s)
    return complex(np.linalg.det(m.normalized) * m.scale)


def hormander_rank(z: float, xi: float, lam: Sequence[complex], s: Sequence[complex], tol: float = RANK_TOL) -> int:
    """Numerical rank: singular values of the equilibrated matrix above tol * sigma_max."""
    m = hormander_matrix(z, xi, lam, s)
    sv = np.linalg.svd(m.normalized, compute_uv=False)
    return int(np.sum(sv > tol * sv[0]))


def expected_rank(lam: Sequence[complex]) -> int:
    """Rank 4n + 1 - 2m for m real punctures (each real node merges with its conjugate)."""
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    return 4 * lam.size + 1 - 2 * int(np.sum(lam.imag == 0))


# ---------------------------------------------------------------------------
# cross-module suite


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""


@dataclass(frozen=True)
class SuiteReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "status": "pass" if c.passed else "fail",
                    "deviation": c.deviation,
                    "tolerance": c.tolerance,
                    "detail": c.detail,
                }
                for c in self.checks
            ],
        }


SUITE_TOLERANCES = {
    "alpha_constancy": 1e-7,
    "flatness": 1e-6,
    "birkhoff_vs_gprime": 1e-8,
    "drift_ledger": 1e-6,
    "covariance_two_ways": 1e-6,
}


def _flatness(fam: LaxFamily, h: float = 1e-4) -> float:
    if fam.n < 2:
        return 0.0
    worst = 0.0
    basis = np.eye(fam.n)
    zero = np.zeros(fam.n)
    moves = [(basis[i], zero) for i in range(fam.n)] + [(zero, basis[i]) for i in range(fam.n)]
    for a in range(len(moves)):
        for b in range(a + 1, len(moves)):
            (la, sa), (lb, sb) = moves[a], moves[b]
            one = advance_isomonodromy(advance_isomonodromy(fam, la, sa, h), lb, sb, h)
            two = advance_isomonodromy(advance_isomonodromy(fam, lb, sb, h), la, sa, h)
            worst = max(worst, float(np.max(np.abs(one.A0 - two.A0))), float(np.max(np.abs(one.A1 - two.A1))))
    return worst


def cross_module_suite(
    family: LaxFamily | Mapping,
    driving: DrivingSpec | None = None,
    tolerances: Mapping[str, float] | None = None,
) -> SuiteReport:
    """Run the consistency checks on one family and one driving path.

    Failures, including an invalid family, are reported as data.
    """
    tol = dict(SUITE_TOLERANCES)
    tol.update(tolerances or {})
    if driving is None:
        driving = DrivingSpec(DrivingKind.BROWNIAN, 1e-3, 0.3, seed=0)
    try:
        fam = family if isinstance(family, LaxFamily) else family_from_dict(dict(family))
    except InvalidFamily as exc:
        return SuiteReport([CheckResult("family_validation", False, float("inf"), 0.0, str(exc))])
    checks = [CheckResult("family_validation", True, 0.0, 0.0)]
    if fam.n == 0:
        for name in SUITE_TOLERANCES:
            checks.append(CheckResult(name, True, 0.0, tol[name], "no punctures"))
        return SuiteReport(checks)

    try:
        flat = _flatness(fam)
        checks.append(CheckResult("flatness", flat <= tol["flatness"], flat, tol["flatness"]))

        states = run_trajectory(driving, fam.lam, fam.s)
        last = states[-1]
        gap = float(np.max(np.abs(last.S - last.s0 * last.gprime)))
        checks.append(CheckResult("birkhoff_vs_gprime", gap <= tol["birkhoff_vs_gprime"], gap,
                                  tol["birkhoff_vs_gprime"]))

        xi0 = driving.xi0 if driving.kind is DrivingKind.SLE_KAPPA_RHO else None
        drive = sample_driving_batch(driving, 1)
        guard = states[0].guard
        run = run_engine(fam, drive, driving.kappa, guard=guard, xi0=xi0)
        checks.append(CheckResult("alpha_constancy", run.alpha_max_drift <= tol["alpha_constancy"],
                                  run.alpha_max_drift, tol["alpha_constancy"]))
        led = run.ledger_max_relative
        detail = "" if driving.kappa == 4.0 else f"kappa={driving.kappa}"
        checks.append(CheckResult("drift_ledger", led <= tol["drift_ledger"], led, tol["drift_ledger"], detail))

        y = run.final.y
        closed = covariance_factor_parts(-2.0 * y["kint"], y["pre"], y["schw"], run.final.alpha, run.final.s0)
        two_ways = float(np.max(np.abs(np.exp(y["logF"]) / np.exp(closed) - 1.0)))
        checks.append(CheckResult("covariance_two_ways", two_ways <= tol["covariance_two_ways"], two_ways,
                                  tol["covariance_two_ways"]))
    except IsoLoewnerError as exc:
        checks.append(CheckResult("numerics", False, float("inf"), 0.0, f"{type(exc).__name__}: {exc}"))
    return SuiteReport(checks)
