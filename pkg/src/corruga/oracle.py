"""Closed-form reference modes and independent identity checks.

The catalogue packages, for each built-in family, an exact admissible
rotation field, its deflection, the per-period growth vectors, and the
predicted effective tensors.  Everything is evaluated from exact piecewise
antiderivatives (profiles.py) and small closed-form means; none of it
touches the finite-difference machinery, so these objects can arbitrate
solver output.

Catalogue ids:

* ``plane-bending``         quadratic bend of the flat chart
* ``corrugation-membrane``  lateral stretch of a simple corrugation
* ``corrugation-twist``     twist of a simple corrugation (linear growth)
* ``eggbox-membrane``       stretch/contract pair of a double corrugation
* ``miura-membrane``        stretch of the miura-like chart
* ``translation-twist``     twist of a translation surface (linear growth)
* ``sheared-membrane``      eggbox membrane composed with a lattice shear
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chart import (TAU, MIURA_LIKE, PLANE, DOUBLE_CORRUGATION,
                    SHEARED_DOUBLE_CORRUGATION, SIMPLE_CORRUGATION,
                    TRANSLATION_SURFACE, SpaceCurve, SurfaceChart,
                    builtin_chart, period_geometry)
from .grid import PeriodicGrid, cell_average
from .profiles import Profile, make_profile
from .solver import DeflectionField, RotationMode

MODE_IDS = ("plane-bending", "corrugation-membrane", "corrugation-twist",
            "eggbox-membrane", "miura-membrane", "translation-twist",
            "sheared-membrane")

_FAMILY_OF = {
    "plane-bending": PLANE,
    "corrugation-membrane": SIMPLE_CORRUGATION,
    "corrugation-twist": SIMPLE_CORRUGATION,
    "eggbox-membrane": DOUBLE_CORRUGATION,
    "miura-membrane": MIURA_LIKE,
    "translation-twist": TRANSLATION_SURFACE,
    "sheared-membrane": SHEARED_DOUBLE_CORRUGATION,
}

_BUILTIN_OF = {
    "plane-bending": "plane",
    "corrugation-membrane": "corrugation",
    "corrugation-twist": "corrugation",
    "eggbox-membrane": "eggbox",
    "miura-membrane": "miura",
    "translation-twist": "translation",
}


@dataclass(frozen=True)
class AnalyticMode:
    """A closed-form admissible rotation field with its exact invariants.

    ``W1``/``W2`` are the growth per unit parameter shift (zero for strictly
    periodic fields).  ``E`` is the exact cell average of the induced lattice
    stretch over the fundamental period; ``chi`` the exact curvature tensor
    carried by the growth.
    """

    mode_id: str
    chart: SurfaceChart
    W1: np.ndarray
    W2: np.ndarray
    E: np.ndarray
    chi: np.ndarray
    _rotation: Callable = field(repr=False, compare=False)
    _deflection: Callable = field(repr=False, compare=False)

    def rotation(self, xi1, xi2, side=(1, 1)):
        """w at (xi1, xi2); ``side`` picks the panel on breakpoint lines."""
        xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, dtype=float),
                                       np.asarray(xi2, dtype=float))
        return self._rotation(xi1, xi2, side)

    def deflection(self, xi1, xi2):
        """The deflection produced by the rotation field, up to a constant."""
        xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, dtype=float),
                                       np.asarray(xi2, dtype=float))
        return self._deflection(xi1, xi2)

    @property
    def has_growth(self) -> bool:
        return bool(np.any(self.W1) or np.any(self.W2))


def _growth_chi(W1, W2, geom) -> np.ndarray:
    W = (W1, W2)
    p = (geom.p1, geom.p2)
    chi = np.empty((2, 2))
    for a in range(2):
        for b in range(2):
            chi[a, b] = 0.5 * (np.dot(np.cross(W[b], p[a]), geom.n)
                               + np.dot(np.cross(W[a], p[b]), geom.n))
    return chi


# -- per-id constructions -------------------------------------------------

def _plane_bending(chart):
    def rot(xi1, xi2, side):
        w = np.zeros(xi1.shape + (3,))
        w[..., 1] = -xi1
        return w

    def defl(xi1, xi2):
        out = np.zeros(xi1.shape + (3,))
        out[..., 2] = 0.5 * xi1 * xi1
        return out

    W1 = np.array([0.0, -1.0, 0.0])
    W2 = np.zeros(3)
    chi = _growth_chi(W1, W2, period_geometry(chart))
    return rot, defl, W1, W2, np.zeros((2, 2)), chi


def _corrugation_membrane(chart):
    f = chart.f

    def rot(xi1, xi2, side):
        w = np.zeros(xi1.shape + (3,))
        w[..., 1] = f.slope(xi1, side[0])
        return w

    def defl(xi1, xi2):
        out = np.zeros(xi1.shape + (3,))
        out[..., 0] = f.running_slope_square(xi1)
        out[..., 2] = -f.value(xi1)
        return out

    E = np.diag([f.slope_mean_square(), 0.0])
    return rot, defl, np.zeros(3), np.zeros(3), E, np.zeros((2, 2))


def _corrugation_twist(chart):
    f = chart.f

    def rot(xi1, xi2, side):
        return np.stack([xi1, -xi2, f.value(xi1)], axis=-1)

    def defl(xi1, xi2):
        fv = f.value(xi1)
        return np.stack([-xi2 * fv,
                         2.0 * f.value_integral(xi1) - xi1 * fv,
                         xi1 * xi2], axis=-1)

    W1 = np.array([1.0, 0.0, 0.0])
    W2 = np.array([0.0, -1.0, 0.0])
    chi = _growth_chi(W1, W2, period_geometry(chart))
    # cell average of the induced stretch; exactly zero for profiles with
    # f(0) = 0 and zero mean, nonzero otherwise (origin-dependent quantity)
    e12 = 0.5 * (f.value_mean() - float(f.value(0.0)))
    E = np.array([[0.0, e12], [e12, 0.0]])
    return rot, defl, W1, W2, E, chi


def _eggbox_membrane(chart):
    f, g = chart.f, chart.g

    def rot(xi1, xi2, side):
        fs = f.slope(xi1, side[0])
        gs = g.slope(xi2, side[1])
        return np.stack([gs, fs, fs * gs], axis=-1)

    def defl(xi1, xi2):
        return np.stack([f.running_slope_square(xi1),
                         -g.running_slope_square(xi2),
                         g.value(xi2) - f.value(xi1)], axis=-1)

    E = np.diag([f.slope_mean_square(), -g.slope_mean_square()])
    return rot, defl, np.zeros(3), np.zeros(3), E, np.zeros((2, 2))


def _miura_membrane(chart):
    f, g = chart.f, chart.g

    def rot(xi1, xi2, side):
        fs = f.slope(xi1, side[0])
        gs = g.slope(xi2, side[1])
        return np.stack([-1.0 / gs, -fs / gs, -fs], axis=-1)

    def defl(xi1, xi2):
        return np.stack([f.running_slope_square(xi1),
                         xi2 - f.value(xi1),
                         -g.running_inverse_slope(xi2)], axis=-1)

    E = np.diag([f.slope_mean_square(), 1.0])
    return rot, defl, np.zeros(3), np.zeros(3), E, np.zeros((2, 2))


def _sminus(p: Profile | None, t):
    """Exact integral of (p - s p') from 0 to t; zero for a missing profile."""
    if p is None:
        return np.zeros_like(np.asarray(t, dtype=float))
    t = np.asarray(t, dtype=float)
    return 2.0 * p.value_integral(t) - t * p.value(t)


def _curve_swirl(curve: SpaceCurve, t):
    """Exact integral of c x c' from 0 to t for a single-component curve."""
    if curve.lateral is not None and curve.vertical is not None:
        raise ValueError("twist deflection in closed form needs curves with "
                         "a single profile component")
    sv = _sminus(curve.vertical, t)
    sl = _sminus(curve.lateral, t)
    zero = np.zeros_like(sv)
    if curve.axis == 0:
        comps = [zero, sv, -sl]
    else:
        comps = [-sv, zero, sl]
    return np.stack(comps, axis=-1)


def _curve_mean(curve: SpaceCurve) -> np.ndarray:
    out = np.zeros(3)
    out[curve.axis] = 0.5 * curve.period
    if curve.lateral is not None:
        out[1 - curve.axis] = curve.lateral.value_mean()
    if curve.vertical is not None:
        out[2] = curve.vertical.value_mean()
    return out


def _translation_twist(chart):
    alpha, beta = chart.curves
    t1, t2 = chart.period
    geom = period_geometry(chart)

    def rot(xi1, xi2, side):
        return alpha.point(xi1) - beta.point(xi2)

    def defl(xi1, xi2):
        return (np.cross(alpha.point(xi1), beta.point(xi2))
                + _curve_swirl(alpha, xi1) - _curve_swirl(beta, xi2))

    W1 = np.array([1.0, 0.0, 0.0])
    W2 = np.array([0.0, -1.0, 0.0])
    chi = _growth_chi(W1, W2, geom)

    # exact cell-averaged stretch from one-period means
    pdot1 = _curve_swirl(alpha, t1) / t1 + np.cross(geom.p1, _curve_mean(beta))
    pdot2 = -_curve_swirl(beta, t2) / t2 + np.cross(_curve_mean(alpha), geom.p2)
    E = np.array([
        [np.dot(pdot1, geom.p1),
         0.5 * (np.dot(pdot1, geom.p2) + np.dot(pdot2, geom.p1))],
        [0.0, np.dot(pdot2, geom.p2)]])
    E[1, 0] = E[0, 1]
    return rot, defl, W1, W2, E, chi


def _sheared_membrane(chart):
    f, g, gamma = chart.f, chart.g, chart.gamma

    def rot(xi1, xi2, side):
        eta = xi2 + gamma * xi1
        fs = f.slope(xi1, side[0])
        gs = g.slope(eta, side[1])
        return np.stack([gs, fs, fs * gs], axis=-1)

    def defl(xi1, xi2):
        eta = xi2 + gamma * xi1
        return np.stack([f.running_slope_square(xi1),
                         -g.running_slope_square(eta),
                         g.value(eta) - f.value(xi1)], axis=-1)

    a = f.slope_mean_square()
    b = g.slope_mean_square()
    E = np.array([[a - gamma * gamma * b, -gamma * b],
                  [-gamma * b, -b]])
    return rot, defl, np.zeros(3), np.zeros(3), E, np.zeros((2, 2))


_BUILDERS = {
    "plane-bending": _plane_bending,
    "corrugation-membrane": _corrugation_membrane,
    "corrugation-twist": _corrugation_twist,
    "eggbox-membrane": _eggbox_membrane,
    "miura-membrane": _miura_membrane,
    "translation-twist": _translation_twist,
    "sheared-membrane": _sheared_membrane,
}


def canonical_chart(mode_id: str) -> SurfaceChart:
    """The default chart each catalogue entry is stated on."""
    if mode_id == "sheared-membrane":
        sgn = make_profile("piecewise-linear", 1.0, TAU)
        return SurfaceChart(SHEARED_DOUBLE_CORRUGATION, (TAU, TAU),
                            (sgn, sgn), gamma=1.0)
    if mode_id not in _BUILTIN_OF:
        raise ValueError(f"unknown analytic mode {mode_id!r}; "
                         f"choose from {', '.join(MODE_IDS)}")
    return builtin_chart(_BUILTIN_OF[mode_id])


def analytic_mode(mode_id: str, chart: SurfaceChart | None = None) -> AnalyticMode:
    """Build a catalogue entry on ``chart`` (default: its canonical chart)."""
    if mode_id not in _BUILDERS:
        raise ValueError(f"unknown analytic mode {mode_id!r}; "
                         f"choose from {', '.join(MODE_IDS)}")
    if chart is None:
        chart = canonical_chart(mode_id)
    want = _FAMILY_OF[mode_id]
    if chart.family != want:
        raise ValueError(f"mode {mode_id!r} needs a {want!r} chart, "
                         f"got {chart.family!r}")
    rot, defl, W1, W2, E, chi = _BUILDERS[mode_id](chart)
    return AnalyticMode(mode_id=mode_id, chart=chart, W1=W1, W2=W2,
                        E=E, chi=chi, _rotation=rot, _deflection=defl)


# -- grid sampling ---------------------------------------------------------

def sample_rotation(amode: AnalyticMode, grid: PeriodicGrid,
                    normalize: bool = True, system=None) -> RotationMode:
    """Evaluate the analytic rotation on the grid's node set.

    Breakpoint instances are evaluated with the side of the arc they belong
    to, matching how the grid samples chart partials.  With ``system`` the
    discrete operator residual of the sampled vector is recorded as sigma.
    """
    if grid.chart != amode.chart:
        raise ValueError("grid was built for a different chart")
    n1, n2 = grid.shape
    w = np.empty((n1, n2, 3))
    for s1 in (1, -1):
        rows = np.flatnonzero(grid.axis1.sides == s1)
        if rows.size == 0:
            continue
        for s2 in (1, -1):
            cols = np.flatnonzero(grid.axis2.sides == s2)
            if cols.size == 0:
                continue
            w[np.ix_(rows, cols)] = amode.rotation(
                grid.axis1.xi[rows, None], grid.axis2.xi[None, cols], (s1, s2))

    mode = RotationMode(w=w, W1=amode.W1.copy(), W2=amode.W2.copy(),
                        sigma=float("nan"))
    vec = mode.vector(grid)
    nrm = float(np.linalg.norm(vec))
    if nrm == 0.0:
        raise ValueError("analytic mode sampled to zero")
    scale = 1.0 / nrm if normalize else 1.0
    sigma = float("nan")
    if system is not None:
        sigma = float(np.linalg.norm(system.matrix @ (vec / nrm)))
    return RotationMode(w=w * scale, W1=amode.W1 * scale,
                        W2=amode.W2 * scale, sigma=sigma)


def sample_deflection(amode: AnalyticMode, grid: PeriodicGrid) -> DeflectionField:
    """Evaluate the analytic deflection on the display lattice, anchored."""
    if grid.chart != amode.chart:
        raise ValueError("grid was built for a different chart")
    u1 = grid.axis1.u
    u2 = grid.axis2.u
    if grid.axis1.circular:
        u1 = np.append(u1, grid.axis1.period)
    if grid.axis2.circular:
        u2 = np.append(u2, grid.axis2.period)
    vals = amode.deflection(u1[:, None], u2[None, :])
    vals = vals - vals[0, 0]
    return DeflectionField(values=vals, fundamental_shape=grid.shape)


# -- random periodic fields and the pairing identity ----------------------

@dataclass(frozen=True)
class TrigField:
    """A vector-valued trigonometric polynomial, periodic on the cell."""

    period: tuple[float, float]
    waves: np.ndarray   # (nk, 2) integer harmonics
    cos_c: np.ndarray   # (nk, 3)
    sin_c: np.ndarray   # (nk, 3)

    def _phases(self, xi1, xi2):
        k1 = TAU * self.waves[:, 0] / self.period[0]
        k2 = TAU * self.waves[:, 1] / self.period[1]
        return (np.asarray(xi1, dtype=float)[..., None] * k1
                + np.asarray(xi2, dtype=float)[..., None] * k2)

    def value(self, xi1, xi2):
        th = self._phases(xi1, xi2)
        return np.cos(th) @ self.cos_c + np.sin(th) @ self.sin_c

    def partial(self, xi1, xi2, direction: int):
        th = self._phases(xi1, xi2)
        k = TAU * self.waves[:, direction] / self.period[direction]
        return ((-np.sin(th) * k) @ self.cos_c + (np.cos(th) * k) @ self.sin_c)

    def rms(self) -> float:
        # mean square over the cell is exactly half the coefficient energy
        # (plus the full energy of the constant term)
        const = ~self.waves.any(axis=1)
        e = 0.5 * (np.sum(self.cos_c[~const] ** 2) + np.sum(self.sin_c[~const] ** 2))
        e += np.sum(self.cos_c[const] ** 2)
        return float(np.sqrt(e))


def make_trig_field(seed: int, kmax: int = 5,
                    period: tuple[float, float] = (TAU, TAU)) -> TrigField:
    """Random band-limited periodic field with reproducible coefficients."""
    rng = np.random.default_rng(seed)
    k1, k2 = np.meshgrid(np.arange(-kmax, kmax + 1),
                         np.arange(0, kmax + 1), indexing="ij")
    keep = (k2 > 0) | ((k2 == 0) & (k1 >= 0))   # one representative per pair
    waves = np.column_stack([k1[keep], k2[keep]])
    decay = 1.0 / (1.0 + np.abs(waves).sum(axis=1))[:, None]
    cos_c = rng.standard_normal((len(waves), 3)) * decay
    sin_c = rng.standard_normal((len(waves), 3)) * decay
    sin_c[(waves == 0).all(axis=1)] = 0.0
    return TrigField(period=period, waves=waves, cos_c=cos_c, sin_c=sin_c)


def symmetry_lemma_check(chart: SurfaceChart, omega: TrigField, w: TrigField,
                         grid: PeriodicGrid) -> tuple[float, float]:
    """Both sides of the pairing identity mean<omega, D w> = mean<w, D omega>.

    D v = v_2 x x_1 - v_1 x x_2 with analytic field partials; only the cell
    average uses grid quadrature.  Needs a smooth chart so that every smooth
    periodic field is admissible.
    """
    if chart.panel_breakpoints(0) or chart.panel_breakpoints(1):
        raise ValueError("the pairing identity check needs a smooth chart")
    if grid.chart != chart:
        raise ValueError("grid was built for a different chart")
    X1 = grid.axis1.xi[:, None]
    X2 = grid.axis2.xi[None, :]

    def dop(fld):
        return (np.cross(fld.partial(X1, X2, 1), grid.x1)
                - np.cross(fld.partial(X1, X2, 0), grid.x2))

    wv = w.value(X1, X2)
    ov = omega.value(X1, X2)
    lhs = float(cell_average(np.einsum("ijk,ijk->ij", ov, dop(w)), grid))
    rhs = float(cell_average(np.einsum("ijk,ijk->ij", wv, dop(omega)), grid))
    return lhs, rhs


# -- quadratic-limit check -------------------------------------------------

def scaling_limit_check(amode: AnalyticMode, probes=None,
                        eps_list=(0.25, 0.125, 0.0625, 0.03125),
                        seed: int = 0) -> np.ndarray:
    """Error of eps^2 xdot(xi/eps) against its quadratic limit, per eps.

    The limit is q(xi) = 1/2 xi_mu xi_nu W_nu x p_mu.  The error is the max
    over a fixed probe set; modes without growth have q = 0.
    """
    if probes is None:
        rng = np.random.default_rng(seed)
        probes = rng.uniform(-1.0, 1.0, size=(8, 2))
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    geom = period_geometry(amode.chart)
    q11 = np.cross(amode.W1, geom.p1)
    q12 = np.cross(amode.W2, geom.p1) + np.cross(amode.W1, geom.p2)
    q22 = np.cross(amode.W2, geom.p2)
    x1, x2 = probes[:, 0], probes[:, 1]
    limit = 0.5 * (x1[:, None] ** 2 * q11 + (x1 * x2)[:, None] * q12
                   + x2[:, None] ** 2 * q22)
    out = []
    for eps in eps_list:
        vals = eps * eps * amode.deflection(x1 / eps, x2 / eps)
        out.append(float(np.max(np.linalg.norm(vals - limit, axis=-1))))
    return np.array(out)


def fitted_rate(eps_list, errors) -> float:
    """Least-squares slope of log(error) against log(eps)."""
    e = np.asarray(errors, dtype=float)
    x = np.log(np.asarray(eps_list, dtype=float))
    if np.any(e <= 0):
        return float("inf")
    return float(np.polyfit(x, np.log(e), 1)[0])


# -- lattice shear covariance ----------------------------------------------

def _pair_residual(E: np.ndarray, chi: np.ndarray) -> float:
    return float(E[0, 0] * chi[1, 1] - 2.0 * E[0, 1] * chi[0, 1]
                 + E[1, 1] * chi[0, 0])


@dataclass(frozen=True)
class ReparametrizationResult:
    """Outcome of the shear-covariance identity checks."""

    shear: np.ndarray                # S, unit-determinant
    E_base: np.ndarray               # straight-chart stretch diag(a, -b)
    E_congruent: np.ndarray          # S^T E_base S
    E_direct: np.ndarray             # from first-principles cell means
    congruence_residual: float
    invariance_residual: float       # pair residual vs untransformed pairs
    expansion_residual: float        # vs the explicit component expansion
    zero_residual: float             # residual on the transformed zero set

    @property
    def ok(self) -> bool:
        return max(self.congruence_residual, self.invariance_residual,
                   self.expansion_residual, self.zero_residual) <= 1e-12


def reparametrization_check(f: Profile, g: Profile,
                            gamma: float) -> ReparametrizationResult:
    """Check how the stretch tensor responds to shearing the parameter grid.

    The sheared chart (xi1, xi2) -> (xi1, xi2 + gamma xi1) turns the straight
    double corrugation's membrane tensor diag(a, -b) into S^T diag(a, -b) S
    with S = [[1, 0], [gamma, 1]].  Verified against tensors assembled from
    explicit cell means, and the membrane/bending pair residual is checked to
    be invariant (det S = 1) with an explicit component expansion.
    """
    a = f.slope_mean_square()
    b = g.slope_mean_square()
    E0 = np.diag([a, -b])
    S = np.array([[1.0, 0.0], [gamma, 1.0]])
    E_cong = S.T @ E0 @ S

    # first principles: sheared partials mix as x1' = x1 + gamma x2, so the
    # averaged stretch vectors mix the same way before pairing
    p1 = np.array([1.0, gamma, 0.0])
    p2 = np.array([0.0, 1.0, 0.0])
    pdot1 = np.array([a, -gamma * b, 0.0])    # pdot1_0 + gamma pdot2_0
    pdot2 = np.array([0.0, -b, 0.0])
    E_direct = np.array([
        [np.dot(pdot1, p1), 0.5 * (np.dot(pdot1, p2) + np.dot(pdot2, p1))],
        [0.0, np.dot(pdot2, p2)]])
    E_direct[1, 0] = E_direct[0, 1]
    cong_res = float(np.max(np.abs(E_direct - E_cong)))

    chis = [np.array([[1.0, 0.0], [0.0, 0.0]]),
            np.array([[0.0, 1.0], [1.0, 0.0]]),
            np.array([[0.0, 0.0], [0.0, 1.0]]),
            np.array([[0.7, -0.3], [-0.3, 2.1]])]
    inv_res = 0.0
    exp_res = 0.0
    for chi in chis:
        chi_s = S.T @ chi @ S
        r_s = _pair_residual(E_cong, chi_s)
        inv_res = max(inv_res, abs(r_s - _pair_residual(E0, chi)))
        expansion = a * chi_s[1, 1] - b * (gamma * gamma * chi_s[1, 1]
                                           - 2.0 * gamma * chi_s[0, 1]
                                           + chi_s[0, 0])
        exp_res = max(exp_res, abs(r_s - expansion))

    zero_res = 0.0
    for t, u in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, -3.0)):
        chi = np.array([[a * t, u], [u, b * t]])
        zero_res = max(zero_res, abs(_pair_residual(E_cong, S.T @ chi @ S)))

    return ReparametrizationResult(shear=S, E_base=E0, E_congruent=E_cong,
                                   E_direct=E_direct,
                                   congruence_residual=cong_res,
                                   invariance_residual=inv_res,
                                   expansion_residual=exp_res,
                                   zero_residual=zero_res)
