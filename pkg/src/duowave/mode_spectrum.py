"""Transverse spectral problem of the two-waveguide system.

Solves the guided-mode dispersion relations of the symmetric double
step-index profile, evaluates the discrete and continuum (improper)
eigenfunctions with their closed-form normalization constants, and provides
the single-waveguide mode together with the splitting coefficient that sets
the ideal power-transfer period.

Conventions: the background index is 1, the cores have index ``n > 1``,
width ``D`` and separation ``d``; all lengths are in caller-chosen units.
For a propagation constant ``beta`` in ``(k, n k)`` the transverse rates are

    xi  = sqrt(n^2 k^2 - beta^2)   (oscillation inside a core)
    eta = sqrt(beta^2 - k^2)       (decay outside the cores)

and ``xi^2 + eta^2 = k^2 (n^2 - 1)`` identically.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (GammaAtBranchPoint, NoRootBracket, NotSingleMode,
                     RootFindingFailed)

_SCAN_POINTS = 400
_EDGE_FRACTION = 1e-9  # offset from the interval ends, in units of k
_POLE_GUARD = 1e12


@dataclass(frozen=True)
class WaveguideGeometry:
    """Deterministic coupler: wavenumber, core index, core width, separation."""

    k: float
    n: float
    D: float
    d: float

    def __post_init__(self):
        if not (self.k > 0 and self.n > 1 and self.D > 0 and self.d >= 0):
            raise ValueError(
                f"invalid geometry: need k>0, n>1, D>0, d>=0, got "
                f"k={self.k}, n={self.n}, D={self.D}, d={self.d}")

    @property
    def nk(self) -> float:
        return self.n * self.k

    @property
    def delta_k2(self) -> float:
        """Index-contrast strength k^2 (n^2 - 1)."""
        return self.k ** 2 * (self.n ** 2 - 1)

    @property
    def single_mode(self) -> bool:
        """True when an isolated core guides exactly one mode."""
        return self.k * self.D * math.sqrt(self.n ** 2 - 1) < math.pi


@dataclass(frozen=True)
class SingleWaveguideMode:
    """Unique guided mode of one isolated core, plus the splitting rate."""

    beta: float
    xi: float
    eta: float
    beta_prime: float


@dataclass(frozen=True)
class GuidedMode:
    parity: str  # 'even' | 'odd'
    index: int   # j = 1 is the largest propagation constant
    beta: float
    xi: float
    eta: float
    norm_const: float


@dataclass(frozen=True)
class ContinuumModeParams:
    parity: str
    gamma: float
    xi_gamma: float
    eta_gamma: float
    norm_const: float


def _xi_eta(beta, geom):
    xi = math.sqrt(max(geom.nk ** 2 - beta * beta, 0.0))
    eta = math.sqrt(max(beta * beta - geom.k ** 2, 0.0))
    return xi, eta


def single_dispersion_residual(beta, geom: WaveguideGeometry) -> float:
    """Residual of the isolated-core relation (xi/eta) tan(xi D / 2) = 1."""
    xi, eta = _xi_eta(beta, geom)
    return xi / eta * math.tan(xi * geom.D / 2) - 1.0


def coupled_dispersion_residual(beta, geom: WaveguideGeometry, parity: str) -> float:
    """Residual of the even/odd coupled relation in its product form."""
    xi, eta = _xi_eta(beta, geom)
    r = xi / eta
    half = xi * geom.D / 2
    t = math.tan(half)
    lhs = (1 + r * r) * math.exp(-eta * geom.d)
    rhs = (1 - r * t) * (1 + r / t)
    return rhs - lhs if parity == 'even' else rhs + lhs


def _coupled_scan_fn(geom, sign):
    """Smooth equivalent of the product-form relation, for bracketing.

    [1 - r tan(xD/2)][1 + r cot(xD/2)] == 1 - r^2 + 2 r cot(xD); the expanded
    form has a single pole family (cot) inside (k, nk).
    """
    def f(beta):
        xi, eta = _xi_eta(beta, geom)
        r = xi / eta
        return 1 - r * r + 2 * r / math.tan(xi * geom.D) \
            - sign * (1 + r * r) * math.exp(-eta * geom.d)
    return f


def _guarded(geom, beta):
    """True when tan/cot of the core half-phase are safely finite."""
    xi, _ = _xi_eta(beta, geom)
    t = math.tan(xi * geom.D / 2)
    return _POLE_GUARD > abs(t) > 1.0 / _POLE_GUARD


def _scan_brackets(f, geom, lo, hi):
    grid = np.linspace(lo, hi, _SCAN_POINTS)
    vals = []
    pts = []
    for b in grid:
        if not _guarded(geom, b):
            continue
        v = f(b)
        if math.isfinite(v):
            pts.append(b)
            vals.append(v)
    brackets = []
    for i in range(len(pts) - 1):
        if vals[i] == 0.0:
            brackets.append((pts[i], pts[i]))
        elif vals[i] * vals[i + 1] < 0:
            brackets.append((pts[i], pts[i + 1]))
    if vals and vals[-1] == 0.0:
        brackets.append((pts[-1], pts[-1]))
    return brackets


def _bisect_secant(f, a, b):
    """Bracketed bisection with safeguarded secant steps, to ~1 ulp."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise NoRootBracket(f"no sign change on [{a}, {b}]")
    while True:
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            return mid  # interval collapsed to adjacent floats
        # secant candidate; keep it only if it lands strictly inside
        denom = fb - fa
        cand = mid
        if denom != 0.0:
            sec = b - fb * (b - a) / denom
            if a < sec < b:
                cand = sec
        fc = f(cand)
        if fc == 0.0:
            return cand
        if fa * fc < 0:
            b, fb = cand, fc
        else:
            a, fa = cand, fc
        # guarantee progress: one plain bisection step if the bracket stalled
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm


def solve_single_beta(geom: WaveguideGeometry) -> SingleWaveguideMode:
    """Unique propagation constant of an isolated core, with the splitting rate.

    Raises ``NotSingleMode`` outside the single-mode regime and
    ``NoRootBracket`` if the guaranteed sign change is not found (which would
    indicate a numerical setup bug, not physics).
    """
    if not geom.single_mode:
        raise NotSingleMode(
            f"k D sqrt(n^2-1) = {geom.k * geom.D * math.sqrt(geom.n**2 - 1):.6f} >= pi")
    delta = _EDGE_FRACTION * geom.k
    lo, hi = geom.k + delta, geom.nk - delta

    def f(beta):
        return single_dispersion_residual(beta, geom)

    brackets = _scan_brackets(f, geom, lo, hi)
    if len(brackets) != 1:
        raise NoRootBracket(
            f"expected one bracket for the single-mode relation, found {len(brackets)}")
    beta = _bisect_secant(f, *brackets[0])
    xi, eta = _xi_eta(beta, geom)
    # inverse slope of the dispersion relation at the root
    beta_prime = eta / (beta * (1 + eta ** 2 / xi ** 2) * (1 / eta + geom.D / 2))
    return SingleWaveguideMode(beta=beta, xi=xi, eta=eta, beta_prime=beta_prime)


def _norm_const(beta, geom, parity):
    """Closed-form normalization constant of a coupled guided mode."""
    xi, eta = _xi_eta(beta, geom)
    r2 = (xi / eta) ** 2
    sin2 = math.sin(xi * geom.D) ** 2
    hyp = math.sinh(eta * geom.d) / eta
    hyp = hyp + geom.d if parity == 'even' else hyp - geom.d
    bracket = (0.5 * math.exp(-eta * geom.d) * sin2 * (1 + r2) ** 2 * hyp
               + (r2 - 1) * math.sin(2 * xi * geom.D) / (2 * xi)
               + (r2 + 1) * geom.D
               + 2 * sin2 / eta
               + xi ** 2 / eta ** 3)
    return bracket ** -0.5


def solve_coupled_betas(geom: WaveguideGeometry):
    """All guided modes of the coupled system, as (even list, odd list).

    Roots of each dispersion relation are enumerated on (k, nk) by a sign
    scan; each list is ordered by decreasing propagation constant (j = 1
    first).  Raises ``RootFindingFailed`` with bracketing diagnostics when a
    guaranteed root is missing.
    """
    if geom.d <= 0:
        raise ValueError("coupled solve requires d > 0")
    delta = _EDGE_FRACTION * geom.k
    lo, hi = geom.k + delta, geom.nk - delta
    out = []
    for parity, sign in (('even', +1), ('odd', -1)):
        f = _coupled_scan_fn(geom, sign)
        brackets = _scan_brackets(f, geom, lo, hi)
        if not brackets and geom.single_mode:
            raise RootFindingFailed(
                f"no {parity} bracket found on ({lo:.6g}, {hi:.6g}) "
                f"with {_SCAN_POINTS} scan points")
        modes = []
        for a, b in brackets:
            beta = a if a == b else _bisect_secant(f, a, b)
            xi, eta = _xi_eta(beta, geom)
            modes.append((beta, xi, eta))
        modes.sort(key=lambda m: -m[0])
        out.append([
            GuidedMode(parity=parity, index=j + 1, beta=beta, xi=xi, eta=eta,
                       norm_const=_norm_const(beta, geom, parity))
            for j, (beta, xi, eta) in enumerate(modes)
        ])
    return out[0], out[1]


def single_eigenfunction(sm: SingleWaveguideMode, geom: WaveguideGeometry, x):
    """Mode profile of the isolated core occupying (d/2, d/2 + D).

    The peak sits at x = (d + D)/2; the profile is defined for all real x
    (exponential tail through the other core's region).  Its squared integral
    over the line is exactly 1/2, so that the symmetric/antisymmetric
    combinations built from both cores have unit norm.
    """
    x = np.asarray(x, dtype=float)
    a = geom.d / 2
    b = a + geom.D
    amp = (2 / sm.eta + geom.D) ** -0.5
    edge = amp * math.cos(sm.xi * geom.D / 2)
    out = np.empty_like(x)
    m1 = x <= a
    m2 = (x > a) & (x < b)
    m3 = x >= b
    out[m1] = edge * np.exp(sm.eta * (x[m1] - a))
    out[m2] = amp * np.cos(sm.xi * (x[m2] - a - geom.D / 2))
    out[m3] = edge * np.exp(-sm.eta * (x[m3] - b))
    return out if out.shape else float(out)


def guided_eigenfunction(mode: GuidedMode, geom: WaveguideGeometry, x):
    """Normalized even/odd guided eigenfunction of the coupled system."""
    x = np.asarray(x, dtype=float)
    sign = np.where(x >= 0, 1.0, -1.0) if mode.parity == 'odd' else np.ones_like(x)
    ax = np.abs(x)
    a = geom.d / 2
    b = a + geom.D
    xi, eta, r = mode.xi, mode.eta, mode.xi / mode.eta
    out = np.empty_like(ax)
    m1 = ax <= a
    m2 = (ax > a) & (ax < b)
    m3 = ax >= b
    mid = math.exp(-eta * geom.d / 2) * math.sin(xi * geom.D) * (1 + r * r)
    if mode.parity == 'even':
        out[m1] = mid * np.cosh(eta * ax[m1])
    else:
        out[m1] = mid * np.sinh(eta * ax[m1])
    out[m2] = r * np.cos(xi * (ax[m2] - b)) - np.sin(xi * (ax[m2] - b))
    out[m3] = r * np.exp(-eta * (ax[m3] - b))
    out = mode.norm_const * sign * out
    return out if out.shape else float(out)


def guided_mode_norm(mode: GuidedMode, geom: WaveguideGeometry) -> float:
    """L2 norm of a guided eigenfunction by adaptive quadrature.

    Integrates over [-(d/2 + D + X), d/2 + D + X] with X = 40/eta, where the
    exponential tails are below 1e-17.
    """
    b = geom.d / 2 + geom.D
    ext = 40.0 / mode.eta
    val, _ = quad(lambda t: guided_eigenfunction(mode, geom, t) ** 2,
                  -b - ext, b + ext,
                  points=[-b, -geom.d / 2, geom.d / 2, b], limit=400)
    return math.sqrt(val)


def continuum_params(parity: str, gamma: float, geom: WaveguideGeometry) -> ContinuumModeParams:
    """Spectral data of an improper eigenfunction at gamma in (-inf, k^2)\\{0}."""
    if gamma == 0.0 or gamma >= geom.k ** 2:
        raise GammaAtBranchPoint(f"gamma={gamma} outside (-inf, k^2) \\ {{0}}")
    xg = math.sqrt(geom.nk ** 2 - gamma)
    eg = math.sqrt(geom.k ** 2 - gamma)
    r = xg / eg
    c, s = math.cos(xg * geom.D), math.sin(xg * geom.D)
    ch, sh = math.cos(eg * geom.d / 2), math.sin(eg * geom.d / 2)
    if parity == 'even':
        w1 = r * c * ch - s * sh
        w2 = r * s * ch + c * sh
    else:
        w1 = r * c * sh + s * ch
        w2 = r * s * sh - c * ch
    norm = (2 * math.pi * eg) ** -0.5 * (w1 * w1 + r * r * w2 * w2) ** -0.5
    return ContinuumModeParams(parity=parity, gamma=gamma, xi_gamma=xg,
                               eta_gamma=eg, norm_const=norm)


def continuum_eigenfunction(params: ContinuumModeParams, geom: WaveguideGeometry, x):
    """Improper (radiation/evanescent) eigenfunction at the given gamma."""
    x = np.asarray(x, dtype=float)
    a = geom.d / 2
    b = a + geom.D
    xg, eg = params.xi_gamma, params.eta_gamma
    r = xg / eg
    c, s = math.cos(xg * geom.D), math.sin(xg * geom.D)
    ch, sh = math.cos(eg * geom.d / 2), math.sin(eg * geom.d / 2)
    sign = np.where(x >= 0, 1.0, -1.0) if params.parity == 'odd' else np.ones_like(x)
    ax = np.abs(x)
    out = np.empty_like(ax)
    m1 = ax <= a
    m2 = (ax > a) & (ax < b)
    m3 = ax >= b
    if params.parity == 'even':
        w1 = r * c * ch - s * sh
        w2 = r * s * ch + c * sh
        out[m1] = r * np.cos(eg * ax[m1])
        out[m2] = r * np.cos(xg * (ax[m2] - a)) * ch - np.sin(xg * (ax[m2] - a)) * sh
    else:
        w1 = r * c * sh + s * ch
        w2 = r * s * sh - c * ch
        out[m1] = r * np.sin(eg * ax[m1])
        out[m2] = r * np.cos(xg * (ax[m2] - a)) * sh + np.sin(xg * (ax[m2] - a)) * ch
    out[m3] = np.cos(eg * (ax[m3] - b)) * w1 - r * np.sin(eg * (ax[m3] - b)) * w2
    out = params.norm_const * sign * out
    return out if out.shape else float(out)


def splitting_defect(geom: WaveguideGeometry, dps: int = 40) -> float:
    """exp(eta d) |beta_e - beta_o - 2 beta' exp(-eta d)| in extended precision.

    The defect is o(exp(-eta d)); at separations of a few widths it falls
    below one ulp of beta in float64, so the dispersion relations are
    re-solved here with mpmath at ``dps`` digits and only the final residual
    is rounded back to float.
    """
    import mpmath as mp

    with mp.workdps(dps):
        k = mp.mpf(geom.k)
        n = mp.mpf(geom.n)
        D = mp.mpf(geom.D)
        d = mp.mpf(geom.d)

        def G(b, sign):
            xi = mp.sqrt(n * n * k * k - b * b)
            eta = mp.sqrt(b * b - k * k)
            r = xi / eta
            return (1 - r * r + 2 * r / mp.tan(xi * D)
                    - sign * (1 + r * r) * mp.exp(-eta * d))

        lo = k * (1 + mp.mpf(10) ** (-dps + 5))
        hi = n * k * (1 - mp.mpf(10) ** (-dps + 5))
        # single-mode relation for beta and beta'
        def g(b):
            xi = mp.sqrt(n * n * k * k - b * b)
            eta = mp.sqrt(b * b - k * k)
            return xi / eta * mp.tan(xi * D / 2) - 1

        beta = mp.findroot(g, mp.mpf(solve_single_beta(geom).beta), tol=mp.mpf(10) ** (-2 * dps))
        xi = mp.sqrt(n * n * k * k - beta * beta)
        eta = mp.sqrt(beta * beta - k * k)
        bp = eta / (beta * (1 + eta ** 2 / xi ** 2) * (1 / eta + D / 2))
        be = mp.findroot(lambda b: G(b, +1), beta, tol=mp.mpf(10) ** (-2 * dps))
        bo = mp.findroot(lambda b: G(b, -1), beta, tol=mp.mpf(10) ** (-2 * dps))
        res = mp.exp(eta * d) * abs(be - bo - 2 * bp * mp.exp(-eta * d))
        return float(res)
