"""Independent verification routes for the spectral and coefficient results.

Every function here reaches a quantity through a different computational
path than the library's primary implementation: constructive root finding,
brute-force overlap integrals, finite-separation quadratures with the full
continuum eigenfunctions, and fixed-resolution composite rules.  They back
the test suite and the ``validate`` experiment.
"""
import math

import numpy as np
from scipy.integrate import quad

from .coefficients import spectral_bracket
from .mode_spectrum import (GuidedMode, WaveguideGeometry, continuum_params,
                            continuum_eigenfunction, guided_eigenfunction,
                            solve_coupled_betas, solve_single_beta)
from .random_media import CovarianceModel


def beta_from_halfwidth_construction(geom: WaveguideGeometry, tol: float = 1e-14):
    """Single-core propagation constant via the cos(q)/q construction.

    Bisection on cos(q)/q = 2 / (k D sqrt(n^2 - 1)) over (0, pi/2), then
    beta = sqrt(k^2 n^2 - (2 q/D)^2).  Independent of the tangent-form solve.
    """
    target = 2.0 / (geom.k * geom.D * math.sqrt(geom.n ** 2 - 1))
    lo, hi = 1e-300, math.pi / 2
    # cos(q)/q decreases from +inf to 0 on (0, pi/2)
    while hi - lo > tol * math.pi:
        mid = 0.5 * (lo + hi)
        if math.cos(mid) / mid > target:
            lo = mid
        else:
            hi = mid
    q = 0.5 * (lo + hi)
    return math.sqrt(geom.nk ** 2 - (2 * q / geom.D) ** 2)


_GAUSS_N = 12
_GNODES, _GWEIGHTS = np.polynomial.legendre.leggauss(_GAUSS_N)


def _segment_integrals(fn, starts, ends):
    """Gauss-Legendre integral of fn over many short [start, end] segments."""
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    mid = 0.5 * (starts + ends)[..., None]
    half = 0.5 * (ends - starts)[..., None]
    pts = mid + half * _GNODES
    vals = fn(pts.ravel()).reshape(pts.shape)
    return (vals * _GWEIGHTS).sum(axis=-1) * half[..., 0]


def overlap_exact(mode_a: GuidedMode, mode_b: GuidedMode,
                  geom: WaveguideGeometry, nu, epsilon: float) -> float:
    """Exact perturbation overlap (phi_a, phi_b V) for one displacement draw.

    V is +-1 on the four thin displaced slivers; the integral over each
    sliver is signed by the interface orientation.  Dividing by epsilon
    recovers the first-order coefficient up to O(epsilon).
    """
    def prod(x):
        return (guided_eigenfunction(mode_a, geom, x)
                * guided_eigenfunction(mode_b, geom, x))

    a, b = geom.d / 2, geom.d / 2 + geom.D
    anchors = np.array([-b, -a, a, b])
    signs = np.array([-1.0, 1.0, -1.0, 1.0])
    offs = epsilon * geom.D * np.asarray(nu, dtype=float)
    vals = _segment_integrals(prod, anchors, anchors + offs)
    return float((signs * vals).sum())


def second_order_overlap_mc(mode: GuidedMode, geom: WaveguideGeometry,
                            sigma2: float, epsilon: float, n_draws: int,
                            seed: int):
    """Monte Carlo mean of the exact second-order self-overlap.

    Antithetic pairs (nu, -nu) cancel the first-order term exactly, leaving
    the epsilon^2 coefficient plus O(epsilon^2) relative bias.  Returns
    (estimate, standard error).
    """
    rng = np.random.default_rng(seed)
    a, b = geom.d / 2, geom.d / 2 + geom.D
    anchors = np.array([-b, -a, a, b])
    signs = np.array([-1.0, 1.0, -1.0, 1.0])

    def prod(x):
        v = guided_eigenfunction(mode, geom, x)
        return v * v

    nus = rng.normal(0.0, math.sqrt(sigma2), size=(n_draws, 4))
    plus = (_segment_integrals(prod, np.broadcast_to(anchors, nus.shape),
                               anchors + epsilon * geom.D * nus) * signs).sum(axis=1)
    minus = (_segment_integrals(prod, np.broadcast_to(anchors, nus.shape),
                                anchors - epsilon * geom.D * nus) * signs).sum(axis=1)
    second = (plus + minus) / (2 * epsilon ** 2)
    est = float(second.mean())
    se = float(second.std(ddof=1) / math.sqrt(n_draws))
    return est, se


def gamma_pair_quadrature(geom: WaveguideGeometry, cov: CovarianceModel) -> float:
    """Even-odd coupling rate from its finite-separation definition.

    Quadrature of dk^4/(2 beta_e beta_o) * E[C(0) C(z)] cos((beta_e-beta_o) z)
    over z, with E[C(0) C(z)] assembled from the full coupled eigenfunctions
    at the geometry's actual separation.
    """
    evens, odds = solve_coupled_betas(geom)
    me, mo = evens[0], odds[0]
    a, b = geom.d / 2, geom.d / 2 + geom.D
    p_in = float(guided_eigenfunction(me, geom, a) * guided_eigenfunction(mo, geom, a))
    p_out = float(guided_eigenfunction(me, geom, b) * guided_eigenfunction(mo, geom, b))
    weight = 2 * geom.D ** 2 * (p_in ** 2 + p_out ** 2)
    zmax = cov.ell * math.sqrt(-2 * math.log(1e-16)) if cov.family == "gaussian" \
        else 1e4 * cov.ell
    beat = me.beta - mo.beta
    integral, _ = quad(lambda z: float(cov.R(z)) * math.cos(beat * z),
                       0.0, zmax, limit=800)
    return geom.delta_k2 ** 2 / (2 * me.beta * mo.beta) * weight * integral


def _continuum_edge_values(parity, gamma, geom):
    p = continuum_params(parity, gamma, geom)
    a, b = geom.d / 2, geom.d / 2 + geom.D
    return (float(continuum_eigenfunction(p, geom, a)),
            float(continuum_eigenfunction(p, geom, b)))


def lambda_finite_d(geom: WaveguideGeometry, cov: CovarianceModel,
                    n_nodes: int = 2000) -> float:
    """Leakage rate from the finite-separation continuum quadrature.

    Uses the full radiation eigenfunctions of the coupled system at the
    geometry's separation (their edge values oscillate in gamma at rate d)
    and the guided mode of the same solve; fixed-order Gauss-Legendre on the
    square-root-substituted halves resolves the oscillation.  The value is
    the mean over the even and odd continuum parities, which is the
    convention consistent with the closed-form rate.
    """
    evens, odds = solve_coupled_betas(geom)
    me = evens[0]
    a, b = geom.d / 2, geom.d / 2 + geom.D
    g_in = float(guided_eigenfunction(me, geom, a)) ** 2
    g_out = float(guided_eigenfunction(me, geom, b)) ** 2
    k2 = geom.k ** 2

    def term(gamma, parity):
        v_in, v_out = _continuum_edge_values(parity, gamma, geom)
        weight = 2 * geom.D ** 2 * (g_in * v_in ** 2 + g_out * v_out ** 2)
        rt = math.sqrt(gamma)
        return (geom.delta_k2 ** 2 / (2 * rt * me.beta) * weight
                * float(cov.R_hat(me.beta - rt)) / 2)

    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    half = math.sqrt(k2 / 2)
    t = 0.5 * half * (nodes + 1.0)
    w = 0.5 * half * weights
    total = 0.0
    for parity in ("even", "odd"):
        low = sum(wi * term(u * u, parity) * 2 * u for u, wi in zip(t, w))
        high = sum(wi * term(k2 - v * v, parity) * 2 * v for v, wi in zip(t, w))
        total += low + high
    return total / 2.0


def circle_average_quadrature(alphas, n: int = 10 ** 4) -> float:
    """Trapezoid evaluation of the periodic ratio average."""
    a1, a2, a3, a4, a5, a6 = (float(a) for a in alphas)
    s = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    num = a1 + a2 * np.cos(s) + a3 * np.sin(s)
    den = a4 + a5 * np.cos(s) + a6 * np.sin(s)
    return float(np.mean(num / den))


def kappa_ev_nested(sm, geom: WaveguideGeometry, cov: CovarianceModel,
                    n_outer: int = 400, n_inner: int = 400,
                    s_max: float = 400.0) -> float:
    """Evanescent phase coefficient by fixed-resolution nested Simpson rules.

    Independent of the adaptive implementation; doubling ``n_outer`` and
    ``n_inner`` gives the self-convergence reference.
    """
    zmax = cov.ell * math.sqrt(-2 * math.log(1e-16))
    z = np.linspace(0.0, zmax, 2 * n_inner + 1)
    rz = np.asarray(cov.R(z)) * np.cos(sm.beta * z)
    sw = np.ones_like(z)
    sw[1:-1:2], sw[2:-1:2] = 4.0, 2.0
    sw *= (z[1] - z[0]) / 3.0

    def inner(s):
        return float(np.dot(sw, rz * np.exp(-s * z)))

    # s-grid refinement near 0 via s = t^2 stretching
    t = np.linspace(0.0, math.sqrt(s_max), 2 * n_outer + 1)
    tw = np.ones_like(t)
    tw[1:-1:2], tw[2:-1:2] = 4.0, 2.0
    tw *= (t[1] - t[0]) / 3.0
    vals = np.empty_like(t)
    for i, ti in enumerate(t):
        s = ti * ti
        vals[i] = (float(spectral_bracket(-s * s, geom)) * 2
                   / (math.pi * math.sqrt(geom.k ** 2 + s * s)) * inner(s)) * 2 * ti
    pref = (geom.delta_k2 ** 2 * geom.D ** 2
            * math.cos(sm.xi * geom.D / 2) ** 2
            / (sm.beta * (2 / sm.eta + geom.D)))
    return pref * float(np.dot(tw, vals))


def parseval_partial_sums(geom: WaveguideGeometry, parity: str,
                          support=(0.10, 0.45), m_values=(40.0, 80.0, 160.0),
                          n_gamma: int = 400, dx: float = 0.0025):
    """Transverse energy capture of a smooth continuum wave packet.

    Builds g(x) = integral of a(gamma) phi_gamma(x) over a smooth bump
    amplitude supported inside the radiation band, and returns
    (norm of a, {M: 2 * integral_0^M g^2 dx}).  The partial sums must
    approach the amplitude norm as M grows.
    """
    k2 = geom.k ** 2
    g1, g2 = support[0] * k2, support[1] * k2

    def bump(g):
        t = (2 * g - (g1 + g2)) / (g2 - g1)
        out = np.zeros_like(g)
        m = np.abs(t) < 1
        out[m] = np.exp(-1.0 / (1.0 - t[m] ** 2))
        return out

    nodes, weights = np.polynomial.legendre.leggauss(n_gamma)
    gs = 0.5 * (g1 + g2) + 0.5 * (g2 - g1) * nodes
    gw = 0.5 * (g2 - g1) * weights
    amp = bump(gs)
    norm_a = float(np.dot(gw, amp ** 2))

    x = np.arange(0.0, max(m_values) + dx, dx)
    gx = np.zeros_like(x)
    for g, w, a in zip(gs, gw, amp):
        p = continuum_params(parity, float(g), geom)
        gx += w * a * continuum_eigenfunction(p, geom, x)
    sums = {}
    for m in m_values:
        mask = x <= m
        sums[m] = 2.0 * float(np.trapezoid(gx[mask] ** 2, x[mask]))
    return norm_a, sums
