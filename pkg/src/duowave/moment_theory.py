"""Closed-form and ODE-based moment predictions for the three coupling regimes.

The closed forms are the fast path; the first-order ODE pair driven by the
same rates is the normative oracle against which they are checked.  All
curves are functions of the scaled range z (native range times epsilon^2).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BadCoefficientTable, StepTooCoarse
from .coefficients import EffectiveCoefficients

log = logging.getLogger("duowave")


@dataclass
class MomentCurves:
    """Gridded first, second and fourth moments of the guided amplitudes."""

    z: np.ndarray
    mean_ae: np.ndarray
    mean_ao: np.ndarray
    p_e: np.ndarray           # E|a_e|^2
    p_o: np.ndarray           # E|a_o|^2
    cross: np.ndarray         # E[a_o conj(a_e)]
    m4_e: np.ndarray          # E|a_e|^4
    m4_o: np.ndarray          # E|a_o|^4
    m22: np.ndarray           # E|a_e|^2 |a_o|^2
    total_power: np.ndarray
    imbalance: np.ndarray     # E[P](z), power imbalance between the cores


def moments_moderate(a_e0, a_o0, coeffs: EffectiveCoefficients, z,
                     beta_e=None, beta_o=None, epsilon=None) -> MomentCurves:
    """All moderate-regime moments on the scaled grid z.

    The imbalance carries the deterministic phase (beta_e - beta_o) z / eps^2
    when the exact propagation constants and epsilon are supplied; otherwise
    the phase is left out (pure decay envelope).
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    G, L = coeffs.Gamma, coeffs.Lambda
    phase_rate = coeffs.kappa_ev + coeffs.kappa + coeffs.Theta / 2
    e0, o0 = complex(a_e0), complex(a_o0)
    pe0, po0 = abs(e0) ** 2, abs(o0) ** 2
    p0, dp0 = pe0 + po0, pe0 - po0

    mean_fac = np.exp(-(G + L / 2) * z - 1j * phase_rate * z)
    decay = np.exp(-L * z)
    decay2 = np.exp(-(2 * G + L) * z)
    p_e = 0.5 * p0 * decay + 0.5 * dp0 * decay2
    p_o = 0.5 * p0 * decay - 0.5 * dp0 * decay2
    cross = o0 * np.conj(e0) * np.exp(-(G + L) * z)

    q0 = pe0 ** 2 + po0 ** 2
    m_iso = (p0 ** 2 / 3) * np.exp(-2 * L * z)
    m_anti = 0.5 * (pe0 ** 2 - po0 ** 2) * np.exp(-(2 * L + 2 * G) * z)
    m_mix = (q0 - 4 * pe0 * po0) / 6 * np.exp(-(2 * L + 6 * G) * z)
    m4_e = m_iso + m_anti + m_mix
    m4_o = m_iso - m_anti + m_mix
    m22 = 0.5 * (m_iso - 2 * m_mix)

    if beta_e is not None and beta_o is not None and epsilon is not None:
        osc = np.exp(1j * (beta_e - beta_o) * z / epsilon ** 2)
    else:
        osc = np.ones_like(z)
    imb = np.zeros_like(z) if p0 == 0 else \
        2 * np.real(e0 * np.conj(o0) * osc) / p0 * np.exp(-G * z)

    return MomentCurves(z=z, mean_ae=e0 * mean_fac, mean_ao=o0 * mean_fac,
                        p_e=p_e, p_o=p_o, cross=cross,
                        m4_e=m4_e, m4_o=m4_o, m22=m22,
                        total_power=p0 * decay, imbalance=imb)


def imbalance_weak(theta, beta_prime, gamma_rate, z, p0: float = 1.0):
    """Damped-oscillator imbalance of the weak-coupling regime.

    Solves [d^2/dz^2 + 2 Gamma d/dz + (2 theta beta')^2] E[P] = 0 with
    E[P](0) = p0 and zero initial slope; the branch follows the sign of
    Gamma^2 - (2 theta beta')^2.
    """
    if theta < 0 or gamma_rate < 0:
        raise ValueError("theta and gamma_rate must be nonnegative")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    G = gamma_rate
    w0 = 2.0 * theta * beta_prime
    disc = G * G - w0 * w0
    env = np.exp(-G * z)
    if disc > 0:
        s = math.sqrt(disc)
        out = env * (np.cosh(s * z) + (G / s) * np.sinh(s * z))
    elif disc < 0:
        w = math.sqrt(-disc)
        out = env * (np.cos(w * z) + (G / w) * np.sin(w * z))
    else:
        out = env * (1.0 + G * z)
    return p0 * out


def imbalance_ode_oracle(theta, beta_prime, gamma_rate, z, rtol: float = 1e-11):
    """Imbalance from the coupled first-order pair (the normative oracle).

    d/dz E[P] = -2 theta beta' E[I];  d/dz E[I] = -2 Gamma E[I] + 2 theta beta' E[P].
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z[-1] == 0.0:
        return np.ones_like(z)
    w0 = 2.0 * theta * beta_prime

    def rhs(_, y):
        return [-w0 * y[1], -2 * gamma_rate * y[1] + w0 * y[0]]

    sol = solve_ivp(rhs, (0.0, z[-1]), [1.0, 0.0], t_eval=z, method="DOP853",
                    rtol=rtol, atol=1e-14)
    if not sol.success:
        raise StepTooCoarse(f"imbalance ODE integration failed: {sol.message}")
    return sol.y[0]


def mean_power_ode(gamma_table, lambda_rates, p0, z, rtol: float = 1e-11):
    """Mean guided powers from the conservation-structured coupled system.

    d/dz E[P_i] = sum_j gamma_table[i, j] (E[P_j] - E[P_i]) - lambda_i E[P_i],
    where the diagonal of ``gamma_table`` must close each row to zero sum.
    """
    table = np.asarray(gamma_table, dtype=float)
    lam = np.broadcast_to(np.asarray(lambda_rates, dtype=float), (table.shape[0],))
    if np.max(np.abs(table.sum(axis=1))) > 1e-12:
        raise BadCoefficientTable(
            f"row sums {table.sum(axis=1)} exceed 1e-12 in magnitude")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z[-1] == 0.0:
        return np.tile(np.asarray(p0, dtype=float), (z.shape[0], 1))

    def rhs(_, p):
        # with zero row sums, sum_j G_ij (P_j - P_i) reduces to (table @ p)_i
        return table @ p - lam * p

    sol = solve_ivp(rhs, (0.0, z[-1]), np.asarray(p0, dtype=float),
                    t_eval=z, method="DOP853", rtol=rtol, atol=1e-14)
    if not sol.success:
        raise StepTooCoarse(f"mean-power ODE integration failed: {sol.message}")
    return sol.y.T


def very_weak_powers(u0_plus, u0_minus, lam, z):
    """Deterministic per-core powers in the very-weak regime.

    Both powers decay at the leakage rate; their normalized imbalance is
    constant in range.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    pp = abs(u0_plus) ** 2 * np.exp(-lam * z)
    pm = abs(u0_minus) ** 2 * np.exp(-lam * z)
    tot = abs(u0_plus) ** 2 + abs(u0_minus) ** 2
    imb = 0.0 if tot == 0 else (abs(u0_plus) ** 2 - abs(u0_minus) ** 2) / tot
    return pp, pm, np.full_like(z, imb)


def classify_regime(epsilon, eta, d):
    """Coupling regime from theta = eps^-2 exp(-eta d).

    Thresholds (100 and 0.01) are declared tool policy; theta is always
    logged so callers can override the classification.
    """
    theta = math.exp(-eta * d) / epsilon ** 2
    log.info("scaled coupling strength theta = %.6g", theta)
    if theta > 100.0:
        return "moderate", theta
    if theta >= 0.01:
        return "weak", theta
    return "very-weak", theta


def figure3_curves(g_values=(0.0, 0.25, 1.0, 4.0), x=None):
    """Imbalance curves vs z normalized by the deterministic transfer scale.

    For each g the curve is the weak-regime solution with unit oscillator
    frequency (2 theta beta' = 1) and damping Gamma = g, sampled on
    x = z / z_theta.
    """
    if x is None:
        x = np.linspace(0.0, 10.0, 1001)
    x = np.asarray(x, dtype=float)
    return {g: imbalance_weak(0.5, 1.0, float(g), x) for g in g_values}


def curves_to_csv(mc: MomentCurves, path):
    from .io import write_csv

    write_csv(path, {
        "z": mc.z,
        "re_mean_ae": np.real(mc.mean_ae), "im_mean_ae": np.imag(mc.mean_ae),
        "re_mean_ao": np.real(mc.mean_ao), "im_mean_ao": np.imag(mc.mean_ao),
        "p_e": mc.p_e, "p_o": mc.p_o,
        "re_cross": np.real(mc.cross), "im_cross": np.imag(mc.cross),
        "m4_e": mc.m4_e, "m4_o": mc.m4_o, "m22": mc.m22,
        "total_power": mc.total_power, "imbalance": mc.imbalance,
    })
