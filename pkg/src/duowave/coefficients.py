"""Random-coupling coefficients and the homogenized effective rates.

``coupling_C_guided`` gives the first-order pathwise coupling driven by the
four interface displacements.  The effective coefficients of the diffusion
limit are:

  Gamma     guided-guided coupling rate, proportional to R_hat(0)
  Lambda    radiation-leakage rate, a spectral integral over the radiation
            band (0, k^2) weighted by R_hat(beta - sqrt(gamma))
  Theta     leakage-induced dispersion (same spectral factor, sine transform)
  kappa     deterministic second-order phase, proportional to R(0)
  kappa_ev  evanescent-coupling phase, a double integral over gamma < 0

All spectral integrals share the bracketed factor ``spectral_bracket``;
endpoint singularities 1/sqrt(gamma) and 1/eta_gamma are removed by the
substitutions gamma = u^2 and gamma = k^2 - v^2.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, QuadratureNotConverged
from .mode_spectrum import (GuidedMode, SingleWaveguideMode, WaveguideGeometry,
                            guided_eigenfunction)
from .random_media import CovarianceModel

_Z_TRUNC_RATIO = 1e-14


@dataclass(frozen=True)
class InterfaceDisplacement:
    """One joint draw (nu1..nu4) of the dimensionless displacements."""

    nu: tuple
    scale: float = 0.0  # epsilon * D, kept for pathwise reconstruction

    def __post_init__(self):
        if len(self.nu) != 4:
            raise ValueError("nu must hold four values")


@dataclass(frozen=True)
class EffectiveCoefficients:
    Gamma: float
    Lambda: float
    Theta: float
    kappa: float
    kappa_ev: float
    beta_prime: float

    def gamma_table(self):
        """2x2 guided coupling table, rows/cols ordered (even, odd).

        Off-diagonal entries are +Gamma and the diagonal closes the rows to
        zero sum, which is the conservation structure of the power equations.
        """
        g = self.Gamma
        return np.array([[-g, g], [g, -g]])


def interface_positions(geom: WaveguideGeometry):
    """The four unperturbed interface coordinates, ordered left to right."""
    a, b = geom.d / 2, geom.d / 2 + geom.D
    return (-b, -a, a, b)


def coupling_C_guided(mode_a: GuidedMode, mode_b: GuidedMode,
                      geom: WaveguideGeometry, disp: InterfaceDisplacement) -> float:
    """First-order coupling coefficient between two guided modes.

    Alternating-sign sum of D * nu_q times the eigenfunction product at the
    q-th interface; symmetric in the two modes.
    """
    x1, x2, x3, x4 = interface_positions(geom)
    p = [float(guided_eigenfunction(mode_a, geom, x)
               * guided_eigenfunction(mode_b, geom, x)) for x in (x1, x2, x3, x4)]
    n1, n2, n3, n4 = disp.nu
    return geom.D * (-n1 * p[0] + n2 * p[1] - n3 * p[2] + n4 * p[3])


def second_order_phase_c(sm: SingleWaveguideMode, geom: WaveguideGeometry,
                         cov: CovarianceModel) -> float:
    """Mean second-order self-overlap of a guided mode, -2 D^2 R(0) xi sin(xi D)/(2/eta + D)."""
    return (-2.0 * geom.D ** 2 * float(cov.R(0.0)) * sm.xi
            * math.sin(sm.xi * geom.D) / (2 / sm.eta + geom.D))


def spectral_bracket(gamma, geom: WaveguideGeometry):
    """Bracketed radiation-overlap factor, valid for gamma < k^2 (gamma != 0).

    With q = xi_gamma^2 / eta_gamma^2 and s2 = sin^2(xi_gamma D):
    (2 q + s2 (1 - q)) / (4 q + s2 (1 - q)^2).
    """
    gamma = np.asarray(gamma, dtype=float)
    q = (geom.nk ** 2 - gamma) / (geom.k ** 2 - gamma)
    s2 = np.sin(np.sqrt(geom.nk ** 2 - gamma) * geom.D) ** 2
    out = (2 * q + s2 * (1 - q)) / (4 * q + s2 * (1 - q) ** 2)
    return out if out.shape else float(out)


def _quad_checked(fn, a, b, rtol, name, **kw):
    val, err = quad(fn, a, b, limit=kw.pop("limit", 400),
                    epsabs=kw.pop("epsabs", 1e-13), epsrel=rtol, **kw)
    if err > rtol * max(abs(val), 1.0) * 10 + 1e-12:
        raise QuadratureNotConverged(
            f"{name}: estimated error {err:.3e} for value {val:.6e}")
    return val


def _z_truncation(cov: CovarianceModel) -> float:
    """Range beyond which |R(z)| stays below 1e-14 R(0)."""
    r0 = float(cov.R(0.0))
    if r0 == 0.0:
        return 1.0
    if cov.family == "gaussian":
        return cov.ell * math.sqrt(-2 * math.log(_Z_TRUNC_RATIO))
    # spectral families decay algebraically; scan for the envelope crossing
    z = cov.ell
    while z < 1e9 * cov.ell:
        env = 1.0 / (cov.kappa_max * z / 2) ** 2 if cov.kappa_max * z > 2 else 1.0
        if env < _Z_TRUNC_RATIO:
            return z
        z *= 2
    return z


def _z_transform(cov, weight, rtol, name):
    zmax = _z_truncation(cov)
    return _quad_checked(lambda z: float(cov.R(z)) * weight(z), 0.0, zmax,
                         rtol, name, limit=800)


def _mode_prefactor(sm: SingleWaveguideMode, geom: WaveguideGeometry) -> float:
    return (geom.delta_k2 ** 2 * geom.D ** 2
            * math.cos(sm.xi * geom.D / 2) ** 2
            / (sm.beta * (2 / sm.eta + geom.D)))


def gamma_coeff(sm: SingleWaveguideMode, geom: WaveguideGeometry,
                cov: CovarianceModel) -> float:
    """Guided-guided coupling rate Gamma."""
    return (geom.delta_k2 ** 2 * geom.D ** 2
            * math.cos(sm.xi * geom.D / 2) ** 4 * float(cov.R_hat(0.0))
            / (sm.beta ** 2 * (2 / sm.eta + geom.D) ** 2))


def _radiation_integral(sm, geom, cov, inner, rtol, name):
    """Integral over gamma in (0, k^2) of bracket/(pi eta_g sqrt(g)) * inner(g),
    with square-root substitutions at both endpoints."""
    k2 = geom.k ** 2
    half = math.sqrt(k2 / 2)

    def low(u):  # gamma = u^2 kills 1/sqrt(gamma)
        g = u * u
        return float(spectral_bracket(g, geom)) * 2 / (math.pi * math.sqrt(k2 - g)) * inner(g)

    def high(v):  # gamma = k^2 - v^2 kills 1/eta_gamma
        g = k2 - v * v
        return float(spectral_bracket(g, geom)) * 2 / (math.pi * math.sqrt(g)) * inner(g)

    val = (_quad_checked(low, 0.0, half, rtol, name + "[0,k^2/2]")
           + _quad_checked(high, 0.0, half, rtol, name + "[k^2/2,k^2]"))
    return val


def lambda_coeff(sm: SingleWaveguideMode, geom: WaveguideGeometry,
                 cov: CovarianceModel, rtol: float = 1e-6) -> float:
    """Radiation-leakage rate Lambda (nonnegative)."""
    pref = _mode_prefactor(sm, geom) / 2.0

    def inner(g):
        return float(cov.R_hat(sm.beta - math.sqrt(g)))

    return pref * _radiation_integral(sm, geom, cov, inner, rtol, "Lambda")


def theta_coeff(sm: SingleWaveguideMode, geom: WaveguideGeometry,
                cov: CovarianceModel, rtol: float = 1e-6) -> float:
    """Leakage-induced dispersion Theta."""
    pref = _mode_prefactor(sm, geom)

    def inner(g):
        a = math.sqrt(g) - sm.beta
        return _z_transform(cov, lambda z: math.sin(a * z), rtol, "Theta inner")

    return pref * _radiation_integral(sm, geom, cov, inner, rtol, "Theta")


def kappa_coeffs(sm: SingleWaveguideMode, geom: WaveguideGeometry,
                 cov: CovarianceModel, rtol: float = 1e-6):
    """Deterministic and evanescent phase coefficients (kappa, kappa_ev)."""
    kappa = (-geom.delta_k2 * geom.D ** 2 * sm.xi * float(cov.R(0.0))
             * math.sin(sm.xi * geom.D) / (sm.beta * (2 / sm.eta + geom.D)))
    pref = _mode_prefactor(sm, geom)
    zmax = _z_truncation(cov)

    def outer(s):  # gamma = -s^2 kills 1/sqrt(|gamma|)
        g = -s * s
        zcut = min(zmax, 27.7 / s) if s > 0 else zmax  # e^{-s z} < 1e-12 beyond
        inner = _quad_checked(
            lambda z: float(cov.R(z)) * math.cos(sm.beta * z) * math.exp(-s * z),
            0.0, zcut, rtol, "kappa_ev inner")
        return (float(spectral_bracket(g, geom)) * 2
                / (math.pi * math.sqrt(geom.k ** 2 + s * s)) * inner)

    kappa_ev = pref * _quad_checked(outer, 0.0, np.inf, rtol, "kappa_ev outer",
                                    limit=300)
    return kappa, kappa_ev


def effective_coefficients(sm: SingleWaveguideMode, geom: WaveguideGeometry,
                           cov: CovarianceModel, rtol: float = 1e-6) -> EffectiveCoefficients:
    """All homogenized rates for the single-mode pair."""
    kap, kev = kappa_coeffs(sm, geom, cov, rtol)
    return EffectiveCoefficients(
        Gamma=gamma_coeff(sm, geom, cov),
        Lambda=lambda_coeff(sm, geom, cov, rtol),
        Theta=theta_coeff(sm, geom, cov, rtol),
        kappa=kap,
        kappa_ev=kev,
        beta_prime=sm.beta_prime,
    )


def circle_average(alphas) -> float:
    """Closed form of (1/2pi) * integral over a period of
    (a1 + a2 cos s + a3 sin s) / (a4 + a5 cos s + a6 sin s).

    Requires a4 > sqrt(a5^2 + a6^2); the degenerate a5 = a6 = 0 limit is the
    constant ratio a1/a4.
    """
    a1, a2, a3, a4, a5, a6 = (float(a) for a in alphas)
    rho2 = a5 * a5 + a6 * a6
    if a4 <= math.sqrt(rho2):
        raise DomainError(f"need a4 > sqrt(a5^2+a6^2); got a4={a4}, rho={math.sqrt(rho2)}")
    if rho2 == 0.0:
        return a1 / a4
    disc = math.sqrt(a4 * a4 - rho2)
    return (a1 + (a2 * a5 + a3 * a6) / rho2 * (disc - a4)) / disc
