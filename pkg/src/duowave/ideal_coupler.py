"""Deterministic propagation in the unperturbed coupler.

Projects a transverse source profile onto the guided modes, evolves the
per-waveguide amplitudes u+(z), u-(z) of the two cores, and synthesizes the
guided part of the field.  The radiation/evanescent remainder decays in
range and is excluded from the default path; a debug quadrature over a
uniform spectral grid is available for qualitative checks.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureNotConverged
from .mode_spectrum import (GuidedMode, WaveguideGeometry, continuum_params,
                            continuum_eigenfunction, guided_eigenfunction,
                            single_eigenfunction, solve_single_beta)

RIGHT_FUNDAMENTAL = "right-waveguide-fundamental"


@dataclass(frozen=True)
class SourceProfile:
    """Transverse source f(x): a named excitation, a callable, or samples."""

    kind: str
    fn: object = None
    x_samples: object = None
    y_samples: object = None

    def resolve(self, geom: WaveguideGeometry):
        """Return a vectorized callable for f(x)."""
        if self.kind == RIGHT_FUNDAMENTAL:
            sm = solve_single_beta(geom)

            def f(x):
                x = np.asarray(x, dtype=float)
                return np.where(x > 0, single_eigenfunction(sm, geom, np.abs(x)), 0.0)

            return f
        if self.kind == "callable":
            return lambda x: np.asarray(self.fn(np.asarray(x, dtype=float)))
        if self.kind == "sampled":
            xs = np.asarray(self.x_samples, dtype=float)
            ys = np.asarray(self.y_samples, dtype=float)

            return lambda x: np.interp(np.asarray(x, dtype=float), xs, ys,
                                       left=0.0, right=0.0)
        raise ValueError(f"unknown source kind {self.kind!r}")


def right_fundamental() -> SourceProfile:
    """Source equal to the isolated right-hand core's mode on x > 0."""
    return SourceProfile(kind=RIGHT_FUNDAMENTAL)


def from_callable(fn) -> SourceProfile:
    return SourceProfile(kind="callable", fn=fn)


def from_samples(x, y) -> SourceProfile:
    return SourceProfile(kind="sampled", x_samples=tuple(x), y_samples=tuple(y))


def _projection(f, phi, geom, eta, rtol=1e-10):
    b = geom.d / 2 + geom.D
    ext = 40.0 / eta
    val, err = quad(lambda t: float(phi(t)) * float(f(t)), -b - ext, b + ext,
                    points=[-b, -geom.d / 2, 0.0, geom.d / 2, b],
                    limit=400, epsabs=1e-12, epsrel=rtol)
    if err > 1e-7:
        raise QuadratureNotConverged(f"source projection error {err:.3e}")
    return val


def source_amplitudes(source: SourceProfile, even_mode: GuidedMode,
                      odd_mode: GuidedMode, geom: WaveguideGeometry):
    """Initial guided amplitudes (a_e0, a_o0) = (sqrt(beta_t)/2) <phi_t, f>."""
    f = source.resolve(geom)
    norm2 = _projection(f, f, geom, even_mode.eta)
    if not math.isfinite(norm2):
        raise ValueError("source has no finite L2 norm")
    a_e = 0.5 * math.sqrt(even_mode.beta) * _projection(
        f, lambda t: guided_eigenfunction(even_mode, geom, t), geom, even_mode.eta)
    a_o = 0.5 * math.sqrt(odd_mode.beta) * _projection(
        f, lambda t: guided_eigenfunction(odd_mode, geom, t), geom, odd_mode.eta)
    return complex(a_e), complex(a_o)


def source_radiation_amplitudes(source: SourceProfile, geom: WaveguideGeometry,
                                parity: str, gammas):
    """Radiation/evanescent amplitudes |gamma|^{1/4}/2 <phi_gamma, f> on a grid."""
    f = source.resolve(geom)
    out = np.empty(len(gammas), dtype=complex)
    for i, g in enumerate(gammas):
        params = continuum_params(parity, float(g), geom)
        val = _projection(f, lambda t: continuum_eigenfunction(params, geom, t),
                          geom, eta=max(math.sqrt(abs(g)), 1.0))
        out[i] = 0.5 * abs(g) ** 0.25 * val
    return out


@dataclass
class IdealAmplitudes:
    """Per-waveguide amplitudes on a range grid, with the initial pair."""

    z: np.ndarray
    a_e0: complex
    a_o0: complex
    u_plus: np.ndarray
    u_minus: np.ndarray


def ideal_u(z, a_e0, a_o0, beta_prime, eta, d) -> IdealAmplitudes:
    """Slowly rotating pair u+- driven by the splitting beta' exp(-eta d).

    u+ = (a_e + a_o) cos(phi) + i (a_e - a_o) sin(phi),
    u- = (a_e - a_o) cos(phi) + i (a_e + a_o) sin(phi),  phi = beta' z e^{-eta d};
    |u+|^2 + |u-|^2 is conserved identically.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    phi = beta_prime * z * math.exp(-eta * d)
    c, s = np.cos(phi), np.sin(phi)
    p, m = a_e0 + a_o0, a_e0 - a_o0
    return IdealAmplitudes(z=z, a_e0=complex(a_e0), a_o0=complex(a_o0),
                           u_plus=p * c + 1j * m * s,
                           u_minus=m * c + 1j * p * s)


def synthesize_guided_field(z, x, even_mode: GuidedMode, odd_mode: GuidedMode,
                            geom: WaveguideGeometry, a_e, a_o):
    """Guided part of the field at range z on the transverse grid x."""
    x = np.asarray(x, dtype=float)
    field = (a_e / math.sqrt(even_mode.beta) * np.exp(1j * even_mode.beta * z)
             * guided_eigenfunction(even_mode, geom, x))
    field = field + (a_o / math.sqrt(odd_mode.beta) * np.exp(1j * odd_mode.beta * z)
                     * guided_eigenfunction(odd_mode, geom, x))
    return field


def radiation_field_debug(z, x, source: SourceProfile, geom: WaveguideGeometry,
                          n_grid: int = 256):
    """Qualitative radiation-field reconstruction on a uniform spectral grid.

    Debug-only quadrature; the guided part is the quantitative object.
    """
    x = np.asarray(x, dtype=float)
    k2 = geom.k ** 2
    gammas = (np.arange(n_grid) + 0.5) * k2 / n_grid
    dgam = k2 / n_grid
    total = np.zeros(x.shape, dtype=complex)
    for parity in ("even", "odd"):
        amps = source_radiation_amplitudes(source, geom, parity, gammas)
        for g, a in zip(gammas, amps):
            params = continuum_params(parity, float(g), geom)
            total += (a / g ** 0.25 * np.exp(1j * math.sqrt(g) * z)
                      * continuum_eigenfunction(params, geom, x)) * dgam
    return total


def field_to_csv(path, x, field):
    from .io import write_csv

    write_csv(path, {"x": x, "re_p": np.real(field), "im_p": np.imag(field),
                     "abs_p": np.abs(field)})
