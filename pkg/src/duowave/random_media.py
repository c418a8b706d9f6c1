"""Stationary bounded random processes for the four interface displacements.

The default synthesis superposes ``n_modes`` cosines whose frequencies are
drawn from the normalized power spectral density and whose phases are
independent and uniform; the ensemble covariance is then exactly the model
covariance for any number of modes.  An FFT-based Gaussian path with the same
covariance and seeding contract is available for long grids where the
superposition is too expensive.  Realizations are clamped to
``nu_max_sigmas`` standard deviations to honor the boundedness hypothesis;
the clamp rate is recorded.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainTooShort, FlatSpectrum, GridTooCoarse

_SQRT2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class CovarianceModel:
    """Covariance R(z) and spectral density R_hat(kappa) of one displacement.

    Families:
      ``gaussian``    R(z) = sigma2 exp(-z^2 / (2 ell^2))
      ``bandlimited`` triangular spectrum on [-kappa_max, kappa_max]
      ``bandpass``    triangular spectrum pair centered at +-kappa_center

    ``ell`` always stores a correlation length used for resolution checks;
    for the spectral families it is derived from the band edge.
    """

    family: str
    sigma2: float
    ell: float
    kappa_max: float = 0.0
    kappa_center: float = 0.0

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.family not in ("gaussian", "bandlimited", "bandpass"):
            raise ValueError(f"unknown covariance family {self.family!r}")

    def R(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "gaussian":
            out = self.sigma2 * np.exp(-z * z / (2 * self.ell ** 2))
        elif self.family == "bandlimited":
            out = self.sigma2 * np.sinc(self.kappa_max * z / (2 * np.pi)) ** 2
        else:
            out = (self.sigma2 * np.sinc(self.kappa_max * z / (2 * np.pi)) ** 2
                   * np.cos(self.kappa_center * z))
        return out if out.shape else float(out)

    def R_hat(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        if self.family == "gaussian":
            out = (self.sigma2 * self.ell * _SQRT2PI
                   * np.exp(-kappa ** 2 * self.ell ** 2 / 2))
        elif self.family == "bandlimited":
            out = (2 * np.pi * self.sigma2 / self.kappa_max
                   * np.clip(1 - np.abs(kappa) / self.kappa_max, 0, None))
        else:
            amp = np.pi * self.sigma2 / self.kappa_max
            out = amp * (np.clip(1 - np.abs(kappa - self.kappa_center) / self.kappa_max, 0, None)
                         + np.clip(1 - np.abs(kappa + self.kappa_center) / self.kappa_max, 0, None))
        return out if out.shape else float(out)

    def spectral_tail_sup(self, k):
        """sup of R_hat over |kappa| >= k, evaluated analytically."""
        if self.family == "gaussian":
            return float(self.R_hat(k))
        if self.family == "bandlimited":
            return float(self.R_hat(k)) if k < self.kappa_max else 0.0
        lo, hi = self.kappa_center - self.kappa_max, self.kappa_center + self.kappa_max
        if k >= hi:
            return 0.0
        return float(self.R_hat(max(k, self.kappa_center)))

    def sample_frequencies(self, rng, m):
        """Draw m frequencies from R_hat / integral(R_hat)."""
        if self.family == "gaussian":
            return rng.normal(0.0, 1.0 / self.ell, m)
        tri = self.kappa_max * (rng.random(m) + rng.random(m) - 1.0)
        if self.family == "bandlimited":
            return tri
        signs = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        return self.kappa_center * signs + tri


def gaussian_covariance(sigma2, ell) -> CovarianceModel:
    return CovarianceModel(family="gaussian", sigma2=sigma2, ell=ell)


def bandlimited_covariance(sigma2, kappa_max) -> CovarianceModel:
    """Covariance whose spectrum is a triangle supported on [-kappa_max, kappa_max]."""
    return CovarianceModel(family="bandlimited", sigma2=sigma2,
                           ell=np.pi / kappa_max, kappa_max=kappa_max)


def bandpass_covariance(sigma2, kappa_center, kappa_halfwidth) -> CovarianceModel:
    """Covariance with vanishing spectral density at zero wavenumber."""
    if kappa_center <= kappa_halfwidth:
        raise ValueError("bandpass requires kappa_center > kappa_halfwidth")
    return CovarianceModel(family="bandpass", sigma2=sigma2,
                           ell=np.pi / (kappa_center + kappa_halfwidth),
                           kappa_max=kappa_halfwidth, kappa_center=kappa_center)


@dataclass
class ProcessRealization:
    """Sampled displacement processes for the four interfaces."""

    dz: float
    values: np.ndarray        # shape (4, n)
    seed: int
    clamp_rate: float
    method: str
    nu_max: float

    @property
    def z(self):
        return self.dz * np.arange(self.values.shape[1])


def _interface_rng(seed, q):
    # substream per interface: seed XOR interface index (1..4)
    return np.random.default_rng(int(seed) ^ q)


def _synth_harmonic(cov, dz, n, seed, n_modes):
    values = np.empty((4, n))
    amp = math.sqrt(2.0 * cov.sigma2 / n_modes)
    for q in range(1, 5):
        rng = _interface_rng(seed, q)
        kap = cov.sample_frequencies(rng, n_modes)
        ph = rng.uniform(0.0, 2 * np.pi, n_modes)
        values[q - 1] = _kernels.harmonic_superpose(kap, ph, amp, 0.0, dz, n)
    return values


def _synth_fft(cov, dz, n, seed):
    # circulant spectral synthesis: rfft bins scaled so the circular
    # covariance matches R on the (periodized) grid
    nfft = 1 << max(int(np.ceil(np.log2(2 * n))), 4)
    freqs = 2 * np.pi * np.fft.rfftfreq(nfft, d=dz)
    sig = np.sqrt(np.maximum(cov.R_hat(freqs), 0.0) * nfft / dz)
    values = np.empty((4, n))
    for q in range(1, 5):
        rng = _interface_rng(seed, q)
        re = rng.standard_normal(sig.shape[0])
        im = rng.standard_normal(sig.shape[0])
        spec = sig * (re + 1j * im) / math.sqrt(2.0)
        spec[0] = sig[0] * re[0]
        spec[-1] = sig[-1] * re[-1]
        values[q - 1] = np.fft.irfft(spec, n=nfft)[:n]
    return values


def synthesize(cov: CovarianceModel, dz: float, n_samples: int, seed: int,
               n_modes: int = 2048, method: str = "harmonic",
               nu_max_sigmas: float = 5.0) -> ProcessRealization:
    """Synthesize the four iid interface displacement processes.

    Deterministic for a given seed; the four component processes come from
    independent substreams (seed XOR interface index) so results do not
    depend on evaluation order.
    """
    if dz > cov.ell / 8:
        raise GridTooCoarse(f"dz={dz} must be <= ell/8 = {cov.ell / 8}")
    if n_samples * dz < 50 * cov.ell:
        raise DomainTooShort(
            f"domain {n_samples * dz} shorter than 50 ell = {50 * cov.ell}")
    if cov.sigma2 == 0.0:
        return ProcessRealization(dz=dz, values=np.zeros((4, n_samples)),
                                  seed=seed, clamp_rate=0.0, method=method,
                                  nu_max=0.0)
    if method == "harmonic":
        if n_modes < 2048:
            raise ValueError("n_modes must be at least 2048")
        values = _synth_harmonic(cov, dz, n_samples, seed, n_modes)
    elif method == "fft":
        values = _synth_fft(cov, dz, n_samples, seed)
    else:
        raise ValueError(f"unknown synthesis method {method!r}")
    nu_max = nu_max_sigmas * math.sqrt(cov.sigma2)
    clipped = np.abs(values) > nu_max
    rate = float(clipped.mean())
    if rate:
        np.clip(values, -nu_max, nu_max, out=values)
    return ProcessRealization(dz=dz, values=values, seed=seed,
                              clamp_rate=rate, method=method, nu_max=nu_max)


@dataclass(frozen=True)
class ForwardScatterDiagnostic:
    ok: bool
    ratio: float
    tol: float


def check_forward_scattering(cov: CovarianceModel, k: float,
                             tol: float = 1e-3) -> ForwardScatterDiagnostic:
    """True iff the spectral density at |kappa| >= k is <= tol * R_hat(0)."""
    peak = float(cov.R_hat(0.0))
    if peak == 0.0:
        raise FlatSpectrum("R_hat(0) = 0; forward-scattering ratio undefined")
    ratio = cov.spectral_tail_sup(k) / peak
    return ForwardScatterDiagnostic(ok=ratio <= tol, ratio=ratio, tol=tol)


def realization_to_csv(real: ProcessRealization, path):
    """Debug dump with columns z, nu1..nu4."""
    from .io import write_csv

    cols = {"z": real.z}
    for q in range(4):
        cols[f"nu{q + 1}"] = real.values[q]
    write_csv(path, cols)
