"""Monte Carlo integration of the guided-mode coupled equations.

Integrates, in native range, the interaction-picture pair

    d a_t / dz = (i eps dk^2 / 2) sum_t' C_{t,t'}(z) / sqrt(beta_t beta_t')
                 * a_t' exp(i (beta_t' - beta_t) z)

driven by a synthesized realization of the four interface displacements;
the coupling matrix is real symmetric, so the evolution is unitary and the
guided power is conserved pathwise up to integrator error.  Trajectories are
recorded on a coarse grid of the scaled range z = eps^2 * (native range) and
reduced to ensemble moments with standard errors.
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, GridMismatch, NotSingleMode, StepTooCoarse
from .mode_spectrum import (WaveguideGeometry, guided_eigenfunction,
                            solve_single_beta)
from .random_media import CovarianceModel, check_forward_scattering, synthesize

log = logging.getLogger("duowave")

_MASK64 = (1 << 64) - 1


def realization_seed(seed: int, r: int) -> int:
    """Stable per-realization substream seed (seed XOR splitmix-style hash of r)."""
    x = (int(seed) ^ (0x9E3779B97F4A7C15 * (r + 1))) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


@dataclass
class SimulationConfig:
    """Scale parameters of one Monte Carlo run.

    ``L`` is the scaled range endpoint; the native integration range is
    L / epsilon^2.  ``dz_native`` must resolve the correlation length, the
    even-odd beat phase and the carrier phase (see ``validate_step``).
    """

    epsilon: float
    L: float
    dz_native: float
    ensemble: int
    seed: int
    record_points: int = 512
    a_e0: complex = 2.0 ** -0.5
    a_o0: complex = 2.0 ** -0.5
    forward_tol: float = 1e-3

    def __post_init__(self):
        if not (0 < self.epsilon <= 0.1):
            raise ValueError(f"epsilon must be in (0, 0.1], got {self.epsilon}")
        if self.L <= 0 or self.dz_native <= 0 or self.ensemble < 1:
            raise ValueError("L, dz_native and ensemble must be positive")


def theta_parameter(epsilon: float, eta: float, d: float) -> float:
    """Scaled coupling strength eps^-2 exp(-eta d); logged on every run."""
    theta = math.exp(-eta * d) / epsilon ** 2
    log.info("theta = eps^-2 exp(-eta d) = %.6g", theta)
    return theta


def step_bound(modes, cov: CovarianceModel) -> float:
    """Largest admissible native step for the given modes and covariance."""
    me, mo = modes
    beat = abs(me.beta - mo.beta)
    bound = min(cov.ell / 8.0, 2 * math.pi / (50.0 * me.beta))
    if beat > 0:
        bound = min(bound, 0.1 / beat)
    return bound


def validate_step(modes, cov: CovarianceModel, config: SimulationConfig):
    bound = step_bound(modes, cov)
    if config.dz_native > bound:
        raise StepTooCoarse(
            f"dz_native={config.dz_native:.6g} exceeds the resolution bound "
            f"{bound:.6g} (correlation length / beat phase / carrier phase)")


@dataclass
class Trajectory:
    """One realization of the guided amplitudes on the scaled recording grid."""

    z: np.ndarray            # scaled range
    a_e: np.ndarray
    a_o: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray
    norm_drift: float
    seed: int


def _interface_products(modes, geom):
    me, mo = modes
    a, b = geom.d / 2, geom.d / 2 + geom.D
    pe = [float(guided_eigenfunction(me, geom, x)) for x in (a, b)]
    po = [float(guided_eigenfunction(mo, geom, x)) for x in (a, b)]
    return {
        "ee": (pe[0] * pe[0], pe[1] * pe[1]),
        "eo": (pe[0] * po[0], pe[1] * po[1]),
        "oo": (po[0] * po[0], po[1] * po[1]),
    }


def _coupling_processes(nu, prods, D):
    """C_ee, C_eo, C_oo on the process grid from the four displacements."""
    diff41 = nu[3] - nu[0]
    diff23 = nu[1] - nu[2]
    sum14 = nu[0] + nu[3]
    sum23 = nu[1] + nu[2]
    c_ee = D * (diff41 * prods["ee"][1] + diff23 * prods["ee"][0])
    c_oo = D * (diff41 * prods["oo"][1] + diff23 * prods["oo"][0])
    c_eo = D * (sum14 * prods["eo"][1] - sum23 * prods["eo"][0])
    return c_ee, c_eo, c_oo


def simulate_guided(geom: WaveguideGeometry, modes, cov: CovarianceModel,
                    config: SimulationConfig, realization: int = 0,
                    method: str = "fft") -> Trajectory:
    """Integrate one realization of the guided-only stochastic system."""
    if not geom.single_mode:
        raise NotSingleMode("simulation requires the single-mode regime")
    diag = check_forward_scattering(cov, geom.k, config.forward_tol)
    if not diag.ok:
        raise DomainError(
            f"forward-scattering check failed: tail ratio {diag.ratio:.3e} "
            f"> tol {diag.tol:.1e}")
    validate_step(modes, cov, config)
    me, mo = modes
    h = config.dz_native
    zeta_max = config.L / config.epsilon ** 2
    n_steps = int(math.ceil(zeta_max / h))
    n_half = 2 * n_steps + 1

    seed_r = realization_seed(config.seed, realization)
    real = synthesize(cov, h / 2, n_half, seed_r, method=method)
    prods = _interface_products(modes, geom)
    c_ee, c_eo, c_oo = _coupling_processes(real.values, prods, geom.D)

    g = config.epsilon * geom.delta_k2 / 2.0
    pref_e = g / me.beta
    pref_o = g / mo.beta
    pref_x = g / math.sqrt(me.beta * mo.beta)
    delta_beta = me.beta - mo.beta

    rec_steps = np.unique(np.round(
        np.linspace(0.0, n_steps, config.record_points)).astype(np.int64))
    ae, ao, drift = _kernels.rk4_coupled(
        c_ee, c_eo, c_oo, h, delta_beta, pref_e, pref_x, pref_o,
        rec_steps, complex(config.a_e0), complex(config.a_o0))
    if drift > 1e-4:
        raise StepTooCoarse(
            f"norm drift {drift:.3e} exceeds 1e-4; native step {h:.3e} "
            f"under-resolves the coupling (seed {seed_r})")

    zeta = rec_steps * h
    z = config.epsilon ** 2 * zeta
    # per-core amplitudes relative to the isolated-core carrier
    beta_ref = solve_single_beta(geom).beta
    ph_e = np.exp(1j * (me.beta - beta_ref) * zeta)
    ph_o = np.exp(1j * (mo.beta - beta_ref) * zeta)
    u_plus = ae * ph_e + ao * ph_o
    u_minus = ae * ph_e - ao * ph_o
    return Trajectory(z=z, a_e=ae, a_o=ao, u_plus=u_plus, u_minus=u_minus,
                      norm_drift=float(drift), seed=seed_r)


@dataclass
class EnsembleMoments:
    """Per-z sample moments with standard errors over the ensemble."""

    z: np.ndarray
    n: int
    mean_pe: np.ndarray
    se_pe: np.ndarray
    mean_po: np.ndarray
    se_po: np.ndarray
    cross: np.ndarray         # E[a_o conj(a_e)]
    se_cross: np.ndarray      # componentwise SE (max of re/im)
    imbalance: np.ndarray
    se_imbalance: np.ndarray
    m4_e: np.ndarray
    m4_o: np.ndarray
    m22: np.ndarray
    se_m4_e: np.ndarray = field(default=None)
    se_m4_o: np.ndarray = field(default=None)
    se_m22: np.ndarray = field(default=None)
    max_drift: float = 0.0


def _mean_se(arr):
    n = arr.shape[0]
    mean = arr.mean(axis=0)
    if n > 1:
        se = arr.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        se = np.zeros_like(mean)
    return mean, se


def ensemble_moments(trajectories) -> EnsembleMoments:
    """Reduce trajectories on a common grid to moments and standard errors."""
    if len(trajectories) < 2:
        raise ValueError("need at least two trajectories")
    z = trajectories[0].z
    for t in trajectories[1:]:
        if t.z.shape != z.shape or not np.array_equal(t.z, z):
            raise GridMismatch("trajectories recorded on different grids")
    ae = np.stack([t.a_e for t in trajectories])
    ao = np.stack([t.a_o for t in trajectories])
    up = np.stack([t.u_plus for t in trajectories])
    um = np.stack([t.u_minus for t in trajectories])
    pe = np.abs(ae) ** 2
    po = np.abs(ao) ** 2
    cross = ao * np.conj(ae)
    pp, pm = np.abs(up) ** 2, np.abs(um) ** 2
    imb = (pp - pm) / (pp + pm)

    mean_pe, se_pe = _mean_se(pe)
    mean_po, se_po = _mean_se(po)
    cr_re, se_re = _mean_se(np.real(cross))
    cr_im, se_im = _mean_se(np.imag(cross))
    mean_imb, se_imb = _mean_se(imb)
    m4e, se_m4e = _mean_se(pe ** 2)
    m4o, se_m4o = _mean_se(po ** 2)
    m22, se_m22 = _mean_se(pe * po)
    return EnsembleMoments(
        z=z, n=len(trajectories),
        mean_pe=mean_pe, se_pe=se_pe, mean_po=mean_po, se_po=se_po,
        cross=cr_re + 1j * cr_im, se_cross=np.maximum(se_re, se_im),
        imbalance=mean_imb, se_imbalance=se_imb,
        m4_e=m4e, m4_o=m4o, m22=m22,
        se_m4_e=se_m4e, se_m4_o=se_m4o, se_m22=se_m22,
        max_drift=max(t.norm_drift for t in trajectories))


def run_ensemble(geom, modes, cov, config: SimulationConfig,
                 method: str = "fft", return_trajectories: bool = False):
    """Simulate the configured ensemble and reduce it to moments.

    Realizations use independent substream seeds, so results are identical
    whatever the execution order; DUOWAVE_THREADS > 1 runs them on a thread
    pool and reduces in fixed index order.
    """
    me, _ = modes
    theta_parameter(config.epsilon, me.eta, geom.d)
    workers = int(os.environ.get("DUOWAVE_THREADS", "1") or "1")

    def one(r):
        return simulate_guided(geom, modes, cov, config, realization=r,
                               method=method)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(one, range(config.ensemble)))
    else:
        trajectories = [one(r) for r in range(config.ensemble)]
    moments = ensemble_moments(trajectories)
    if return_trajectories:
        return moments, trajectories
    return moments


def moments_to_csv(em: EnsembleMoments, path):
    from .io import write_csv

    write_csv(path, {
        "z": em.z,
        "mean_Pe": em.mean_pe, "se_Pe": em.se_pe,
        "mean_Po": em.mean_po, "se_Po": em.se_po,
        "Re_cross": np.real(em.cross), "Im_cross": np.imag(em.cross),
        "imbalance": em.imbalance, "se_imbalance": em.se_imbalance,
        "m4_e": em.m4_e, "m4_o": em.m4_o, "m22": em.m22,
    })
