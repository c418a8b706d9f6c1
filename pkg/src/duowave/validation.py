"""End-to-end validation: every release criterion as a runnable check.

Each criterion function returns a ``CriterionResult``; ``run_validation``
executes the suite, writes the data artifacts (eigenfunction tables,
imbalance curves, Monte Carlo moments) and a pass/fail report.

Reference geometry: k = 2 pi, n = 1.1, D = 1 (wavelength-wide cores) for the
spectral and coefficient checks.  The Monte Carlo comparison runs at
k = pi, n = 1.3 with a longer correlation length: the smaller propagation
constant relaxes the carrier-resolution bound on the step so the ensemble
fits a desk-scale budget, while the forward-scattering condition still
holds with ample margin.
"""
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import oracles
from .coefficients import (circle_average, effective_coefficients, gamma_coeff,
                           lambda_coeff)
from .ideal_coupler import ideal_u
from .io import write_csv
from .mode_spectrum import (WaveguideGeometry, guided_eigenfunction,
                            guided_mode_norm, single_dispersion_residual,
                            single_eigenfunction, solve_coupled_betas,
                            solve_single_beta, splitting_defect)
from .moment_theory import (figure3_curves, imbalance_ode_oracle,
                            imbalance_weak, mean_power_ode, moments_moderate)
from .random_media import bandlimited_covariance, gaussian_covariance
from .stochastic_dynamics import (SimulationConfig, moments_to_csv,
                                  run_ensemble, step_bound)

REFERENCE_GEOMETRY = dict(k=2 * math.pi, n=1.1, D=1.0)
MC_GEOMETRY = dict(k=math.pi, n=1.3, D=1.0)
MC_COVARIANCE = dict(sigma2=1.0, ell=1.5)

# max |phi_e - phi(|x|)| / exp(-eta d) at d = 4 D, measured once by a brute
# grid scan on the reference geometry (the midpoint tail dominates)
FIG2_PINNED_C = 45.0


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _result(name, passed, detail, t0):
    return CriterionResult(name=name, passed=bool(passed), detail=detail,
                           seconds=time.perf_counter() - t0)


def criterion_spectrum() -> CriterionResult:
    """Single root, tight residual, and agreement with the constructive solve."""
    t0 = time.perf_counter()
    geom = WaveguideGeometry(d=4.0, **REFERENCE_GEOMETRY)
    sm = solve_single_beta(geom)
    res = abs(single_dispersion_residual(sm.beta, geom))
    oracle = oracles.beta_from_halfwidth_construction(geom)
    grid = np.linspace(geom.k + 1e-9 * geom.k, geom.nk - 1e-9 * geom.k, 400)
    vals = np.array([single_dispersion_residual(b, geom) for b in grid])
    crossings = int(np.sum(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0))
    ok = (res < 1e-10 and abs(sm.beta - oracle) < 1e-10
          and geom.k < sm.beta < geom.nk and crossings == 1)
    return _result(
        "spectrum", ok,
        f"beta={sm.beta:.12f} residual={res:.2e} |beta-oracle|="
        f"{abs(sm.beta - oracle):.2e} sign_changes={crossings}", t0)


def criterion_normalization() -> CriterionResult:
    """Unit norms from the closed-form constants; parity orthogonality."""
    t0 = time.perf_counter()
    geom = WaveguideGeometry(d=4.0, **REFERENCE_GEOMETRY)
    evens, odds = solve_coupled_betas(geom)
    ne = guided_mode_norm(evens[0], geom)
    no = guided_mode_norm(odds[0], geom)
    from scipy.integrate import quad
    b = geom.d / 2 + geom.D
    ip, _ = quad(lambda x: float(guided_eigenfunction(evens[0], geom, x)
                                 * guided_eigenfunction(odds[0], geom, x)),
                 -b - 40 / evens[0].eta, b + 40 / evens[0].eta,
                 points=[-b, -geom.d / 2, geom.d / 2, b], limit=400)
    ok = abs(ne - 1) < 1e-8 and abs(no - 1) < 1e-8 and abs(ip) < 1e-10
    return _result(
        "normalization", ok,
        f"|norm_e-1|={abs(ne - 1):.2e} |norm_o-1|={abs(no - 1):.2e} "
        f"<phi_e,phi_o>={ip:.2e}", t0)


def criterion_splitting() -> CriterionResult:
    """Scaled defect of the splitting asymptotics decreases over d = 4,6,8 D."""
    t0 = time.perf_counter()
    vals = []
    for d in (4.0, 6.0, 8.0):
        geom = WaveguideGeometry(d=d, **REFERENCE_GEOMETRY)
        vals.append(splitting_defect(geom))
    ok = vals[0] > vals[1] > vals[2] > 0
    return _result("splitting", ok,
                   "exp(eta d)|be-bo-2b'e^-eta d| = "
                   + ", ".join(f"{v:.3e}" for v in vals), t0)


def criterion_figure2(outdir=None) -> CriterionResult:
    """Eigenfunction tables at d = D and 4 D; pinned proximity bound at 4 D."""
    t0 = time.perf_counter()
    details = []
    ok = True
    for d in (1.0, 4.0):
        geom = WaveguideGeometry(d=d, **REFERENCE_GEOMETRY)
        sm = solve_single_beta(geom)
        evens, odds = solve_coupled_betas(geom)
        x = np.linspace(-4 - d / 2, 4 + d / 2, 4001)
        phi_e = guided_eigenfunction(evens[0], geom, x)
        phi_o = guided_eigenfunction(odds[0], geom, x)
        phi = single_eigenfunction(sm, geom, np.abs(x))
        if outdir is not None:
            write_csv(os.path.join(outdir, f"figure2_d{d:g}.csv"),
                      {"x": x, "phi_e": phi_e, "phi_o": phi_o, "phi": phi})
        if d == 4.0:
            gap = float(np.max(np.abs(phi_e - phi)))
            bound = FIG2_PINNED_C * math.exp(-sm.eta * d)
            ok = gap <= bound
            details.append(f"max|phi_e-phi|={gap:.3e} bound={bound:.3e}")
    return _result("figure2", ok, "; ".join(details), t0)


def criterion_ideal_transfer() -> CriterionResult:
    """Power conservation of u+- and complete transfer at Z = pi / (2 beta')."""
    t0 = time.perf_counter()
    geom = WaveguideGeometry(d=4.0, **REFERENCE_GEOMETRY)
    sm = solve_single_beta(geom)
    a = 1.0
    scale = math.exp(sm.eta * geom.d)
    z = np.linspace(0.0, 2 * math.pi / (2 * sm.beta_prime) * scale, 10001)
    amps = ideal_u(z, a / 2, a / 2, sm.beta_prime, sm.eta, geom.d)
    power = np.abs(amps.u_plus) ** 2 + np.abs(amps.u_minus) ** 2
    cons = float(np.max(np.abs(power - 2 * (abs(a / 2) ** 2 + abs(a / 2) ** 2))))
    z_star = math.pi / (2 * sm.beta_prime) * scale
    at = ideal_u(z_star, a / 2, a / 2, sm.beta_prime, sm.eta, geom.d)
    transfer = abs(abs(at.u_plus[0]) ** 2) + abs(abs(at.u_minus[0]) ** 2 - a ** 2)
    ok = cons < 1e-12 and transfer < 1e-10
    return _result("ideal_transfer", ok,
                   f"conservation={cons:.2e} transfer_defect={transfer:.2e}", t0)


def criterion_circle_average(seed: int = 7) -> CriterionResult:
    """Closed-form circle average vs 1e4-point quadrature, 100 draws."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        a5, a6 = rng.normal(0, 1, 2)
        rho = math.hypot(a5, a6)
        a4 = rho * (1.05 + 2 * rng.random())
        a1, a2, a3 = rng.normal(0, 1, 3)
        closed = circle_average((a1, a2, a3, a4, a5, a6))
        quadr = oracles.circle_average_quadrature((a1, a2, a3, a4, a5, a6))
        worst = max(worst, abs(closed - quadr))
    return _result("circle_average", worst < 1e-9, f"max_error={worst:.2e}", t0)


def criterion_coefficients() -> CriterionResult:
    """Dual routes for the coupling and leakage rates."""
    t0 = time.perf_counter()
    cov = gaussian_covariance(1.0, 1.0)
    base = REFERENCE_GEOMETRY
    geom8 = WaveguideGeometry(d=8.0, **base)
    sm = solve_single_beta(geom8)
    gam = gamma_coeff(sm, geom8, cov)
    gam_oracle = oracles.gamma_pair_quadrature(geom8, cov)
    gam_rel = abs(gam_oracle - gam) / gam

    lam = lambda_coeff(sm, geom8, cov)
    rel = {}
    for d in (6.0, 10.0):
        lam_fd = oracles.lambda_finite_d(WaveguideGeometry(d=d, **base), cov)
        rel[d] = abs(lam_fd - lam) / lam
    # spectrum supported strictly below beta - k forces zero leakage
    cov0 = bandlimited_covariance(1.0, 0.8 * (sm.beta - geom8.k))
    lam0 = lambda_coeff(sm, geom8, cov0)
    ok = (gam_rel < 0.02 and rel[10.0] < 0.03 and rel[10.0] < rel[6.0]
          and abs(lam0) < 1e-10)
    return _result(
        "coefficients", ok,
        f"Gamma rel={gam_rel:.2e}; Lambda rel(d=6)={rel[6.0]:.2e} "
        f"rel(d=10)={rel[10.0]:.2e}; Lambda[banded]={lam0:.2e}", t0)


def criterion_moment_identities() -> CriterionResult:
    """Algebraic structure of the closed-form moments and the ODE oracle."""
    t0 = time.perf_counter()
    geom = WaveguideGeometry(d=4.0, **REFERENCE_GEOMETRY)
    sm = solve_single_beta(geom)
    cov = gaussian_covariance(0.7, 1.2)
    coeffs = effective_coefficients(sm, geom, cov)
    z = np.linspace(0.0, 3.0 / (coeffs.Gamma + coeffs.Lambda), 301)
    mc = moments_moderate(0.8 + 0.1j, 0.35 - 0.2j, coeffs, z)
    p0 = abs(0.8 + 0.1j) ** 2 + abs(0.35 - 0.2j) ** 2
    tot_err = float(np.max(np.abs(mc.p_e + mc.p_o - p0 * np.exp(-coeffs.Lambda * z)))) / p0
    var = mc.m4_e + mc.m4_o + 2 * mc.m22 - (mc.p_e + mc.p_o) ** 2
    var_rel = float(np.max(np.abs(var))) / p0 ** 2

    gam = coeffs.Gamma
    worst_ode = 0.0
    for ratio in (0.5, 1.0, 2.0):
        tb = ratio * gam  # theta * beta'
        zz = np.linspace(0.0, 5.0 / gam, 400)
        closed = imbalance_weak(tb, 1.0, gam, zz)
        ode = imbalance_ode_oracle(tb, 1.0, gam, zz)
        worst_ode = max(worst_ode, float(np.max(np.abs(closed - ode))))
    crit = imbalance_weak(0.5 * gam, 1.0, gam, np.array([1.0 / gam]))[0]
    crit_err = abs(crit - 2.0 / math.e)
    ok = (tot_err < 1e-14 and var_rel < 1e-12 and worst_ode < 1e-8
          and crit_err < 1e-12)
    return _result(
        "moment_identities", ok,
        f"total_power={tot_err:.2e} var={var_rel:.2e} ode={worst_ode:.2e} "
        f"critical={crit_err:.2e}", t0)


def _fit_decay_rate(z, cross_abs, zmax):
    mask = (z <= zmax) & (cross_abs > 0)
    a = np.vstack([np.ones(mask.sum()), -z[mask]]).T
    coef, *_ = np.linalg.lstsq(a, np.log(cross_abs[mask]), rcond=None)
    return coef[1]


def _grouped_rate_se(trajs_cross, z, zmax, groups=10):
    n = trajs_cross.shape[0]
    size = n // groups
    rates = []
    for g in range(groups):
        mean = np.abs(trajs_cross[g * size:(g + 1) * size].mean(axis=0))
        rates.append(_fit_decay_rate(z, mean, zmax))
    rates = np.asarray(rates)
    return float(rates.std(ddof=1) / math.sqrt(groups))


def _mc_setup(ratio, epsilon):
    geom_kwargs = dict(MC_GEOMETRY)
    cov = gaussian_covariance(**MC_COVARIANCE)
    probe = WaveguideGeometry(d=3.0, **geom_kwargs)
    sm = solve_single_beta(probe)
    gam = gamma_coeff(sm, probe, cov)
    d = -math.log(ratio * gam * epsilon ** 2 / sm.beta_prime) / sm.eta
    geom = WaveguideGeometry(d=d, **geom_kwargs)
    modes = solve_coupled_betas(geom)
    return geom, (modes[0][0], modes[1][0]), sm, cov, gam


def criterion_monte_carlo(outdir=None, ensemble: int = 2000,
                          seed: int = 20250701, epsilon: float = 0.05) -> CriterionResult:
    """Monte Carlo ensemble against the diffusion-limit imbalance and rates."""
    t0 = time.perf_counter()
    details = []
    ok = True
    fit_rate = fit_se = None
    gam_ref = None
    for ratio in (0.5, 2.0):
        geom, modes, sm, cov, gam = _mc_setup(ratio, epsilon)
        gam_ref = gam
        me, mo = modes
        zmax = 3.0 / gam
        h = 0.999 * step_bound(modes, cov)
        config = SimulationConfig(epsilon=epsilon, L=zmax, dz_native=h,
                                  ensemble=ensemble, seed=seed)
        em, trajs = run_ensemble(geom, modes, cov, config,
                                 return_trajectories=True)
        if outdir is not None:
            moments_to_csv(em, os.path.join(outdir, f"mc_moments_r{ratio:g}.csv"))
        # (a) pathwise conservation
        cons_ok = em.max_drift < 1e-6
        # (b) imbalance against the damped-oscillator curve, exact beat phase
        theta_eff = (me.beta - mo.beta) / (2 * sm.beta_prime * epsilon ** 2)
        theory = imbalance_weak(theta_eff, sm.beta_prime, gam, em.z)
        excess = np.abs(em.imbalance - theory) - 3 * em.se_imbalance - 1e-12
        pw_ok = bool(np.all(excess <= 0))
        n_fail = int(np.sum(excess > 0))
        ok = ok and cons_ok and pw_ok
        details.append(f"r={ratio:g}: drift={em.max_drift:.1e} "
                       f"pointwise_3se_fails={n_fail}/{em.z.size}")
        if ratio == 2.0:
            # (c) decay-rate fit is meaningful in the oscillatory branch,
            # where the cross moment's envelope decays at the coupling rate
            fit_rate = _fit_decay_rate(em.z, np.abs(em.cross), 2.0 / gam)
            rel = abs(fit_rate - gam) / gam
            rate_ok = rel < 0.10
            ok = ok and rate_ok
            details.append(f"fit_rate={fit_rate:.4f} vs Gamma={gam:.4f} "
                           f"rel={rel:.2%}")
            crosses = np.stack([t.a_o * np.conj(t.a_e) for t in trajs])
            fit_se = _grouped_rate_se(crosses, em.z, 2.0 / gam)
        del trajs
    # (d) halving epsilon moves the fitted rate by less than one SE
    eps2 = epsilon / 2
    geom, modes, sm, cov, gam = _mc_setup(2.0, eps2)
    h = 0.999 * step_bound(modes, cov)
    config2 = SimulationConfig(epsilon=eps2, L=2.0 / gam, dz_native=h,
                               ensemble=ensemble, seed=seed + 1)
    em2 = run_ensemble(geom, modes, cov, config2)
    rate2 = _fit_decay_rate(em2.z, np.abs(em2.cross), 2.0 / gam)
    shift = abs(rate2 - fit_rate)
    shift_ok = shift < fit_se if fit_se else False
    ok = ok and shift_ok
    details.append(f"eps-halved rate={rate2:.4f} shift={shift:.4f} "
                   f"1se={fit_se:.4f}")
    return _result("monte_carlo", ok, "; ".join(details), t0)


def criterion_figure3(outdir=None) -> CriterionResult:
    """Imbalance curves per damping level: suppressed revival, decaying tail."""
    t0 = time.perf_counter()
    x = np.linspace(0.0, 10.0, 2001)
    curves = figure3_curves((0.0, 0.25, 1.0, 4.0), x)
    if outdir is not None:
        for g, y in curves.items():
            write_csv(os.path.join(outdir, f"figure3_g{g:g}.csv"),
                      {"z_over_ztheta": x, "imbalance": y})
    # first interior revival peak per curve; monotone curves count as zero
    peaks = {}
    for g, y in curves.items():
        interior = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]) & (x[1:-1] > 0.5)
        peaks[g] = float(y[1:-1][interior].max()) if interior.any() else 0.0
    gs = sorted(peaks)
    suppress_ok = all(peaks[a] >= peaks[b] for a, b in zip(gs, gs[1:]))
    suppress_strict = peaks[0.0] > peaks[0.25] > peaks[1.0]
    tail_ok = all(abs(curves[g][-1]) < 0.5
                  and abs(curves[g][-1]) < np.max(np.abs(curves[g][x <= 2]))
                  for g in gs if g > 0)
    ok = suppress_ok and suppress_strict and tail_ok
    return _result("figure3", ok,
                   "peaks: " + ", ".join(f"g={g:g}:{peaks[g]:.3f}" for g in gs), t0)


def criterion_determinism(outdir, ensemble: int = 24, seed: int = 5) -> CriterionResult:
    """Byte-identical moment tables from repeated runs with one seed."""
    t0 = time.perf_counter()
    geom, modes, sm, cov, gam = _mc_setup(2.0, 0.1)
    h = 0.999 * step_bound(modes, cov)
    config = SimulationConfig(epsilon=0.1, L=max(1.0 / gam, 50 * 0.1 ** 2),
                              dz_native=h, ensemble=ensemble, seed=seed,
                              record_points=64)
    paths = []
    for tag in ("a", "b"):
        em = run_ensemble(geom, modes, cov, config)
        path = os.path.join(outdir, f"determinism_{tag}.csv")
        moments_to_csv(em, path)
        paths.append(path)
    with open(paths[0], "rb") as fa, open(paths[1], "rb") as fb:
        same = fa.read() == fb.read()
    return _result("determinism", same,
                   "byte-identical" if same else "outputs differ", t0)


ALL_CRITERIA = [
    ("spectrum", criterion_spectrum),
    ("normalization", criterion_normalization),
    ("splitting", criterion_splitting),
    ("figure2", criterion_figure2),
    ("ideal_transfer", criterion_ideal_transfer),
    ("circle_average", criterion_circle_average),
    ("coefficients", criterion_coefficients),
    ("moment_identities", criterion_moment_identities),
    ("monte_carlo", criterion_monte_carlo),
    ("figure3", criterion_figure3),
    ("determinism", criterion_determinism),
]


def run_validation(outdir, ensemble: int = 2000, seed: int = 20250701,
                   epsilon: float = 0.05, skip_monte_carlo: bool = False):
    """Run every criterion, write artifacts and the pass/fail report."""
    os.makedirs(outdir, exist_ok=True)
    results = []
    for name, fn in ALL_CRITERIA:
        if name in ("figure2", "figure3"):
            res = fn(outdir)
        elif name == "monte_carlo":
            if skip_monte_carlo:
                continue
            res = fn(outdir, ensemble=ensemble, seed=seed, epsilon=epsilon)
        elif name == "determinism":
            res = fn(outdir)
        else:
            res = fn()
        results.append(res)
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail} "
              f"[{res.seconds:.1f}s]")
    write_csv(os.path.join(outdir, "validation_report.csv"), {
        "criterion": [r.name for r in results],
        "status": ["pass" if r.passed else "fail" for r in results],
        "detail": [r.detail.replace(",", ";") for r in results],
        "seconds": [r.seconds for r in results],
    })
    return results
