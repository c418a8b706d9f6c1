"""Hot numeric kernels: harmonic process synthesis and the coupled-mode stepper.

Both kernels exist in two functionally identical variants: a numba ``@njit``
build and a pure-numpy fallback.  The fallback is selected by setting the
environment variable ``DUOWAVE_NO_NUMBA=1`` before import (or automatically
when numba is unavailable).  ``benchmarks/bench_kernels.py`` times the two
paths against each other.
"""
import os

import numpy as np

_flag = os.environ.get("DUOWAVE_NO_NUMBA", "").strip().lower()
_numba_disabled = _flag not in ("", "0", "false")

try:
    if _numba_disabled:
        raise ImportError("numba disabled by DUOWAVE_NO_NUMBA")
    from numba import njit

    USING_NUMBA = True
except ImportError:
    njit = None
    USING_NUMBA = False


def harmonic_superpose_numpy(kappas, phases, amplitude, z0, dz, n):
    """Sum of ``amplitude * cos(kappa_m * z + phi_m)`` on a uniform z grid."""
    out = np.zeros(n)
    z = z0 + dz * np.arange(n)
    # chunk over modes to bound the temporary (n_chunk x n) array
    chunk = max(1, int(4e6) // max(n, 1))
    for lo in range(0, kappas.shape[0], chunk):
        kap = kappas[lo : lo + chunk, None]
        phi = phases[lo : lo + chunk, None]
        out += np.cos(kap * z[None, :] + phi).sum(axis=0)
    return amplitude * out


def _harmonic_superpose_py(kappas, phases, amplitude, z0, dz, n):
    # same recurrence as the jitted kernel; cos/sin rotation per grid step
    out = np.zeros(n)
    c = np.cos(kappas * z0 + phases)
    s = np.sin(kappas * z0 + phases)
    dc = np.cos(kappas * dz)
    ds = np.sin(kappas * dz)
    for i in range(n):
        out[i] = c.sum()
        c, s = c * dc - s * ds, s * dc + c * ds
    return amplitude * out


def rk4_coupled_numpy(c_ee, c_eo, c_oo, h, delta_beta, pref_e, pref_x, pref_o,
                      record_steps, ae0, ao0):
    """Classical fixed-step RK4 for the two guided amplitudes.

    ``c_**`` hold the coupling processes on the half-step grid
    (length ``2 * n_steps + 1``); ``record_steps`` are step indices
    (ascending, starting at 0) at which the state is stored.
    """
    n_steps = (c_ee.shape[0] - 1) // 2
    n_rec = record_steps.shape[0]
    ae_rec = np.zeros(n_rec, dtype=np.complex128)
    ao_rec = np.zeros(n_rec, dtype=np.complex128)
    ae = complex(ae0)
    ao = complex(ao0)
    j = 0
    if n_rec and record_steps[0] == 0:
        ae_rec[0] = ae
        ao_rec[0] = ao
        j = 1
    p0 = abs(ae) ** 2 + abs(ao) ** 2
    drift = 0.0
    for nn in range(n_steps):
        z = nn * h
        i0 = 2 * nn
        i1 = i0 + 1
        i2 = i0 + 2
        w0 = np.exp(1j * delta_beta * z)
        w1 = np.exp(1j * delta_beta * (z + 0.5 * h))
        w2 = np.exp(1j * delta_beta * (z + h))
        k1e = 1j * (pref_e * c_ee[i0] * ae + pref_x * c_eo[i0] * ao * w0.conjugate())
        k1o = 1j * (pref_x * c_eo[i0] * ae * w0 + pref_o * c_oo[i0] * ao)
        te = ae + 0.5 * h * k1e
        to = ao + 0.5 * h * k1o
        k2e = 1j * (pref_e * c_ee[i1] * te + pref_x * c_eo[i1] * to * w1.conjugate())
        k2o = 1j * (pref_x * c_eo[i1] * te * w1 + pref_o * c_oo[i1] * to)
        te = ae + 0.5 * h * k2e
        to = ao + 0.5 * h * k2o
        k3e = 1j * (pref_e * c_ee[i1] * te + pref_x * c_eo[i1] * to * w1.conjugate())
        k3o = 1j * (pref_x * c_eo[i1] * te * w1 + pref_o * c_oo[i1] * to)
        te = ae + h * k3e
        to = ao + h * k3o
        k4e = 1j * (pref_e * c_ee[i2] * te + pref_x * c_eo[i2] * to * w2.conjugate())
        k4o = 1j * (pref_x * c_eo[i2] * te * w2 + pref_o * c_oo[i2] * to)
        ae = ae + (h / 6.0) * (k1e + 2 * k2e + 2 * k3e + k4e)
        ao = ao + (h / 6.0) * (k1o + 2 * k2o + 2 * k3o + k4o)
        if j < n_rec and record_steps[j] == nn + 1:
            ae_rec[j] = ae
            ao_rec[j] = ao
            j += 1
        p = abs(ae) ** 2 + abs(ao) ** 2
        if abs(p - p0) > drift:
            drift = abs(p - p0)
    return ae_rec, ao_rec, drift


if USING_NUMBA:

    @njit(cache=True)
    def _harmonic_superpose_jit(kappas, phases, amplitude, z0, dz, n):
        m = kappas.shape[0]
        out = np.zeros(n)
        c = np.cos(kappas * z0 + phases)
        s = np.sin(kappas * z0 + phases)
        dc = np.cos(kappas * dz)
        ds = np.sin(kappas * dz)
        for i in range(n):
            acc = 0.0
            for q in range(m):
                acc += c[q]
                cn = c[q] * dc[q] - s[q] * ds[q]
                s[q] = s[q] * dc[q] + c[q] * ds[q]
                c[q] = cn
            out[i] = amplitude * acc
        return out

    @njit(cache=True)
    def _rk4_coupled_jit(c_ee, c_eo, c_oo, h, delta_beta, pref_e, pref_x, pref_o,
                         record_steps, ae0, ao0):
        n_steps = (c_ee.shape[0] - 1) // 2
        n_rec = record_steps.shape[0]
        ae_rec = np.zeros(n_rec, dtype=np.complex128)
        ao_rec = np.zeros(n_rec, dtype=np.complex128)
        ae = ae0 + 0j
        ao = ao0 + 0j
        j = 0
        if n_rec > 0 and record_steps[0] == 0:
            ae_rec[0] = ae
            ao_rec[0] = ao
            j = 1
        p0 = abs(ae) ** 2 + abs(ao) ** 2
        drift = 0.0
        for nn in range(n_steps):
            z = nn * h
            i0 = 2 * nn
            i1 = i0 + 1
            i2 = i0 + 2
            w0 = np.exp(1j * delta_beta * z)
            w1 = np.exp(1j * delta_beta * (z + 0.5 * h))
            w2 = np.exp(1j * delta_beta * (z + h))
            k1e = 1j * (pref_e * c_ee[i0] * ae + pref_x * c_eo[i0] * ao * np.conj(w0))
            k1o = 1j * (pref_x * c_eo[i0] * ae * w0 + pref_o * c_oo[i0] * ao)
            te = ae + 0.5 * h * k1e
            to = ao + 0.5 * h * k1o
            k2e = 1j * (pref_e * c_ee[i1] * te + pref_x * c_eo[i1] * to * np.conj(w1))
            k2o = 1j * (pref_x * c_eo[i1] * te * w1 + pref_o * c_oo[i1] * to)
            te = ae + 0.5 * h * k2e
            to = ao + 0.5 * h * k2o
            k3e = 1j * (pref_e * c_ee[i1] * te + pref_x * c_eo[i1] * to * np.conj(w1))
            k3o = 1j * (pref_x * c_eo[i1] * te * w1 + pref_o * c_oo[i1] * to)
            te = ae + h * k3e
            to = ao + h * k3o
            k4e = 1j * (pref_e * c_ee[i2] * te + pref_x * c_eo[i2] * to * np.conj(w2))
            k4o = 1j * (pref_x * c_eo[i2] * te * w2 + pref_o * c_oo[i2] * to)
            ae = ae + (h / 6.0) * (k1e + 2 * k2e + 2 * k3e + k4e)
            ao = ao + (h / 6.0) * (k1o + 2 * k2o + 2 * k3o + k4o)
            if j < n_rec and record_steps[j] == nn + 1:
                ae_rec[j] = ae
                ao_rec[j] = ao
                j += 1
            p = abs(ae) ** 2 + abs(ao) ** 2
            if abs(p - p0) > drift:
                drift = abs(p - p0)
        return ae_rec, ao_rec, drift

    harmonic_superpose = _harmonic_superpose_jit
    rk4_coupled = _rk4_coupled_jit
else:
    harmonic_superpose = harmonic_superpose_numpy
    rk4_coupled = rk4_coupled_numpy
