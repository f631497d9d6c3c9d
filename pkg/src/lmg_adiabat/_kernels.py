"""Hot integration loops: numba-jitted kernels with a pure-numpy fallback.

Both backends integrate the same fixed-step RK4 scheme against a Hamiltonian
given as a stack of constant Hermitian terms plus a per-stage coefficient
table (rows on the half-step grid t0, t0+dt/2, t0+dt, ...).  The backend is
chosen by the ``LMG_ADIABAT_BACKEND`` environment variable: ``auto``
(default: numba when importable), ``numba`` or ``numpy``.  Both paths are
always importable so they can be benchmarked against each other.
"""
from __future__ import annotations

import os
import threading
from typing import NamedTuple, Optional

import numpy as np

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only on minimal installs
    numba = None
    NUMBA_AVAILABLE = False

ENV_BACKEND = "LMG_ADIABAT_BACKEND"


# ---------------------------------------------------------------------------
# loop-style sources (numba targets; also runnable as plain python for tests)
# ---------------------------------------------------------------------------

def _lindblad_rk4_loops(terms, ctab, w, rho0, dt, sample_idx,
                        form_left, form_right, obs, store_rho):
    kk, d, _ = terms.shape
    n_steps = (ctab.shape[0] - 1) // 2
    m = sample_idx.shape[0]
    nf = form_left.shape[0]
    nb = obs.shape[0]

    forms = np.zeros((m, nf), dtype=np.complex128)
    expvals = np.zeros((m, nb), dtype=np.float64)
    purity = np.zeros(m, dtype=np.float64)
    trace_defect = np.zeros(m, dtype=np.float64)
    herm_defect = np.zeros(m, dtype=np.float64)
    n_keep = m if store_rho else 0
    rho_samples = np.zeros((n_keep, d, d), dtype=np.complex128)

    rho = rho0.copy()
    h = np.zeros((d, d), dtype=np.complex128)
    raw_defect = 0.0
    ptr = 0
    for step in range(n_steps + 1):
        if ptr < m and sample_idx[ptr] == step:
            for f in range(nf):
                acc = 0.0 + 0.0j
                for i in range(d):
                    row = 0.0 + 0.0j
                    for j in range(d):
                        row += rho[i, j] * form_right[f, j]
                    acc += np.conj(form_left[f, i]) * row
                forms[ptr, f] = acc
            for b in range(nb):
                tr = 0.0 + 0.0j
                for i in range(d):
                    for j in range(d):
                        tr += obs[b, i, j] * rho[j, i]
                expvals[ptr, b] = tr.real
            pur = 0.0
            tr = 0.0 + 0.0j
            for i in range(d):
                tr += rho[i, i]
                for j in range(d):
                    v = rho[i, j]
                    pur += v.real * v.real + v.imag * v.imag
            purity[ptr] = pur
            trace_defect[ptr] = abs(tr - 1.0)
            herm_defect[ptr] = raw_defect
            if store_rho:
                rho_samples[ptr] = rho
            ptr += 1
        if step == n_steps:
            break

        c0 = ctab[2 * step]
        cm = ctab[2 * step + 1]
        c1 = ctab[2 * step + 2]

        h[:, :] = 0.0
        for k in range(kk):
            h += c0[k] * terms[k]
        k1 = -1j * (h @ rho - rho @ h) + w * rho

        h[:, :] = 0.0
        for k in range(kk):
            h += cm[k] * terms[k]
        x = rho + (0.5 * dt) * k1
        k2 = -1j * (h @ x - x @ h) + w * x
        x = rho + (0.5 * dt) * k2
        k3 = -1j * (h @ x - x @ h) + w * x

        h[:, :] = 0.0
        for k in range(kk):
            h += c1[k] * terms[k]
        x = rho + dt * k3
        k4 = -1j * (h @ x - x @ h) + w * x

        raw = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if ptr < m and sample_idx[ptr] == step + 1:
            s = 0.0
            for i in range(d):
                for j in range(d):
                    dv = raw[i, j] - np.conj(raw[j, i])
                    s += dv.real * dv.real + dv.imag * dv.imag
            raw_defect = np.sqrt(s)
        rho = 0.5 * (raw + raw.conj().T)

    return forms, expvals, purity, trace_defect, herm_defect, rho_samples, rho


def _schrodinger_rk4_loops(terms, ctab, psi0, dt, sample_idx):
    kk, d, _ = terms.shape
    n_steps = (ctab.shape[0] - 1) // 2
    m = sample_idx.shape[0]

    psi_samples = np.zeros((m, d), dtype=np.complex128)
    psi = psi0.copy()
    h = np.zeros((d, d), dtype=np.complex128)
    ptr = 0
    for step in range(n_steps + 1):
        if ptr < m and sample_idx[ptr] == step:
            psi_samples[ptr] = psi
            ptr += 1
        if step == n_steps:
            break

        c0 = ctab[2 * step]
        cm = ctab[2 * step + 1]
        c1 = ctab[2 * step + 2]

        h[:, :] = 0.0
        for k in range(kk):
            h += c0[k] * terms[k]
        k1 = -1j * (h @ psi)

        h[:, :] = 0.0
        for k in range(kk):
            h += cm[k] * terms[k]
        k2 = -1j * (h @ (psi + (0.5 * dt) * k1))
        k3 = -1j * (h @ (psi + (0.5 * dt) * k2))

        h[:, :] = 0.0
        for k in range(kk):
            h += c1[k] * terms[k]
        k4 = -1j * (h @ (psi + dt * k3))

        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return psi_samples, psi


# ---------------------------------------------------------------------------
# vectorized pure-numpy fallback
# ---------------------------------------------------------------------------

def _lindblad_rk4_numpy(terms, ctab, w, rho0, dt, sample_idx,
                        form_left, form_right, obs, store_rho):
    d = terms.shape[1]
    n_steps = (ctab.shape[0] - 1) // 2
    m = sample_idx.shape[0]

    forms = np.zeros((m, form_left.shape[0]), dtype=np.complex128)
    expvals = np.zeros((m, obs.shape[0]), dtype=np.float64)
    purity = np.zeros(m, dtype=np.float64)
    trace_defect = np.zeros(m, dtype=np.float64)
    herm_defect = np.zeros(m, dtype=np.float64)
    rho_samples = np.zeros((m if store_rho else 0, d, d), dtype=np.complex128)

    left_c = form_left.conj()

    def rhs(h, x):
        return -1j * (h @ x - x @ h) + w * x

    rho = rho0.copy()
    raw_defect = 0.0
    ptr = 0
    for step in range(n_steps + 1):
        if ptr < m and sample_idx[ptr] == step:
            forms[ptr] = np.einsum("fi,ij,fj->f", left_c, rho, form_right)
            if obs.shape[0]:
                expvals[ptr] = np.real(np.einsum("bij,ji->b", obs, rho))
            purity[ptr] = float(np.real(np.vdot(rho, rho)))
            trace_defect[ptr] = abs(complex(np.trace(rho)) - 1.0)
            herm_defect[ptr] = raw_defect
            if store_rho:
                rho_samples[ptr] = rho
            ptr += 1
        if step == n_steps:
            break

        h0 = np.tensordot(ctab[2 * step], terms, axes=1)
        hm = np.tensordot(ctab[2 * step + 1], terms, axes=1)
        h1 = np.tensordot(ctab[2 * step + 2], terms, axes=1)

        k1 = rhs(h0, rho)
        k2 = rhs(hm, rho + (0.5 * dt) * k1)
        k3 = rhs(hm, rho + (0.5 * dt) * k2)
        k4 = rhs(h1, rho + dt * k3)
        raw = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if ptr < m and sample_idx[ptr] == step + 1:
            raw_defect = float(np.linalg.norm(raw - raw.conj().T))
        rho = 0.5 * (raw + raw.conj().T)

    return forms, expvals, purity, trace_defect, herm_defect, rho_samples, rho


def _schrodinger_rk4_numpy(terms, ctab, psi0, dt, sample_idx):
    d = terms.shape[1]
    n_steps = (ctab.shape[0] - 1) // 2
    m = sample_idx.shape[0]

    psi_samples = np.zeros((m, d), dtype=np.complex128)
    psi = psi0.copy()
    ptr = 0
    for step in range(n_steps + 1):
        if ptr < m and sample_idx[ptr] == step:
            psi_samples[ptr] = psi
            ptr += 1
        if step == n_steps:
            break
        h0 = np.tensordot(ctab[2 * step], terms, axes=1)
        hm = np.tensordot(ctab[2 * step + 1], terms, axes=1)
        h1 = np.tensordot(ctab[2 * step + 2], terms, axes=1)
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (hm @ (psi + (0.5 * dt) * k1))
        k3 = -1j * (hm @ (psi + (0.5 * dt) * k2))
        k4 = -1j * (h1 @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return psi_samples, psi


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

class Kernels(NamedTuple):
    name: str
    lindblad_rk4: object
    schrodinger_rk4: object


_NUMPY_KERNELS = Kernels("numpy", _lindblad_rk4_numpy, _schrodinger_rk4_numpy)
_numba_kernels: Optional[Kernels] = None
_numba_lock = threading.Lock()


def _compile_numba_kernels() -> Kernels:
    global _numba_kernels
    with _numba_lock:  # sweep threads may hit the first compile concurrently
        if _numba_kernels is None:
            jit = numba.njit(cache=True, nogil=True)
            _numba_kernels = Kernels(
                "numba",
                jit(_lindblad_rk4_loops),
                jit(_schrodinger_rk4_loops),
            )
    return _numba_kernels


def resolve_backend(name: Optional[str] = None) -> str:
    """Map an explicit choice or the environment flag to a backend name."""
    if name is None:
        name = os.environ.get(ENV_BACKEND, "auto").strip().lower() or "auto"
    name = name.lower()
    if name == "auto":
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if name == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError(
                f"{ENV_BACKEND}=numba requested but numba is not importable"
            )
        return "numba"
    if name == "numpy":
        return "numpy"
    raise ValueError(f"unknown backend {name!r}; use auto, numba or numpy")


def get_kernels(backend: Optional[str] = None) -> Kernels:
    """Kernel set for the requested (or environment-selected) backend."""
    resolved = resolve_backend(backend)
    if resolved == "numba":
        return _compile_numba_kernels()
    return _NUMPY_KERNELS
