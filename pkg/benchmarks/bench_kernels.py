#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the master-equation kernel on the case I transfer at several register
sizes and the pure-state kernel on the joint spin+resonator model, printing
per-backend wall times and the speedup.  The first numba call includes JIT
compilation and is reported separately.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from lmg_adiabat import _kernels
from lmg_adiabat.dynamics import calibrated_schedule
from lmg_adiabat.model import FullModelParams, full_interaction_hamiltonian, lmg_sweep_hamiltonian
from lmg_adiabat.operators import SpinRegister
from lmg_adiabat.protocols import preset
from lmg_adiabat.states import density_from_state


def lindblad_workload(n_spins, t_final=4000.0, step=0.25, gamma=1e-4):
    cfg = preset("I", n_spins, gamma=gamma)
    reg = SpinRegister(n_spins)
    sched = calibrated_schedule(t_final=t_final)
    ham = lmg_sweep_hamiltonian(reg, 0.1, -1.1, sched.omega1, sched.omega2)
    n_steps = int(round(t_final / step))
    half_times = (step / 2.0) * np.arange(2 * n_steps + 1)
    ctab = np.ascontiguousarray(ham.coefficient_table(half_times))
    from lmg_adiabat.dynamics import dephasing_mask

    w = dephasing_mask((gamma,) * n_spins)
    rho0 = density_from_state(cfg.initial_state())
    idx = np.unique(np.round(np.linspace(0, n_steps, 101)).astype(np.int64))
    d = reg.dim
    args = (
        np.ascontiguousarray(ham.terms), ctab, w, rho0, step, idx,
        np.zeros((0, d), dtype=np.complex128),
        np.zeros((0, d), dtype=np.complex128),
        np.zeros((0, d, d), dtype=np.complex128),
        False,
    )
    return "lindblad", f"N={n_spins} (dim {d}), {n_steps} steps", args


def schrodinger_workload(cutoff=8, t_final=500.0, step=0.02):
    params = FullModelParams(n_spins=2, fock_cutoff=cutoff, eta=0.1, delta=-1.1,
                             omega1=0.3, omega2=0.0)
    ham = full_interaction_hamiltonian(params)
    n_steps = int(round(t_final / step))
    half_times = (step / 2.0) * np.arange(2 * n_steps + 1)
    ctab = np.ascontiguousarray(ham.coefficient_table(half_times))
    psi0 = np.zeros(ham.dim, dtype=np.complex128)
    psi0[0] = 1.0
    idx = np.unique(np.round(np.linspace(0, n_steps, 101)).astype(np.int64))
    args = (np.ascontiguousarray(ham.terms), ctab, psi0, step, idx)
    return "schrodinger", f"N=2 x cutoff {cutoff} (dim {ham.dim}), {n_steps} steps", args


def time_call(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions (best-of)")
    opts = parser.parse_args()

    workloads = [
        lindblad_workload(3),
        lindblad_workload(4),
        lindblad_workload(6),
        schrodinger_workload(8),
    ]

    numpy_k = _kernels.get_kernels("numpy")
    have_numba = _kernels.NUMBA_AVAILABLE
    if have_numba:
        t0 = time.perf_counter()
        numba_k = _kernels.get_kernels("numba")
        kind, _, args = workloads[0]
        getattr(numba_k, f"{kind}_rk4")(*args)
        print(f"numba warmup (compile + first run): {time.perf_counter() - t0:.2f} s\n")
    else:
        print("numba not importable: timing the numpy path only\n")

    header = f"{'workload':44s} {'numpy':>10s} {'numba':>10s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for kind, label, args in workloads:
        t_np = time_call(getattr(numpy_k, f"{kind}_rk4"), args, opts.repeat)
        if have_numba:
            t_nb = time_call(getattr(numba_k, f"{kind}_rk4"), args, opts.repeat)
            print(f"{kind + ': ' + label:44s} {t_np:9.3f}s {t_nb:9.3f}s {t_np / t_nb:8.1f}x")
        else:
            print(f"{kind + ': ' + label:44s} {t_np:9.3f}s {'-':>10s} {'-':>9s}")


if __name__ == "__main__":
    main()
