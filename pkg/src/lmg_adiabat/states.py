"""Product, Dicke and target entangled states; populations and ground spaces.

Phase convention: Dicke states carry nonnegative real amplitudes in their
defining product basis.  Every relative phase appearing in the target states
is applied on top of that convention.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidInitialStateError,
    InvalidWeightError,
    ParityMismatchError,
)
from .linalg import hermitian_eig
from .operators import SpinRegister, x_basis_transform, y_basis_transform

CASES = ("I", "II", "III")


def _weight_to_downs(n: int, m: float) -> int:
    """Number of down spins for J_z weight m; validates the weight."""
    downs = n / 2.0 - m
    if abs(m) > n / 2.0 + 1e-12 or abs(downs - round(downs)) > 1e-12:
        raise InvalidWeightError(f"m = {m} is not a valid weight for {n} spins")
    return round(downs)


def dicke_state(n: int, m: float, basis: str = "z") -> np.ndarray:
    """Symmetric (maximal-J) eigenstate of J_z (or J_x/J_y) with eigenvalue m.

    ``basis='z'`` returns the equal-amplitude superposition of all product
    states with N/2 - m down spins; 'x' and 'y' return the same combination in
    the rotated product basis.
    """
    downs = _weight_to_downs(n, m)
    vec = np.zeros(2**n, dtype=np.complex128)
    amp = 1.0 / np.sqrt(comb(n, downs))
    for positions in combinations(range(n), downs):
        idx = sum(1 << (n - 1 - p) for p in positions)
        vec[idx] = amp
    if basis == "z":
        return vec
    if basis == "y":
        return y_basis_transform(SpinRegister(n)) @ vec
    if basis == "x":
        return x_basis_transform(SpinRegister(n)) @ vec
    raise ValueError(f"unknown basis {basis!r}, expected 'z', 'x' or 'y'")


def target_state(case: str, n: int) -> np.ndarray:
    """Target entangled state of one adiabatic transfer case.

    Case I is the GHZ-type superposition of the two polarized y states with
    relative phase e^{i pi J}; case II (odd N) the W-type superposition
    (|m_y=1/2> + i |m_y=-1/2>)/sqrt(2); case III (even N) the single Dicke
    state |m_y=0>.
    """
    case = str(case).upper()
    if case == "I":
        j = n / 2.0
        a = dicke_state(n, j, "y")
        b = dicke_state(n, -j, "y")
        return (a + np.exp(1.0j * np.pi * j) * b) / np.sqrt(2.0)
    if case == "II":
        if n % 2 == 0:
            raise ParityMismatchError(f"case II needs an odd spin number, got {n}")
        return (dicke_state(n, 0.5, "y") + 1.0j * dicke_state(n, -0.5, "y")) / np.sqrt(2.0)
    if case == "III":
        if n % 2 == 1:
            raise ParityMismatchError(f"case III needs an even spin number, got {n}")
        return dicke_state(n, 0.0, "y")
    raise ValueError(f"unknown case {case!r}, expected one of {CASES}")


def target_branches(case: str, n: int) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Degenerate branch pair underlying a target (second entry None for case III)."""
    case = str(case).upper()
    if case == "I":
        j = n / 2.0
        return dicke_state(n, j, "y"), dicke_state(n, -j, "y")
    if case == "II":
        if n % 2 == 0:
            raise ParityMismatchError(f"case II needs an odd spin number, got {n}")
        return dicke_state(n, 0.5, "y"), dicke_state(n, -0.5, "y")
    if case == "III":
        return target_state(case, n), None
    raise ValueError(f"unknown case {case!r}, expected one of {CASES}")


class GroundSpace(NamedTuple):
    energy: float
    vectors: np.ndarray  # (dim, degeneracy), orthonormal columns
    gap: float  # to the first level above the tolerance band (0 if none)

    @property
    def degeneracy(self) -> int:
        return self.vectors.shape[1]

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T


def ground_space(h: np.ndarray, degeneracy_tol: float = 1e-9) -> GroundSpace:
    """Ground energy, orthonormal ground band and gap of a Hermitian matrix.

    All eigenvectors within ``degeneracy_tol`` of the lowest eigenvalue form
    the band; the gap is measured from the band bottom to the next level.
    """
    vals, vecs = hermitian_eig(h)
    e0 = float(vals[0])
    in_band = vals <= e0 + degeneracy_tol
    n_band = int(np.sum(in_band))
    gap = float(vals[n_band] - e0) if n_band < vals.size else 0.0
    return GroundSpace(e0, vecs[:, :n_band], gap)


def density_from_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    return np.outer(psi, psi.conj())


def population(rho: np.ndarray, psi: np.ndarray) -> float:
    """<psi| rho |psi>, clamped into [0, 1] against round-off."""
    rho = np.asarray(rho, dtype=np.complex128)
    psi = np.asarray(psi, dtype=np.complex128)
    if rho.shape != (psi.size, psi.size):
        raise DimensionMismatchError(
            f"density matrix {rho.shape} does not match state of dim {psi.size}"
        )
    p = float(np.real(psi.conj() @ rho @ psi))
    p = min(max(p, -1e-9), 1.0 + 1e-9)
    return min(max(p, 0.0), 1.0)


def phase_optimized_population(rho: np.ndarray, branch_a: np.ndarray, branch_b: Optional[np.ndarray]) -> float:
    """max over phi of <psi(phi)| rho |psi(phi)> with psi = (a + e^{i phi} b)/sqrt(2).

    Reports the transfer quality independent of the dynamical phase picked up
    between two degenerate ground branches.  With ``branch_b=None`` this is the
    plain population of ``branch_a``.
    """
    if branch_b is None:
        return population(rho, branch_a)
    rho = np.asarray(rho, dtype=np.complex128)
    a = np.asarray(branch_a, dtype=np.complex128)
    b = np.asarray(branch_b, dtype=np.complex128)
    if rho.shape != (a.size, a.size) or a.size != b.size:
        raise DimensionMismatchError("branch/density dimensions do not match")
    paa = float(np.real(a.conj() @ rho @ a))
    pbb = float(np.real(b.conj() @ rho @ b))
    cross = complex(a.conj() @ rho @ b)
    p = 0.5 * (paa + pbb) + abs(cross)
    return min(max(p, 0.0), 1.0)


def symmetric_sector_isometry(n: int) -> np.ndarray:
    """Isometry V (2^N x (N+1)) onto the maximal-J sector.

    Column k is the z-basis Dicke state with m = N/2 - k, so V† O V is the
    (N+1)-dimensional block of any collective operator and V† psi the sector
    coordinates of a symmetric state.
    """
    j = n / 2.0
    cols = [dicke_state(n, j - k, "z") for k in range(n + 1)]
    return np.stack(cols, axis=1)


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=np.complex128)
    return float(np.real(np.sum(rho * rho.conj().T)))


def trace_defect(rho: np.ndarray) -> float:
    return abs(complex(np.trace(rho)) - 1.0)


@dataclass(frozen=True)
class DensityCheck:
    trace_defect: float
    hermiticity_defect: float
    min_eigenvalue: float


def check_density_matrix(
    rho: np.ndarray,
    trace_tol: float = 1e-9,
    herm_tol: float = 1e-10,
    eig_floor: float = -1e-8,
) -> DensityCheck:
    """Validate trace, Hermiticity and positivity; raise on violation."""
    rho = np.asarray(rho, dtype=np.complex128)
    td = trace_defect(rho)
    hd = float(np.linalg.norm(rho - rho.conj().T))
    if td > trace_tol or hd > herm_tol:
        raise InvalidInitialStateError(
            f"density matrix invalid: trace defect {td:.3e}, hermiticity defect {hd:.3e}"
        )
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if min_eig < eig_floor:
        raise InvalidInitialStateError(
            f"density matrix has negative eigenvalue {min_eig:.3e}"
        )
    return DensityCheck(td, hd, min_eig)
