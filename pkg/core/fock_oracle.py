"""
Exact two-mode squeezing on a truncated Fock space.

Used only to check the first-order algebra of core.quantum_core: the same
pipelines are run through the dense matrix exponential of the two-mode
squeezing generator and compared with the perturbative expectations.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from config.constants import FOCK_CUTOFF, ORACLE_LEAKAGE_MAX, ORACLE_LEAKAGE_WARN, ORACLE_NORM_TOL
from utils.errors import OracleInvalidError
from utils.logger import dbg


@dataclass(frozen=True, eq=False)
class ExactKet:
    """Dense amplitude array psi[n_signal, n_idler], levels 0..cutoff."""

    psi: np.ndarray
    cutoff: int = FOCK_CUTOFF

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != (self.cutoff + 1, self.cutoff + 1):
            raise ValueError(f"state shape {psi.shape} does not match cutoff {self.cutoff}")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > ORACLE_NORM_TOL:
            raise OracleInvalidError(f"state norm {norm} differs from 1")
        psi = psi.copy()
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)

    @classmethod
    def vacuum(cls, cutoff: int = FOCK_CUTOFF) -> "ExactKet":
        psi = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        psi[0, 0] = 1.0
        return cls(psi, cutoff)

    def leakage(self) -> float:
        """Population with either mode at the cutoff level."""
        p = np.abs(self.psi) ** 2
        return float(p[-1, :].sum() + p[:-1, -1].sum())

    def mean_photons(self, mode: int = 0) -> float:
        n = np.arange(self.cutoff + 1)
        p = np.abs(self.psi) ** 2
        return float((p.sum(axis=1 - mode) * n).sum())

    def population(self, n_signal: int, n_idler: int) -> float:
        return float(abs(self.psi[n_signal, n_idler]) ** 2)


@lru_cache(maxsize=8)
def _ladder_ops(cutoff: int):
    dim = cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)
    eye = np.eye(dim, dtype=complex)
    return np.kron(a, eye), np.kron(eye, a)


def _check_leakage(state: ExactKet, stage: str) -> None:
    leak = state.leakage()
    if leak > ORACLE_LEAKAGE_MAX:
        raise OracleInvalidError(f"cutoff leakage {leak:.3e} {stage} exceeds {ORACLE_LEAKAGE_MAX}")
    if leak > ORACLE_LEAKAGE_WARN:
        dbg(f"Oracolo: dispersione oltre il cutoff {leak:.3e} ({stage})")


def exact_propagator_oracle(state: ExactKet, g_effective: float, phase: float) -> ExactKet:
    """
    Apply exp[g (e^{i theta} a^dag b^dag - e^{-i theta} a b)] exactly.

    Args:
        state: Input two-mode state
        g_effective: Squeezing strength g
        phase: theta

    Returns:
        Propagated state, norm preserved to 1e-10

    Raises:
        OracleInvalidError: population at the cutoff above 1e-6
    """
    _check_leakage(state, "in ingresso")
    a, b = _ladder_ops(state.cutoff)
    gen = g_effective * (np.exp(1j * phase) * (a.conj().T @ b.conj().T)
                         - np.exp(-1j * phase) * (a @ b))
    vec = expm(gen) @ state.psi.reshape(-1)
    out = ExactKet(vec.reshape(state.psi.shape), state.cutoff)
    _check_leakage(out, "in uscita")
    return out


def exact_phase_shift(state: ExactKet, phi_signal: float, phi_idler: float) -> ExactKet:
    n = np.arange(state.cutoff + 1)
    phases = np.exp(1j * (np.add.outer(n * phi_signal, n * phi_idler)))
    return ExactKet(state.psi * phases, state.cutoff)


def oracle_opa(state: ExactKet, gain_magnitude: float, gain_phase: float,
               pump_phase: float) -> ExactKet:
    """
    Exact counterpart of quantum_core.opa_apply.

    The perturbative pass adds i|g|e^{i(arg g + pump)}; the generator's
    first-order term is g e^{i theta}, hence theta = arg g + pump + pi/2.
    """
    return exact_propagator_oracle(state, gain_magnitude, gain_phase + pump_phase + np.pi / 2)
