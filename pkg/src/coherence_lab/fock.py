"""Truncated single-mode oscillator: ladder and quadrature operators,
displacement, Glauber coherent states, and beamsplitter splitting.

Truncation policy: an amplitude alpha is admitted at cutoff N only when
N >= |alpha|^2 + 12*sqrt(|alpha|^2 + 1), which keeps the neglected Poisson
tail below 1e-12 and hence below every tolerance used elsewhere.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import qcore
from .errors import (
    InsufficientOutputCutoff,
    SpaceMismatch,
    TruncationTooSmall,
    ValidationError,
)
from .qcore import LinearOperator, SpaceDescriptor, SplitIsometry, StateVector

log = logging.getLogger(__name__)

TAIL_TOLERANCE = 1e-12


def required_cutoff(alpha) -> int:
    """Smallest cutoff admitted for coherent amplitude ``alpha``."""
    a2 = abs(alpha) ** 2
    return math.ceil(a2 + 12.0 * math.sqrt(a2 + 1.0))


def check_cutoff(alpha, cutoff: int) -> None:
    need = required_cutoff(alpha)
    if cutoff < need:
        raise TruncationTooSmall(
            f"cutoff {cutoff} too small for |alpha|={abs(alpha):.4g} (need >= {need})")


def admissible_radius(cutoff: int) -> float:
    """Largest |alpha| the tail criterion admits at this cutoff."""
    # solve x + 12 sqrt(x+1) = cutoff for x = |alpha|^2
    b = 2.0 * cutoff + 144.0
    disc = b * b - 4.0 * (cutoff ** 2 - 144.0)
    x = (b - math.sqrt(disc)) / 2.0 - 1e-9
    return math.sqrt(max(x, 0.0))


@dataclass(frozen=True)
class FockParams:
    """Cutoff plus coherent amplitude, validated against the tail criterion."""

    cutoff: int
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        check_cutoff(self.alpha, self.cutoff)


@dataclass(frozen=True)
class SplitSpec:
    """Beamsplitter coefficients with |mu|^2 + |nu|^2 = 1."""

    mu: complex
    nu: complex

    def __post_init__(self):
        object.__setattr__(self, "mu", complex(self.mu))
        object.__setattr__(self, "nu", complex(self.nu))
        if abs(abs(self.mu) ** 2 + abs(self.nu) ** 2 - 1.0) > 1e-12:
            raise ValidationError("|mu|^2 + |nu|^2 must equal 1")

    @classmethod
    def balanced(cls) -> "SplitSpec":
        r = 1.0 / math.sqrt(2.0)
        return cls(r, r)

    @classmethod
    def from_angles(cls, t: float, phi: float = 0.0) -> "SplitSpec":
        return cls(math.cos(t), math.sin(t) * np.exp(1j * phi))


def fock_space(cutoff: int) -> SpaceDescriptor:
    return SpaceDescriptor.single_fock(cutoff)


def vacuum(cutoff: int) -> StateVector:
    return StateVector.basis(fock_space(cutoff), 0)


def number_state(cutoff: int, n: int) -> StateVector:
    if not 0 <= n <= cutoff:
        raise ValidationError(f"photon number {n} outside 0..{cutoff}")
    return StateVector.basis(fock_space(cutoff), n)


def ladder_ops(cutoff: int):
    """Annihilation and creation operators truncated at ``cutoff``."""
    if cutoff < 1:
        raise ValidationError("ladder operators need cutoff >= 1")
    space = fock_space(cutoff)
    a = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for n in range(1, cutoff + 1):
        a[n - 1, n] = math.sqrt(n)
    return LinearOperator(space, a), LinearOperator(space, a.conj().T)


def number_op(cutoff: int) -> LinearOperator:
    space = fock_space(cutoff)
    return LinearOperator(space, np.diag(np.arange(cutoff + 1)).astype(complex),
                          hermitian=True)


def quadrature_ops(cutoff: int):
    """Scaled position and momentum q = (a + a+)/sqrt2, p = (a - a+)/(i sqrt2)."""
    a, adag = ladder_ops(cutoff)
    space = a.space
    q = (a.matrix + adag.matrix) / math.sqrt(2.0)
    p = (a.matrix - adag.matrix) / (1j * math.sqrt(2.0))
    return (LinearOperator(space, q, hermitian=True),
            LinearOperator(space, p, hermitian=True))


def displacement(alpha, cutoff: int) -> LinearOperator:
    """exp(alpha a+ - alpha* a), unitary on the retained subspace."""
    check_cutoff(alpha, cutoff)
    a, adag = ladder_ops(cutoff)
    gen = alpha * adag.matrix - np.conj(alpha) * a.matrix
    return qcore.mat_exp(LinearOperator(a.space, gen))


def glauber_cs(alpha, cutoff: int) -> StateVector:
    """Coherent state amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!)."""
    check_cutoff(alpha, cutoff)
    alpha = complex(alpha)
    amps = np.empty(cutoff + 1, dtype=complex)
    amps[0] = 1.0
    for n in range(1, cutoff + 1):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    amps *= math.exp(-abs(alpha) ** 2 / 2.0)
    deficit = abs(np.linalg.norm(amps) - 1.0)
    if deficit > 1e-15:
        log.debug("coherent state renormalized after truncation, deficit %.3e", deficit)
    return StateVector(fock_space(cutoff), amps)


def beamsplit_isometry(spec: SplitSpec, cutoff_in: int,
                       cutoff_out_each: int | None = None) -> SplitIsometry:
    """Isometry V with V|n> = (mu b+ + nu c+)^n / sqrt(n!) |0,0>.

    Output mode B carries ``mu`` and mode C carries ``nu``. With
    ``cutoff_out_each >= cutoff_in`` (default: equal) the image subspace of
    total photon number <= cutoff_in is represented exactly, so V is an
    exact isometry on the retained space.
    """
    if cutoff_out_each is None:
        cutoff_out_each = cutoff_in
    if cutoff_out_each < cutoff_in:
        raise InsufficientOutputCutoff(
            f"output cutoff {cutoff_out_each} below input cutoff {cutoff_in}")
    d_out = cutoff_out_each + 1
    domain = fock_space(cutoff_in)
    codomain = fock_space(cutoff_out_each).tensor(fock_space(cutoff_out_each))
    V = np.zeros((d_out * d_out, cutoff_in + 1), dtype=complex)
    for n in range(cutoff_in + 1):
        for k in range(n + 1):
            amp = math.sqrt(math.comb(n, k)) * spec.mu ** k * spec.nu ** (n - k)
            V[k * d_out + (n - k), n] = amp
    return SplitIsometry(domain, codomain, V)


def split_fock(state: StateVector, spec: SplitSpec) -> StateVector:
    """Send a single-mode state through the beamsplitter; norm preserved."""
    if not state.space.is_single("fock"):
        raise SpaceMismatch("split_fock needs a state on a single Fock factor")
    iso = beamsplit_isometry(spec, state.space.factors[0].cutoff)
    return iso.apply(state)


def nearest_coherent_fit(state: StateVector):
    """Maximize |<alpha|state>| over alpha; returns (alpha, fidelity).

    Seeded at alpha = <a> (exact for true coherent states) and polished by
    a simplex search in (Re alpha, Im alpha).
    """
    if not state.space.is_single("fock"):
        raise SpaceMismatch("nearest_coherent_fit needs a single Fock factor")
    cutoff = state.space.factors[0].cutoff
    a, _ = ladder_ops(cutoff)
    start = qcore.expectation(a, state)
    # stay inside the admissible amplitude disk for this cutoff
    max_abs = admissible_radius(cutoff)

    def clip(z: complex) -> complex:
        return z if abs(z) <= max_abs else z / abs(z) * max_abs

    def negfid(x):
        alpha = clip(complex(x[0], x[1]))
        return -abs(np.vdot(glauber_cs(alpha, cutoff).amps, state.amps))

    start = clip(start)
    res = minimize(negfid, [start.real, start.imag], method="Nelder-Mead",
                   options=dict(xatol=1e-10, fatol=1e-14, maxiter=400))
    best = clip(complex(res.x[0], res.x[1]))
    return best, -float(res.fun)
