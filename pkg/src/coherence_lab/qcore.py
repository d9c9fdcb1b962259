"""Finite-dimensional complex Hilbert-space kernel.

States, operators, tensor products, Schmidt analysis, matrix exponentials
and expectation values, shared by the oscillator and spin front ends.

Basis conventions (fixed for bit-exact I/O):
  * Fock levels ascend by photon number n = 0..N.
  * Spin levels ascend by magnetic quantum number m = -j..j.
  * Composite indices are row-major with the leftmost factor slowest,
    i.e. exactly ``numpy.kron`` ordering.

Spin values are stored as the integer 2j so that half-integers stay exact.
All values are immutable after construction and every operation is a pure
function.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    InvalidWeight,
    NonFinite,
    NotComposite,
    SpaceMismatch,
    ValidationError,
    ZeroVector,
)

log = logging.getLogger(__name__)

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
ISOMETRY_TOL = 1e-10
#: Schmidt entropy (in bits) below which a bipartite state counts as product.
PRODUCT_THRESHOLD_BITS = 1e-9


def as_twice_j(j) -> int:
    """Validate a nonnegative half-integer spin and return 2j as an int."""
    tj = int(round(2 * j))
    if tj < 0 or abs(2 * j - tj) > 1e-9:
        raise InvalidWeight(f"spin must be a nonnegative half-integer, got {j!r}")
    return tj


@dataclass(frozen=True)
class Factor:
    """One tensor factor: a truncated Fock mode or a single spin.

    ``param`` is the Fock cutoff N (levels 0..N) for kind ``"fock"`` and
    the integer 2j for kind ``"spin"``; in both cases dim = param + 1.
    """

    kind: str
    param: int

    def __post_init__(self):
        if self.kind not in ("fock", "spin"):
            raise ValidationError(f"unknown factor kind {self.kind!r}")
        if not isinstance(self.param, int) or self.param < 0:
            raise ValidationError(f"factor parameter must be a nonnegative int, got {self.param!r}")

    @property
    def dim(self) -> int:
        return self.param + 1

    @property
    def cutoff(self) -> int:
        if self.kind != "fock":
            raise ValidationError("cutoff only defined for Fock factors")
        return self.param

    @property
    def twice_j(self) -> int:
        if self.kind != "spin":
            raise ValidationError("twice_j only defined for spin factors")
        return self.param

    @property
    def j(self) -> float:
        return self.twice_j / 2.0


def fock_factor(cutoff: int) -> Factor:
    return Factor("fock", int(cutoff))


def spin_factor(j) -> Factor:
    return Factor("spin", as_twice_j(j))


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered tensor product of Fock and spin factors."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) == 0:
            raise ValidationError("a space needs at least one factor")
        for f in self.factors:
            if not isinstance(f, Factor):
                raise ValidationError(f"not a Factor: {f!r}")

    @classmethod
    def single_fock(cls, cutoff: int) -> "SpaceDescriptor":
        return cls((fock_factor(cutoff),))

    @classmethod
    def single_spin(cls, j) -> "SpaceDescriptor":
        return cls((spin_factor(j),))

    @property
    def dim(self) -> int:
        return math.prod(f.dim for f in self.factors)

    @property
    def nfactors(self) -> int:
        return len(self.factors)

    @property
    def factor_dims(self) -> tuple:
        return tuple(f.dim for f in self.factors)

    def tensor(self, other: "SpaceDescriptor") -> "SpaceDescriptor":
        return SpaceDescriptor(self.factors + other.factors)

    def subspace(self, start: int, stop: int) -> "SpaceDescriptor":
        return SpaceDescriptor(self.factors[start:stop])

    def is_single(self, kind: str) -> bool:
        return len(self.factors) == 1 and self.factors[0].kind == kind


class StateVector:
    """Normalized complex amplitude vector over a labeled basis.

    Construction normalizes the amplitudes (raising ``ZeroVector`` for a
    null input) and freezes them; instances are safe to share.
    """

    __slots__ = ("space", "amps")

    def __init__(self, space: SpaceDescriptor, amps):
        vec = np.array(amps, dtype=complex).reshape(-1)
        if vec.shape != (space.dim,):
            raise ValidationError(
                f"amplitude length {vec.size} does not match space dim {space.dim}")
        if not np.all(np.isfinite(vec.view(float))):
            raise NonFinite("state amplitudes must be finite")
        norm = np.linalg.norm(vec)
        if norm < 1e-14:
            raise ZeroVector("cannot normalize a null vector")
        if abs(norm - 1.0) > NORM_TOL:
            log.debug("renormalizing state, norm deficit %.3e", abs(norm - 1.0))
        vec /= norm
        vec.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amps", vec)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    def __repr__(self):
        return f"StateVector(dim={self.space.dim}, factors={self.space.factor_dims})"

    @classmethod
    def basis(cls, space: SpaceDescriptor, index: int) -> "StateVector":
        vec = np.zeros(space.dim, dtype=complex)
        vec[index] = 1.0
        return cls(space, vec)


@dataclass(frozen=True)
class LinearOperator:
    """Dense operator on a descriptor'd space; ``hermitian`` is a checked hint."""

    space: SpaceDescriptor
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValidationError(f"matrix shape {mat.shape} does not match dim {d}")
        if self.hermitian and np.abs(mat - mat.conj().T).max() >= HERMITIAN_TOL:
            raise ValidationError("operator flagged hermitian is not")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.space, self.matrix.conj().T, self.hermitian)


@dataclass(frozen=True)
class SchmidtReport:
    """Schmidt spectrum of a bipartition.

    ``coefficients`` descend; ``entropy_bits`` uses log2 with 0*log0 = 0.
    ``left_vectors``/``right_vectors`` hold the Schmidt vectors as columns /
    rows so the state can be reconstructed as sum_k c_k L[:,k] (x) R[k,:].
    """

    coefficients: np.ndarray
    entropy_bits: float
    is_product: bool
    left_vectors: np.ndarray
    right_vectors: np.ndarray


@dataclass(frozen=True)
class SplitIsometry:
    """Norm-preserving linear map of one system into a two-factor space."""

    domain: SpaceDescriptor
    codomain: SpaceDescriptor
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (self.codomain.dim, self.domain.dim):
            raise ValidationError("isometry shape does not match domain/codomain")
        gram = mat.conj().T @ mat
        if np.abs(gram - np.eye(self.domain.dim)).max() >= ISOMETRY_TOL:
            raise ValidationError("map is not an isometry")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def apply(self, state: StateVector) -> StateVector:
        if state.space != self.domain:
            raise SpaceMismatch("state does not live on the isometry's domain")
        return StateVector(self.codomain, self.matrix @ state.amps)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def tensor_state(u: StateVector, v: StateVector) -> StateVector:
    """Kronecker product of two states on the concatenated factor list."""
    return StateVector(u.space.tensor(v.space), np.kron(u.amps, v.amps))


def overlap(u: StateVector, v: StateVector) -> complex:
    """<u|v> including phase."""
    if u.space != v.space:
        raise SpaceMismatch("overlap requires equal spaces")
    return complex(np.vdot(u.amps, v.amps))


def apply(op: LinearOperator, state: StateVector, normalize: bool = True):
    """Apply ``op`` to ``state``.

    Returns a ``StateVector`` when ``normalize`` is true (raising
    ``ZeroVector`` if the image vanishes), otherwise the raw, possibly
    unnormalized amplitude array.
    """
    if op.space != state.space:
        raise SpaceMismatch("operator and state live on different spaces")
    out = op.matrix @ state.amps
    if not normalize:
        return out
    if np.linalg.norm(out) < 1e-14:
        raise ZeroVector("operator annihilated the state")
    return StateVector(state.space, out)


def expectation(op: LinearOperator, state: StateVector) -> complex:
    """<state|op|state>, complex in general."""
    if op.space != state.space:
        raise SpaceMismatch("operator and state live on different spaces")
    return complex(np.vdot(state.amps, op.matrix @ state.amps))


def moments(op: LinearOperator, state: StateVector):
    """Mean and variance of ``op`` in ``state``.

    For a Hermitian operator returns ``(real mean, variance)`` with
    variance = <op^2> - <op>^2; for a non-Hermitian operator the variance
    is undefined and ``(complex mean, None)`` is returned.
    """
    mean = expectation(op, state)
    if not op.hermitian:
        return mean, None
    image = op.matrix @ state.amps
    second = float(np.vdot(image, image).real)  # <op^2> for hermitian op
    mean = float(mean.real)
    return mean, second - mean * mean


def mat_exp(op: LinearOperator) -> LinearOperator:
    """Matrix exponential via scaling-and-squaring (Pade)."""
    if not np.all(np.isfinite(op.matrix.view(float))):
        raise NonFinite("matrix exponential of a non-finite matrix")
    return LinearOperator(op.space, scipy.linalg.expm(op.matrix))


def entropy_from_coefficients(coefficients) -> float:
    """-sum c^2 log2 c^2 with the 0*log0 = 0 convention."""
    p = np.asarray(coefficients, dtype=float) ** 2
    p = p[p > 0.0]
    if p.size == 0:
        return 0.0
    return max(0.0, float(-(p * np.log2(p)).sum()))


def schmidt_cut(state: StateVector, cut: int) -> SchmidtReport:
    """Schmidt decomposition across factors [0, cut) | [cut, n).

    ``cut`` must split the factor list into two nonempty groups.
    """
    nf = state.space.nfactors
    if nf < 2:
        raise NotComposite("Schmidt cut needs at least two factors")
    if not 1 <= cut <= nf - 1:
        raise NotComposite(f"cut index {cut} does not split {nf} factors")
    dims = state.space.factor_dims
    d_left = math.prod(dims[:cut])
    d_right = math.prod(dims[cut:])
    matrix = state.amps.reshape(d_left, d_right)
    left, coeffs, right = np.linalg.svd(matrix, full_matrices=False)
    ent = entropy_from_coefficients(coeffs)
    return SchmidtReport(
        coefficients=coeffs,
        entropy_bits=ent,
        is_product=ent < PRODUCT_THRESHOLD_BITS,
        left_vectors=left,
        right_vectors=right,
    )


def phase_align(reference: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Rotate ``amps`` by a global phase to match ``reference``.

    The phase is fixed at the largest-magnitude entry of ``reference``;
    if ``amps`` vanishes there, the overall overlap phase is used instead.
    """
    ref = np.asarray(reference)
    vec = np.asarray(amps)
    k = int(np.argmax(np.abs(ref)))
    if abs(vec[k]) > 1e-14:
        phase = np.angle(ref[k]) - np.angle(vec[k])
    else:
        ov = np.vdot(vec, ref)
        phase = 0.0 if abs(ov) < 1e-14 else np.angle(ov)
    return vec * np.exp(1j * phase)


def aligned_distance(u: StateVector, v: StateVector) -> float:
    """Norm distance between rays: ||u - e^{i phi} v|| after phase alignment."""
    if u.space != v.space:
        raise SpaceMismatch("aligned_distance requires equal spaces")
    return float(np.linalg.norm(u.amps - phase_align(u.amps, v.amps)))
