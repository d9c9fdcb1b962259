"""CHSH quantity: evaluation, the analytic two-qubit maximum, and a
multistart numerical maximizer.

The four-correlator combination E(b,c) + E(b',c) + E(b,c') - E(b',c') is
bounded by 2 on product states and by 2*sqrt(2) on all states. For a pair
of two-level factors the exact maximum over dichotomic observables is
2*sqrt(t1^2 + t2^2) with t1 >= t2 the top singular values of the 3x3
correlation matrix T_kl = <sigma_k (x) sigma_l> — the oracle the numerical
route is tested against.

Pauli convention: sigma_k = 2 J_k for the spin-1/2 generators, components
ordered (x, y, z), basis m ascending, so sigma_z = diag(-1, +1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import qcore
from .errors import (
    NotTwoQubit,
    NotUnit,
    SpaceMismatch,
    StrategyUnavailable,
    ValidationError,
)
from .qcore import LinearOperator, SpaceDescriptor, StateVector

TSIRELSON = 2.0 * math.sqrt(2.0)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
PAULI_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

_INVOLUTION_TOL = 1e-10


@dataclass(frozen=True)
class DichotomicObservable:
    """Hermitian operator with spectrum in {+1, -1}.

    ``parameterization`` records how it was built: ``("direction", n)`` for
    a Bloch direction on a two-level factor, or ``("unitary-signs", U, s)``
    for U diag(s) U+ on a higher-dimensional one.
    """

    operator: LinearOperator
    parameterization: tuple

    def __post_init__(self):
        mat = self.operator.matrix
        if np.abs(mat @ mat - np.eye(mat.shape[0])).max() >= _INVOLUTION_TOL:
            raise ValidationError("observable must square to the identity")


def qubit_observable(direction, space: Optional[SpaceDescriptor] = None
                     ) -> DichotomicObservable:
    """n . sigma on a two-level factor (default: a single spin-1/2)."""
    n = np.asarray(direction, dtype=float)
    if n.shape != (3,):
        raise ValidationError("direction must be a 3-vector")
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise NotUnit(f"direction must be unit length, |n| = {np.linalg.norm(n)!r}")
    if space is None:
        space = SpaceDescriptor.single_spin(0.5)
    if space.dim != 2 or space.nfactors != 1:
        raise ValidationError("qubit_observable needs a single two-level factor")
    mat = n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z
    op = LinearOperator(space, mat, hermitian=True)
    return DichotomicObservable(op, ("direction", tuple(n)))


def observable_from_unitary(unitary, signs, space: SpaceDescriptor
                            ) -> DichotomicObservable:
    """U diag(signs) U+ with a +-1 sign pattern; the general realization."""
    u = np.asarray(unitary, dtype=complex)
    s = np.asarray(signs, dtype=float)
    d = space.dim
    if u.shape != (d, d) or s.shape != (d,):
        raise ValidationError("unitary/sign shapes do not match the space")
    if not np.all(np.abs(s) == 1.0):
        raise ValidationError("signs must be +-1")
    if np.abs(u @ u.conj().T - np.eye(d)).max() > 1e-10:
        raise ValidationError("matrix is not unitary")
    mat = (u * s) @ u.conj().T
    op = LinearOperator(space, mat, hermitian=True)
    return DichotomicObservable(op, ("unitary-signs", u, tuple(int(x) for x in s)))


@dataclass(frozen=True)
class ChshSettings:
    """Two observables per subsystem: b, b' act on the first factor, c, c'
    on the second."""

    b: DichotomicObservable
    b_prime: DichotomicObservable
    c: DichotomicObservable
    c_prime: DichotomicObservable

    def angle_lists(self):
        """Bloch angles (theta, phi) per observable where available."""
        out = []
        for obs in (self.b, self.b_prime, self.c, self.c_prime):
            if obs.parameterization[0] != "direction":
                return None
            nx, ny, nz = obs.parameterization[1]
            out.append([math.acos(max(-1.0, min(1.0, nz))), math.atan2(ny, nx)])
        return out


def _check_settings(state: StateVector, settings: ChshSettings):
    if state.space.nfactors != 2:
        raise SpaceMismatch("CHSH needs a state on exactly two factors")
    space_b = state.space.subspace(0, 1)
    space_c = state.space.subspace(1, 2)
    for obs, space in ((settings.b, space_b), (settings.b_prime, space_b),
                       (settings.c, space_c), (settings.c_prime, space_c)):
        if obs.operator.space != space:
            raise SpaceMismatch("observable does not act on its own factor")


def chsh_value(state: StateVector, settings: ChshSettings) -> float:
    """E(b,c) + E(b',c) + E(b,c') - E(b',c') on the given state."""
    _check_settings(state, settings)

    def corr(ob, oc):
        joint = np.kron(ob.operator.matrix, oc.operator.matrix)
        return np.vdot(state.amps, joint @ state.amps)

    total = (corr(settings.b, settings.c) + corr(settings.b_prime, settings.c)
             + corr(settings.b, settings.c_prime)
             - corr(settings.b_prime, settings.c_prime))
    if abs(total.imag) > 1e-10:
        raise ValidationError(f"CHSH value has imaginary residue {total.imag:.2e}")
    return float(total.real)


def correlation_matrix(state: StateVector) -> np.ndarray:
    """T_kl = <sigma_k (x) sigma_l> for a state on two two-level factors."""
    if state.space.nfactors != 2 or state.space.factor_dims != (2, 2):
        raise NotTwoQubit("correlation matrix needs two two-level factors")
    psi = state.amps
    T = np.empty((3, 3))
    for k in range(3):
        for l in range(3):
            T[k, l] = np.vdot(psi, np.kron(PAULIS[k], PAULIS[l]) @ psi).real
    return T


def horodecki_max(state: StateVector) -> float:
    """Exact two-qubit CHSH maximum 2 sqrt(t1^2 + t2^2)."""
    t = np.linalg.svd(correlation_matrix(state), compute_uv=False)
    return 2.0 * math.sqrt(t[0] ** 2 + t[1] ** 2)


def _direction(theta: float, phi: float) -> np.ndarray:
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def _settings_from_directions(state, nb, nbp, nc, ncp) -> ChshSettings:
    space_b = state.space.subspace(0, 1)
    space_c = state.space.subspace(1, 2)
    return ChshSettings(
        b=qubit_observable(nb, space_b),
        b_prime=qubit_observable(nbp, space_b),
        c=qubit_observable(nc, space_c),
        c_prime=qubit_observable(ncp, space_c),
    )


def analytic_qubit_settings(state: StateVector) -> ChshSettings:
    """Optimal directions from the SVD of the correlation matrix.

    With T = U diag(t) V^T, the c-side measures along the top two right
    singular vectors and the b-side along cos(chi) u1 +- sin(chi) u2 with
    tan(chi) = t2/t1, which attains 2 sqrt(t1^2 + t2^2).
    """
    T = correlation_matrix(state)
    u, t, vt = np.linalg.svd(T)
    chi = math.atan2(t[1], t[0])
    nb = math.cos(chi) * u[:, 0] + math.sin(chi) * u[:, 1]
    nbp = math.cos(chi) * u[:, 0] - math.sin(chi) * u[:, 1]

    def unit(v):
        n = np.linalg.norm(v)
        return v / n if n > 1e-14 else np.array([0.0, 0.0, 1.0])

    return _settings_from_directions(state, unit(nb), unit(nbp), vt[0, :], vt[1, :])


@dataclass(frozen=True)
class ChshResult:
    max_value: float
    settings: ChshSettings
    strategy: str
    n_starts: Optional[int] = None
    seed: Optional[int] = None
    tol: Optional[float] = None


def _maximize_two_level(state, n_starts, seed, tol) -> ChshResult:
    """Multistart simplex over c-side angles; the b-side optimum for fixed
    c-directions is exact: |T (nc + nc')| + |T (nc - nc')|."""
    T = correlation_matrix(state)
    rng = np.random.default_rng(seed)

    def value(x):
        nc, ncp = _direction(x[0], x[1]), _direction(x[2], x[3])
        return (np.linalg.norm(T @ (nc + ncp)) + np.linalg.norm(T @ (nc - ncp)))

    best_val, best_x = -np.inf, None
    for _ in range(n_starts):
        x0 = rng.uniform(0.0, np.pi, 4)
        x0[1::2] *= 2.0
        res = minimize(lambda x: -value(x), x0, method="Nelder-Mead",
                       options=dict(xatol=tol * 1e-2, fatol=tol * 1e-6,
                                    maxiter=800))
        if -res.fun > best_val:
            best_val, best_x = -float(res.fun), res.x

    nc, ncp = _direction(best_x[0], best_x[1]), _direction(best_x[2], best_x[3])

    def unit(v, fallback):
        n = np.linalg.norm(v)
        return v / n if n > 1e-12 else fallback

    nb = unit(T @ (nc + ncp), np.array([0.0, 0.0, 1.0]))
    nbp = unit(T @ (nc - ncp), np.array([1.0, 0.0, 0.0]))
    settings = _settings_from_directions(state, nb, nbp, nc, ncp)
    return ChshResult(chsh_value(state, settings), settings,
                      "multistart-local-search", n_starts, seed, tol)


def _balanced_multiplicities(dim: int):
    """Eigenvalue-multiplicity classes of +-1 patterns; permutations and the
    global flip are absorbed by the unitary search."""
    return list(range(1, dim))


def _hermitian_from_params(params: np.ndarray, dim: int) -> np.ndarray:
    h = np.zeros((dim, dim), dtype=complex)
    idx = 0
    for i in range(dim):
        h[i, i] = params[idx]
        idx += 1
    for i in range(dim):
        for k in range(i + 1, dim):
            h[i, k] = params[idx] + 1j * params[idx + 1]
            h[k, i] = params[idx] - 1j * params[idx + 1]
            idx += 2
    return h


#: largest subsystem dimension the generic numerical search accepts; the
#: parameter count grows like d^2 per observable and the sign-class product
#: like (d-1)^4, so larger spaces would silently take hours
GENERAL_SEARCH_MAX_DIM = 3


def _maximize_general(state, n_starts, seed, tol) -> ChshResult:
    """Generic route: observables U diag(s) U+ with U = exp(i H(params)).

    Starts cycle through the sign-multiplicity combinations of the four
    observables; reports the best value found (a value <= 2 means no
    violation was found, not that none exists).
    """
    dims = state.space.factor_dims
    d_b, d_c = dims
    if max(d_b, d_c) > GENERAL_SEARCH_MAX_DIM:
        raise StrategyUnavailable(
            f"numerical search supports subsystem dimensions up to "
            f"{GENERAL_SEARCH_MAX_DIM}, got {dims}; restrict the state to a "
            f"smaller support (e.g. split at a lower cutoff)")
    space_b = state.space.subspace(0, 1)
    space_c = state.space.subspace(1, 2)
    nb_params = d_b * d_b
    nc_params = d_c * d_c
    combos = [(kb, kbp, kc, kcp)
              for kb in _balanced_multiplicities(d_b)
              for kbp in _balanced_multiplicities(d_b)
              for kc in _balanced_multiplicities(d_c)
              for kcp in _balanced_multiplicities(d_c)]
    rng = np.random.default_rng(seed)

    def signs(dim, k):
        return np.array([1.0] * k + [-1.0] * (dim - k))

    def unitary(p, d):
        vals, vecs = np.linalg.eigh(_hermitian_from_params(p, d))
        return (vecs * np.exp(1j * vals)) @ vecs.conj().T

    def observable_matrices(params, combo):
        kb, kbp, kc, kcp = combo
        cuts = np.cumsum([nb_params, nb_params, nc_params, nc_params])[:-1]
        pb, pbp, pc, pcp = np.split(params, cuts)
        mats = []
        for p, d, k in ((pb, d_b, kb), (pbp, d_b, kbp),
                        (pc, d_c, kc), (pcp, d_c, kcp)):
            u = unitary(p, d)
            mats.append((u * signs(d, k)) @ u.conj().T)
        return mats

    psi_mat = state.amps.reshape(d_b, d_c)

    def value(params, combo):
        ob, obp, oc, ocp = observable_matrices(params, combo)
        # <B (x) C> = sum_ij B_ij (conj(M) C M^T)_ij with M the amplitude matrix
        left = psi_mat.conj()

        def corr(b, c):
            return float(np.sum(b * (left @ c @ psi_mat.T)).real)

        return corr(ob, oc) + corr(obp, oc) + corr(ob, ocp) - corr(obp, ocp)

    def build(params, combo):
        kb, kbp, kc, kcp = combo
        cuts = np.cumsum([nb_params, nb_params, nc_params, nc_params])[:-1]
        pb, pbp, pc, pcp = np.split(params, cuts)
        return ChshSettings(
            observable_from_unitary(unitary(pb, d_b), signs(d_b, kb), space_b),
            observable_from_unitary(unitary(pbp, d_b), signs(d_b, kbp), space_b),
            observable_from_unitary(unitary(pc, d_c), signs(d_c, kc), space_c),
            observable_from_unitary(unitary(pcp, d_c), signs(d_c, kcp), space_c),
        )

    n_params = 2 * nb_params + 2 * nc_params
    best_val, best = -np.inf, None
    starts = max(n_starts, len(combos))
    for i in range(starts):
        combo = combos[i % len(combos)]
        x0 = rng.normal(scale=1.0, size=n_params)
        res = minimize(lambda x: -value(x, combo), x0, method="Nelder-Mead",
                       options=dict(xatol=1e-6, fatol=tol * 1e-2,
                                    maxiter=150 * n_params, maxfev=150 * n_params))
        if -res.fun > best_val:
            best_val, best = -float(res.fun), (res.x, combo)
    settings = build(*best)
    return ChshResult(chsh_value(state, settings), settings,
                      "multistart-local-search", n_starts, seed, tol)


def chsh_maximize(state: StateVector, strategy: str = "analytic-qubit",
                  n_starts: int = 32, seed: Optional[int] = None,
                  tol: float = 1e-7) -> ChshResult:
    """Maximize the CHSH quantity over dichotomic observable settings.

    ``analytic-qubit`` requires two two-level factors and is exact;
    ``multistart-local-search`` needs an explicit seed and optimizes the
    observable parameterizations numerically.
    """
    if state.space.nfactors != 2:
        raise SpaceMismatch("CHSH maximization needs a two-factor state")
    if strategy == "analytic-qubit":
        if state.space.factor_dims != (2, 2):
            raise StrategyUnavailable("analytic strategy needs two two-level factors")
        settings = analytic_qubit_settings(state)
        return ChshResult(chsh_value(state, settings), settings, strategy)
    if strategy == "multistart-local-search":
        if seed is None:
            raise ValidationError("the numerical strategy requires an explicit seed")
        if n_starts < 1:
            raise ValidationError("n_starts must be >= 1")
        if state.space.factor_dims == (2, 2):
            return _maximize_two_level(state, n_starts, seed, tol)
        return _maximize_general(state, n_starts, seed, tol)
    raise StrategyUnavailable(f"unknown strategy {strategy!r}")
