import math

import numpy as np
import pytest

from coherence_lab import qcore
from coherence_lab.errors import (
    AntipodalPoint,
    InvalidWeight,
    ValidationError,
    WeightConditionViolated,
)
from coherence_lab.qcore import (
    LinearOperator,
    StateVector,
    aligned_distance,
    apply,
    mat_exp,
    overlap,
    schmidt_cut,
    tensor_state,
)
from coherence_lab.spin import (
    SpinCsParams,
    addition_isometry,
    angle_to_zeta,
    basis_state,
    fock_model,
    lowest_state,
    model_cs,
    nearest_cs_fit,
    spin_cs,
    spin_cs_exp,
    spin_model,
    spin_ops,
    spin_space,
    split_spin,
)

HALF_SPINS = [0.5, 1.0, 1.5, 2.0, 3.0, 4.5, 6.0]


def test_j0_spin_half():
    j0, _, _ = spin_ops(0.5)
    np.testing.assert_allclose(j0.matrix, np.diag([-0.5, 0.5]), atol=1e-15)


@pytest.mark.parametrize("j", HALF_SPINS)
def test_su2_commutators(j):
    j0, jp, jm = spin_ops(j)
    comm_pm = jp.matrix @ jm.matrix - jm.matrix @ jp.matrix
    np.testing.assert_allclose(comm_pm, 2 * j0.matrix, atol=1e-13)
    comm_0p = j0.matrix @ jp.matrix - jp.matrix @ j0.matrix
    np.testing.assert_allclose(comm_0p, jp.matrix, atol=1e-13)


@pytest.mark.parametrize("j", HALF_SPINS)
def test_casimir(j):
    j0, jp, jm = spin_ops(j)
    casimir = (j0.matrix @ j0.matrix
               + (jp.matrix @ jm.matrix + jm.matrix @ jp.matrix) / 2)
    np.testing.assert_allclose(casimir, j * (j + 1) * np.eye(int(2 * j) + 1),
                               atol=1e-12)


def test_basis_state_lowest_and_raised():
    np.testing.assert_allclose(basis_state(1, -1).amps, [1, 0, 0], atol=1e-15)
    # one raising application with matched normalization
    np.testing.assert_allclose(basis_state(1, 0).amps, [0, 1, 0], atol=1e-12)
    np.testing.assert_allclose(basis_state(1.5, 1.5).amps, [0, 0, 0, 1],
                               atol=1e-12)


@pytest.mark.parametrize("j", [0.5, 1.0, 2.5])
def test_basis_state_is_canonical(j):
    tj = int(2 * j)
    for k in range(tj + 1):
        m = -j + k
        got = basis_state(j, m)
        expected = np.zeros(tj + 1)
        expected[k] = 1.0
        np.testing.assert_allclose(got.amps, expected, atol=1e-12)


def test_basis_state_invalid_weight():
    with pytest.raises(InvalidWeight):
        basis_state(1, 0.5)
    with pytest.raises(InvalidWeight):
        basis_state(1, 2)


def test_spin_cs_at_zero_is_lowest():
    s = spin_cs(SpinCsParams(j=2, zeta=0.0))
    np.testing.assert_allclose(s.amps, lowest_state(2).amps, atol=1e-15)


def test_spin_cs_half_explicit():
    s = spin_cs(SpinCsParams(j=0.5, zeta=1.0))
    np.testing.assert_allclose(s.amps, [1 / math.sqrt(2), 1 / math.sqrt(2)],
                               atol=1e-14)


def test_spin_cs_one_explicit():
    s = spin_cs(SpinCsParams(j=1, zeta=1.0))
    np.testing.assert_allclose(s.amps, [0.5, math.sqrt(2) / 2, 0.5], atol=1e-14)


def test_spin_cs_antipodal_via_angles():
    s = spin_cs(SpinCsParams.from_angles(1, math.pi, 0.7))
    np.testing.assert_allclose(s.amps, [0, 0, 1], atol=1e-15)


def test_spin_cs_rejects_nonfinite_zeta():
    with pytest.raises(ValidationError):
        SpinCsParams(j=1, zeta=complex(np.inf))


def test_angle_to_zeta_values():
    assert angle_to_zeta(0.0, 0.3) == 0.0
    assert angle_to_zeta(math.pi / 2, 0.0) == pytest.approx(-1.0, abs=1e-14)
    # frozen by direct evaluation of -tan(theta/2) exp(-i phi)
    got = angle_to_zeta(math.pi / 2, math.pi / 2)
    assert got == pytest.approx(1j, abs=1e-14)
    with pytest.raises(AntipodalPoint):
        angle_to_zeta(math.pi, 0.0)


def test_spin_cs_exp_zero():
    s = spin_cs_exp(1.5, 0.0)
    np.testing.assert_allclose(s.amps, lowest_state(1.5).amps, atol=1e-15)


def test_spin_cs_exp_matches_closed_form_spin_half():
    got = spin_cs_exp(0.5, -math.pi / 4)
    want = spin_cs(SpinCsParams(j=0.5, zeta=-1.0))
    assert aligned_distance(want, got) < 1e-12


@pytest.mark.parametrize("j", [0.5, 1.0, 1.5, 2.0, 3.0])
def test_two_route_agreement(j):
    rng = np.random.default_rng(42)
    for _ in range(12):
        r = rng.uniform(0.05, 1.39)
        ang = rng.uniform(0, 2 * math.pi)
        xi = r * np.exp(1j * ang)
        got = spin_cs_exp(j, xi)
        zeta = xi / abs(xi) * math.tan(abs(xi))
        want = spin_cs(SpinCsParams(j=j, zeta=zeta))
        assert abs(overlap(want, got)) > 1 - 1e-10


def test_isotropy_rotation_moves_zeta_forward():
    # exp(i delta J0)|j,zeta> = |j, zeta e^{i delta}> up to a global phase
    j, zeta, delta = 1.5, 0.6 - 0.2j, 0.8
    j0, _, _ = spin_ops(j)
    rot = mat_exp(LinearOperator(j0.space, 1j * delta * j0.matrix))
    got = apply(rot, spin_cs(SpinCsParams(j=j, zeta=zeta)))
    want = spin_cs(SpinCsParams(j=j, zeta=zeta * np.exp(1j * delta)))
    assert aligned_distance(want, got) < 1e-12


def test_isotropy_leaves_reference_state_invariant():
    j = 1.0
    j0, _, _ = spin_ops(j)
    rot = mat_exp(LinearOperator(j0.space, 1j * 1.1 * j0.matrix))
    got = apply(rot, lowest_state(j))
    assert aligned_distance(lowest_state(j), got) < 1e-12


# ---------------------------------------------------------------------------
# stretched-coupling embedding
# ---------------------------------------------------------------------------

def test_addition_isometry_spin1_columns():
    w = addition_isometry(0.5, 0.5)
    down_down = np.array([1, 0, 0, 0], dtype=complex)
    up_up = np.array([0, 0, 0, 1], dtype=complex)
    triplet = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
    np.testing.assert_allclose(w.matrix[:, 0], down_down, atol=1e-14)
    np.testing.assert_allclose(w.matrix[:, 1], triplet, atol=1e-14)
    np.testing.assert_allclose(w.matrix[:, 2], up_up, atol=1e-14)


PAIRS = [(b / 2, c / 2) for b in range(1, 7) for c in range(1, 7)]


@pytest.mark.parametrize("jb,jc", PAIRS)
def test_addition_isometry_is_isometry(jb, jc):
    w = addition_isometry(jb, jc)
    dim = w.domain.dim
    np.testing.assert_allclose(w.matrix.conj().T @ w.matrix, np.eye(dim),
                               atol=1e-12)


@pytest.mark.parametrize("jb,jc", PAIRS)
def test_intertwining_relations(jb, jc):
    ja = jb + jc
    w = addition_isometry(jb, jc).matrix
    ops_a = spin_ops(ja)
    ops_b = spin_ops(jb)
    ops_c = spin_ops(jc)
    dim_b, dim_c = int(2 * jb) + 1, int(2 * jc) + 1
    for op_a, op_b, op_c in zip(ops_a, ops_b, ops_c):
        pair = (np.kron(op_b.matrix, np.eye(dim_c))
                + np.kron(np.eye(dim_b), op_c.matrix))
        residue = np.abs(w @ op_a.matrix - pair @ w).max()
        assert residue < 1e-11


def test_split_spin_cs_factorizes_exactly():
    zeta = 0.4 + 1.1j
    got = split_spin(spin_cs(SpinCsParams(j=1, zeta=zeta)), 0.5, 0.5)
    half = spin_cs(SpinCsParams(j=0.5, zeta=zeta))
    want = tensor_state(half, half)
    np.testing.assert_allclose(got.amps, want.amps, atol=1e-12)


def test_split_spin_m0_is_maximally_entangled():
    got = split_spin(basis_state(1, 0), 0.5, 0.5)
    rep = schmidt_cut(got, 1)
    assert rep.entropy_bits == pytest.approx(1.0, abs=1e-12)


def test_split_spin_lowest_is_product_of_lowests():
    got = split_spin(lowest_state(2), 0.5, 1.5)
    want = tensor_state(lowest_state(0.5), lowest_state(1.5))
    np.testing.assert_allclose(got.amps, want.amps, atol=1e-14)


def test_split_spin_weight_condition():
    with pytest.raises(WeightConditionViolated):
        split_spin(basis_state(1, 0), 0.5, 1.0)


def test_cs_factorization_random_zeta_all_pairs():
    rng = np.random.default_rng(2024)
    pairs = [(b / 2, c / 2) for b in range(1, 6) for c in range(1, 6)
             if b + c <= 6]
    zetas = 5.0 * np.sqrt(rng.uniform(0, 1, 40)) * np.exp(
        2j * math.pi * rng.uniform(0, 1, 40))
    for jb, jc in pairs:
        ja = jb + jc
        for zeta in zetas[:10]:
            out = split_spin(spin_cs(SpinCsParams(j=ja, zeta=zeta)), jb, jc)
            assert schmidt_cut(out, 1).entropy_bits < 1e-9


# ---------------------------------------------------------------------------
# fits and the lowest-weight abstraction
# ---------------------------------------------------------------------------

def test_nearest_cs_fit_roundtrip():
    params = SpinCsParams.from_angles(1.5, 1.1, 2.3)
    theta, phi, zeta, fid = nearest_cs_fit(spin_cs(params))
    assert fid > 1 - 1e-12
    assert theta == pytest.approx(1.1, abs=1e-7)
    assert phi == pytest.approx(2.3, abs=1e-7)
    assert abs(zeta - angle_to_zeta(1.1, 2.3)) < 1e-7


def test_nearest_cs_fit_pole():
    state = StateVector(spin_space(1), [0, 0, 1])
    theta, phi, zeta, fid = nearest_cs_fit(state)
    assert fid > 1 - 1e-12
    assert theta == pytest.approx(math.pi, abs=1e-7)
    assert np.isinf(abs(zeta))


def test_lowest_weight_models():
    for model in (spin_model(1.5), fock_model(15)):
        for op in model.raising:
            assert np.linalg.norm(op.matrix.conj().T @ model.lowest.amps) < 1e-12
        for op, weight in zip(model.cartan, model.weights):
            got = op.matrix @ model.lowest.amps
            np.testing.assert_allclose(got, weight * model.lowest.amps,
                                       atol=1e-12)


def test_model_cs_reproduces_both_families():
    spin_m = spin_model(1.5)
    got = model_cs(spin_m, 0.7 - 0.4j)
    want = spin_cs(SpinCsParams(j=1.5, zeta=0.7 - 0.4j))
    assert aligned_distance(want, got) < 1e-12

    from coherence_lab.fock import glauber_cs
    fock_m = fock_model(30)
    got = model_cs(fock_m, 0.9 + 0.2j)
    want = glauber_cs(0.9 + 0.2j, 30)
    assert aligned_distance(want, got) < 1e-10
