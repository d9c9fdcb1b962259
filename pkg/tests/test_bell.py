import math

import numpy as np
import pytest

from coherence_lab import spin
from coherence_lab.bell import (
    TSIRELSON,
    ChshSettings,
    analytic_qubit_settings,
    chsh_maximize,
    chsh_value,
    correlation_matrix,
    horodecki_max,
    observable_from_unitary,
    qubit_observable,
)
from coherence_lab.errors import (
    NotTwoQubit,
    NotUnit,
    StrategyUnavailable,
    ValidationError,
)
from coherence_lab.qcore import SpaceDescriptor, StateVector, tensor_state

TWO_QUBITS = SpaceDescriptor.single_spin(0.5).tensor(SpaceDescriptor.single_spin(0.5))


def psi_plus() -> StateVector:
    return StateVector(TWO_QUBITS, [0, 1, 1, 0])


def haar_two_qubit(rng) -> StateVector:
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return StateVector(TWO_QUBITS, v)


def settings_from_directions(nb, nbp, nc, ncp) -> ChshSettings:
    return ChshSettings(qubit_observable(nb), qubit_observable(nbp),
                        qubit_observable(nc), qubit_observable(ncp))


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def test_qubit_observable_z():
    obs = qubit_observable([0, 0, 1])
    np.testing.assert_allclose(obs.operator.matrix, np.diag([-1, 1]), atol=1e-15)


def test_qubit_observable_x_is_involution():
    obs = qubit_observable([1, 0, 0])
    evals = np.linalg.eigvalsh(obs.operator.matrix)
    np.testing.assert_allclose(evals, [-1, 1], atol=1e-14)
    sq = obs.operator.matrix @ obs.operator.matrix
    np.testing.assert_allclose(sq, np.eye(2), atol=1e-14)


def test_qubit_observable_rejects_nonunit():
    with pytest.raises(NotUnit):
        qubit_observable([0.5, 0, 0])


def test_observable_from_unitary():
    space = SpaceDescriptor.single_spin(1)
    rng = np.random.default_rng(1)
    h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = h + h.conj().T
    import scipy.linalg
    u = scipy.linalg.expm(1j * h)
    obs = observable_from_unitary(u, [1, -1, 1], space)
    sq = obs.operator.matrix @ obs.operator.matrix
    np.testing.assert_allclose(sq, np.eye(3), atol=1e-12)
    with pytest.raises(ValidationError):
        observable_from_unitary(u, [1, -2, 1], space)


# ---------------------------------------------------------------------------
# chsh_value
# ---------------------------------------------------------------------------

def test_chsh_value_product_state_bounded():
    # classical bound: 1000 seeded random settings over random product states
    rng = np.random.default_rng(13)
    for _ in range(100):
        single = SpaceDescriptor.single_spin(0.5)
        u = StateVector(single, rng.normal(size=2) + 1j * rng.normal(size=2))
        v = StateVector(single, rng.normal(size=2) + 1j * rng.normal(size=2))
        state = tensor_state(u, v)
        for _ in range(10):
            dirs = rng.normal(size=(4, 3))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            settings = settings_from_directions(*dirs)
            assert abs(chsh_value(state, settings)) <= 2 + 1e-10


def test_chsh_value_optimal_on_triplet():
    # frozen via the correlation-matrix oracle: value must reach 2 sqrt 2
    settings = analytic_qubit_settings(psi_plus())
    assert chsh_value(psi_plus(), settings) == pytest.approx(2 * math.sqrt(2),
                                                             abs=1e-8)


def test_chsh_value_aligned_z_settings():
    z = [0, 0, 1]
    settings = settings_from_directions(z, z, z, z)
    down_down = StateVector(TWO_QUBITS, [1, 0, 0, 0])
    # E(b,c) + E(b',c) + E(b,c') - E(b',c') = 1 + 1 + 1 - 1 = 2 on |down,down>
    assert chsh_value(down_down, settings) == pytest.approx(2.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Horodecki oracle
# ---------------------------------------------------------------------------

def test_horodecki_product_state():
    u = StateVector(SpaceDescriptor.single_spin(0.5), [0.6, 0.8j])
    assert horodecki_max(tensor_state(u, u)) == pytest.approx(2.0, abs=1e-10)


def test_horodecki_triplet():
    t = correlation_matrix(psi_plus())
    np.testing.assert_allclose(t, np.diag([1.0, 1.0, -1.0]), atol=1e-12)
    assert horodecki_max(psi_plus()) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_horodecki_split_spin_cs_never_violates():
    for zeta in (0.0, 1.0, -0.4 + 2.2j, 5.0):
        out = spin.split_spin(spin.spin_cs(spin.SpinCsParams(j=1, zeta=zeta)),
                              0.5, 0.5)
        assert horodecki_max(out) == pytest.approx(2.0, abs=1e-8)


def test_horodecki_needs_two_qubits():
    with pytest.raises(NotTwoQubit):
        horodecki_max(spin.basis_state(1, 0))


# ---------------------------------------------------------------------------
# maximization
# ---------------------------------------------------------------------------

def test_maximize_analytic_matches_oracle():
    rng = np.random.default_rng(21)
    for _ in range(25):
        state = haar_two_qubit(rng)
        res = chsh_maximize(state)
        assert res.max_value == pytest.approx(horodecki_max(state), abs=1e-10)
        assert res.max_value <= TSIRELSON + 1e-6


def test_maximize_numerical_product_state():
    u = StateVector(SpaceDescriptor.single_spin(0.5), [1 / math.sqrt(2), 1j / math.sqrt(2)])
    state = tensor_state(u, u)
    res = chsh_maximize(state, "multistart-local-search", n_starts=8, seed=3)
    assert res.max_value == pytest.approx(2.0, abs=1e-6)


def test_maximize_numerical_matches_oracle_on_entangled_states():
    rng = np.random.default_rng(77)
    count = 0
    while count < 20:
        state = haar_two_qubit(rng)
        from coherence_lab.qcore import schmidt_cut
        if schmidt_cut(state, 1).entropy_bits < 1e-3:
            continue
        count += 1
        res = chsh_maximize(state, "multistart-local-search", n_starts=8,
                            seed=1000 + count)
        oracle = horodecki_max(state)
        assert res.max_value > 2 + 1e-6
        assert res.max_value == pytest.approx(oracle, abs=1e-5)
        # reported settings actually attain the reported value
        assert chsh_value(state, res.settings) == pytest.approx(res.max_value,
                                                                abs=1e-12)


def test_maximize_split_single_photon():
    from coherence_lab import fock
    out = fock.split_fock(fock.number_state(1, 1), fock.SplitSpec.balanced())
    res = chsh_maximize(out, "multistart-local-search", n_starts=8, seed=17)
    assert res.max_value > 2.0
    assert res.max_value <= TSIRELSON + 1e-6


def test_maximize_general_route_finds_violation_in_2x3():
    # Bell pair embedded in the first two levels of a qutrit side
    space = SpaceDescriptor.single_spin(0.5).tensor(SpaceDescriptor.single_spin(1))
    amps = np.zeros(6, dtype=complex)
    amps[0 * 3 + 0] = 1 / math.sqrt(2)
    amps[1 * 3 + 1] = 1 / math.sqrt(2)
    state = StateVector(space, amps)
    res = chsh_maximize(state, "multistart-local-search", n_starts=8, seed=4)
    assert res.max_value > 2.0
    assert res.max_value <= TSIRELSON + 1e-6
    assert res.settings.angle_lists() is None


def test_maximize_gisin_property():
    # every entangled two-qubit pure state violates the classical bound
    rng = np.random.default_rng(99)
    from coherence_lab.qcore import schmidt_cut
    tested = 0
    while tested < 200:
        state = haar_two_qubit(rng)
        if schmidt_cut(state, 1).entropy_bits <= 1e-3:
            continue
        tested += 1
        assert chsh_maximize(state).max_value > 2.0


def test_maximize_strategy_guards():
    with pytest.raises(StrategyUnavailable):
        chsh_maximize(psi_plus(), "nonsense")
    with pytest.raises(ValidationError):
        chsh_maximize(psi_plus(), "multistart-local-search", seed=None)
    space = SpaceDescriptor.single_spin(0.5).tensor(SpaceDescriptor.single_spin(1))
    amps = np.zeros(6)
    amps[0] = 1
    with pytest.raises(StrategyUnavailable):
        chsh_maximize(StateVector(space, amps), "analytic-qubit")


def test_maximize_general_rejects_large_subsystems():
    # a split coherent mode at cutoff 12 has 13-dim subsystems; the generic
    # search must refuse instead of grinding through (d-1)^4 sign classes
    from coherence_lab import fock
    out = fock.split_fock(fock.glauber_cs(0.0, 12), fock.SplitSpec.balanced())
    with pytest.raises(StrategyUnavailable):
        chsh_maximize(out, "multistart-local-search", n_starts=2, seed=1)


def test_split_non_cs_spin1_states_violate():
    rng = np.random.default_rng(31)
    from coherence_lab.qcore import schmidt_cut
    found = 0
    while found < 25:
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        state = StateVector(SpaceDescriptor.single_spin(1), v)
        out = spin.split_spin(state, 0.5, 0.5)
        if schmidt_cut(out, 1).entropy_bits <= 0.01:
            continue
        found += 1
        assert horodecki_max(out) > 2.0
