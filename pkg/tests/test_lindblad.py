import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_density, random_generator, random_hermitian, random_unitary
from noiseforms.channel import apply, trace_distance
from noiseforms.linalg import ValidationError, kron, mat_exp
from noiseforms.lindblad import (
    YY,
    LindbladGenerator,
    PulseSchedule,
    SimulationDecomposition,
    arbitrary_h_chain,
    average_generator,
    chain_parameter_rank,
    closed_form_pauli_channel,
    conjugate_generator,
    decoherence_standard_form,
    dephasing_generator,
    depolarizing_decay,
    evolve,
    generator_from_dict,
    generator_to_superoperator,
    independent_entries,
    ising_axis_decomposition,
    ising_standard_form,
    pauli_components,
    pauli_rotation,
    schedule_average,
    separable_mixing_check,
    stroboscopic_evolve,
    superoperator_to_choi,
    twirl_generator,
    unitary_superoperator,
)
from noiseforms.pauli import X, Y, Z
from noiseforms.standard_forms import extract_pauli_channel, extract_phase_gate_form
from noiseforms.twirl import depolarizing_set, pauli_set, phase_gate_set, twirl

seeds = st.integers(min_value=0, max_value=2**32 - 1)
ZZ = kron(Z, Z)
STEPS = [16, 32, 64, 128, 256, 512, 1024]


def literal_action(z, rho):
    """The generator applied to rho by direct matrix products."""
    h = z.hamiltonian + z.lamb_shift
    out = -1j * (h @ rho - rho @ h)
    labels = [k for k in itertools.product(range(4), repeat=z.qubits) if any(k)]
    sig = [np.eye(2), X, Y, Z]
    ops = [kron(*[sig[i] for i in k]) for k in labels]
    for k, l in itertools.product(range(len(ops)), repeat=2):
        sk, sl = ops[k], ops[l]
        out += z.gks[k, l] * ((sk @ rho @ sl - rho @ sl @ sk) + (sk @ rho @ sl - sl @ sk @ rho))
    return out


def log_slope(steps, errors):
    return np.polyfit(np.log(steps), np.log(errors), 1)[0]


# Generators and superoperators


def test_zero_generator_is_identity_channel():
    z = LindbladGenerator.zero(2)
    assert not np.any(generator_to_superoperator(z))
    rho = random_density(np.random.default_rng(70), 4)
    assert np.allclose(apply(evolve(z, 1.3), rho), rho)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_superoperator_matches_literal_action(seed):
    rng = np.random.default_rng(seed)
    z = random_generator(rng, 2, h=random_hermitian(rng, 4))
    rho = random_density(rng, 4)
    vec = generator_to_superoperator(z) @ rho.reshape(-1)
    assert np.allclose(vec.reshape(4, 4), literal_action(z, rho))


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_evolution_is_trace_preserving_and_cp(seed):
    rng = np.random.default_rng(seed)
    z = random_generator(rng, 2, h=random_hermitian(rng, 4))
    s = generator_to_superoperator(z)
    # Columns annihilate the trace.
    assert np.max(np.abs(np.eye(4).reshape(-1) @ s)) < 1e-12
    e = evolve(z, 0.7)
    rho = random_density(rng, 4)
    assert abs(np.trace(apply(e, rho)) - 1) < 1e-10
    assert e.is_cp()


def test_generator_validation():
    with pytest.raises(ValidationError):
        LindbladGenerator(np.zeros((2, 2)), np.zeros((2, 2)), -np.eye(3))
    with pytest.raises(ValidationError):
        LindbladGenerator(np.array([[0, 1], [0, 0]]), np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(ValidationError):
        LindbladGenerator(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((8, 8)))


def test_json_round_trip():
    import json

    z = random_generator(np.random.default_rng(71), 2)
    back = generator_from_dict(json.loads(z.to_json()))
    assert np.array_equal(back.gks, z.gks) and np.array_equal(back.lamb_shift, z.lamb_shift)
    assert back.to_json() == z.to_json()


def test_superoperator_to_choi_of_unitary():
    u = random_unitary(np.random.default_rng(72), 4)
    e = superoperator_to_choi(unitary_superoperator(u), 2)
    rho = random_density(np.random.default_rng(73), 4)
    assert np.allclose(apply(e, rho), u @ rho @ u.conj().T)


# Conjugation and averaging


def test_conjugation_by_identity_is_trivial():
    z = random_generator(np.random.default_rng(74), 1)
    same = conjugate_generator(z, np.eye(2))
    assert np.allclose(same.gks, z.gks)


def test_conjugation_by_x_is_signed_permutation():
    z = dephasing_generator([0.1, 0.2, 0.3])
    o = pauli_rotation(X)
    assert np.array_equal(np.abs(o), np.eye(3))
    moved = conjugate_generator(z, X)
    assert np.allclose(moved.gks, np.diag([0.1, 0.2, 0.3]))
    t = 0.8
    cu = unitary_superoperator(X)
    expected = cu @ mat_exp(generator_to_superoperator(z) * t) @ cu.conj().T
    assert np.allclose(mat_exp(generator_to_superoperator(moved) * t), expected, atol=1e-12)


@pytest.mark.parametrize("qubits", [1, 2])
def test_rotation_is_orthogonal(qubits):
    rng = np.random.default_rng(75 + qubits)
    for _ in range(20):
        o = pauli_rotation(random_unitary(rng, 2**qubits))
        assert np.max(np.abs(o @ o.T - np.eye(o.shape[0]))) < 1e-12


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_conjugation_commutes_with_exponentiation(seed):
    rng = np.random.default_rng(seed)
    z = random_generator(rng, 2, h=random_hermitian(rng, 4))
    u = random_unitary(rng, 4)
    moved = conjugate_generator(z, u)
    assert np.linalg.eigvalsh(moved.gks).min() >= -1e-12
    cu = unitary_superoperator(u)
    for t in (0.1, 1.0, 2.0):
        direct = superoperator_to_choi(cu @ mat_exp(generator_to_superoperator(z) * t) @ cu.conj().T, 2)
        assert trace_distance(evolve(moved, t), direct) < 1e-9


def test_average_generator():
    z = random_generator(np.random.default_rng(77), 1)
    assert np.allclose(average_generator([(1.0, z)]).gks, z.gks)
    deph = dephasing_generator([0, 0, 0.3])
    avg = average_generator([(0.25, conjugate_generator(deph, u)) for u in (np.eye(2), X, Y, Z)])
    assert np.allclose(avg.gks, np.diag([0, 0, 0.3]))
    cliff = twirl_generator(deph, depolarizing_set(2))
    assert np.allclose(cliff.gks, 0.1 * np.eye(3))
    with pytest.raises(ValidationError):
        average_generator([(0.5, z)])


def test_average_preserves_positivity():
    rng = np.random.default_rng(78)
    terms = [(p, random_generator(rng, 2)) for p in (0.2, 0.3, 0.5)]
    assert np.linalg.eigvalsh(average_generator(terms).gks).min() >= -1e-12


# Decoherence standard forms and closed forms


def test_pauli_level_keeps_diagonal():
    z = random_generator(np.random.default_rng(79), 1)
    out = decoherence_standard_form(z)
    assert np.allclose(out.gks, np.diag(np.diag(z.gks)))
    already = dephasing_generator([0.1, 0.2, 0.3])
    assert np.allclose(decoherence_standard_form(already).gks, already.gks)
    # Only the identity part of the Lamb shift survives.
    assert np.allclose(out.lamb_shift, np.trace(z.lamb_shift) / 2 * np.eye(2))


def test_depolarizing_level():
    gamma = 0.05
    z = dephasing_generator([gamma, 2 * gamma, 3 * gamma])
    out = decoherence_standard_form(z, "depolarizing")
    assert np.allclose(out.gks, 2 * gamma * np.eye(3))
    rho = random_density(np.random.default_rng(80), 2)
    p = depolarizing_decay(2 * gamma, 1.5)
    assert np.allclose(apply(evolve(out, 1.5), rho), p * rho + (1 - p) * np.eye(2) / 2, atol=1e-12)


def test_decoherence_form_rejects_hamiltonian():
    z = random_generator(np.random.default_rng(81), 1, h=Z)
    with pytest.raises(ValidationError):
        decoherence_standard_form(z)


def test_closed_form_at_zero_time():
    assert closed_form_pauli_channel(0.1, 0.2, 0.3, 0).weights == pytest.approx((1, 0, 0, 0))


def test_closed_form_depolarizing_decay():
    rate, t = 0.2, 0.9
    w = closed_form_pauli_channel(rate, rate, rate, t).weights
    p = np.exp(-8 * rate * t)
    assert np.allclose(w, [(1 + 3 * p) / 4] + [(1 - p) / 4] * 3)


@pytest.mark.parametrize("rates", [(0.1, 0.2, 0.3), (0.0, 0.0, 0.4), (1.2, 0.05, 0.7)])
def test_closed_form_matches_integration(rates):
    for t in (0.0, 0.37, 1.0, 2.5):
        exact = extract_pauli_channel(evolve(dephasing_generator(rates), t)).weights
        assert np.max(np.abs(np.array(closed_form_pauli_channel(*rates, t).weights) - exact)) < 1e-10
        assert sum(closed_form_pauli_channel(*rates, t).weights) == pytest.approx(1)


def test_closed_form_rejects_negative():
    with pytest.raises(ValidationError):
        closed_form_pauli_channel(-0.1, 0, 0, 1)


# Stroboscopic evolution


def test_single_segment_single_step_is_free_evolution():
    z = random_generator(np.random.default_rng(82), 1)
    sched = PulseSchedule(((1.0, np.eye(2)),), 1, 0.6)
    assert np.allclose(stroboscopic_evolve(z, sched).matrix, evolve(z, 0.6).matrix)


def test_schedule_validation():
    with pytest.raises(ValidationError):
        PulseSchedule(((0.5, np.eye(2)),), 1, 1.0)
    with pytest.raises(ValidationError):
        PulseSchedule(((1.0, np.eye(2)),), 0, 1.0)
    with pytest.raises(ValidationError):
        PulseSchedule(((1.0, np.array([[1, 1], [0, 1]])),), 1, 1.0)


def decoherence_errors(mode):
    rng = np.random.default_rng(83)
    z = random_generator(rng, 1, gks_scale=0.1, lamb_scale=0.3)
    t = 1.0
    exact = evolve(schedule_average(z, PulseSchedule.from_set(pauli_set(2), 1, t)), t)
    return [trace_distance(stroboscopic_evolve(z, PulseSchedule.from_set(pauli_set(2), m, t), mode), exact)
            for m in STEPS]


@pytest.mark.parametrize("mode", ["sequential", "random"])
def test_decoherence_stroboscopic_convergence(mode):
    errors = decoherence_errors(mode)
    assert errors[-1] < 1e-3
    assert log_slope(STEPS, errors) == pytest.approx(-1, abs=0.2)


def ising_generator(rng):
    return random_generator(rng, 2, h=0.5 * YY, gks_scale=1e-2, lamb_scale=1e-2)


def test_ising_stroboscopic_convergence_and_pattern():
    rng = np.random.default_rng(84)
    z = ising_generator(rng)
    t = 1.0
    form = ising_standard_form(z)
    exact = evolve(form.generator, t)
    errors = []
    for m in STEPS:
        out = stroboscopic_evolve(z, PulseSchedule.from_set(phase_gate_set(), m, t))
        errors.append(trace_distance(out, exact))
    assert log_slope(STEPS, errors) == pytest.approx(-1, abs=0.2)
    extract_phase_gate_form(out, form.effective_coupling * t, tol=1e-6)


def test_unknown_mode():
    z = random_generator(np.random.default_rng(85), 1)
    with pytest.raises(ValidationError):
        stroboscopic_evolve(z, PulseSchedule(((1.0, np.eye(2)),), 1, 1.0), "other")


# Ising standard form


def test_ising_trivial_case():
    z = LindbladGenerator(0.3 * YY, np.zeros((4, 4)), np.diag(np.linspace(0.01, 0.15, 15)))
    form = ising_standard_form(z)
    assert form.effective_coupling == pytest.approx(0.3) and form.time_cost == pytest.approx(1)


def test_ising_lamb_shift_components():
    rng = np.random.default_rng(86)
    z = ising_generator(rng)
    form = ising_standard_form(z)
    comps = {k: v for k, v in pauli_components(form.generator.lamb_shift).items() if abs(v) > 1e-12}
    assert set(comps) <= {(0, 0), (2, 2)}
    assert np.allclose(form.generator.hamiltonian, z.hamiltonian)
    g_shift = np.real(pauli_components(z.lamb_shift).get((2, 2), 0))
    assert form.effective_coupling == pytest.approx(0.5 + g_shift)
    assert form.time_cost == pytest.approx(0.5 / (0.5 + g_shift))


@pytest.mark.parametrize("t", [0.3, 1.0, 2.0])
def test_ising_evolution_is_phase_gate_form_and_twirl_fixed_point(t):
    form = ising_standard_form(ising_generator(np.random.default_rng(87)))
    e = evolve(form.generator, t)
    extract_phase_gate_form(e, form.effective_coupling * t, tol=1e-9)
    assert np.max(np.abs(twirl(e, phase_gate_set()).matrix - e.matrix)) < 1e-9


def test_ising_rejects_other_hamiltonians():
    with pytest.raises(ValidationError):
        ising_standard_form(random_generator(np.random.default_rng(88), 2, h=ZZ))
    z = LindbladGenerator(0.1 * YY, -0.2 * YY, np.zeros((15, 15)))
    with pytest.raises(ValidationError):
        ising_standard_form(z)


# Arbitrary-Hamiltonian chain


def test_axis_decomposition_maps_yy_to_zz():
    fwd = ising_axis_decomposition("forward")
    (_, v), = fwd.terms
    assert np.allclose(v @ YY @ v.conj().T, ZZ)
    assert np.allclose(v.conj().T @ ZZ @ v, YY)


def ising_chain_decompositions():
    return ising_axis_decomposition("forward"), ising_axis_decomposition("backward")


def test_chain_for_zz():
    fwd, bwd = ising_chain_decompositions()
    rng = np.random.default_rng(89)
    z = random_generator(rng, 2, h=ZZ, gks_scale=1e-2, lamb_scale=1e-2)
    res = arbitrary_h_chain(z, fwd, bwd)
    comps = pauli_components(res.generator.hamiltonian)
    assert abs(comps[(3, 3)] - 1) < 1e-12
    assert all(abs(v) < 1e-12 for k, v in comps.items() if k != (3, 3))
    assert independent_entries(res.generator.gks) <= 17
    assert chain_parameter_rank(fwd, bwd) <= 17
    assert res.time_cost == pytest.approx(res.forward_cost * res.lamb_cost * res.backward_cost, abs=1e-15)
    assert res.forward_cost * res.backward_cost <= 3
    assert np.linalg.eigvalsh(res.generator.gks).min() >= -1e-12


def test_chain_gks_is_conjugated_ising_pattern():
    fwd, bwd = ising_chain_decompositions()
    z = random_generator(np.random.default_rng(90), 2, h=ZZ, gks_scale=1e-2, lamb_scale=1e-2)
    res = arbitrary_h_chain(z, fwd, bwd)
    (_, v), = bwd.terms
    back = conjugate_generator(res.generator, v.conj().T)
    # In the sigma_y sigma_y frame the generator is invariant under the 32-element twirl.
    assert np.allclose(twirl_generator(back, phase_gate_set()).gks, back.gks, atol=1e-12)


def test_chain_with_trivial_decompositions_matches_ising_form():
    z = random_generator(np.random.default_rng(91), 2, h=YY, gks_scale=1e-2, lamb_scale=1e-2)
    trivial = ((1.0, np.eye(4)),)
    res = arbitrary_h_chain(z, SimulationDecomposition("forward", 1.0, trivial),
                            SimulationDecomposition("backward", 1.0, trivial))
    form = ising_standard_form(z)
    assert np.allclose(res.generator.gks, form.time_cost * form.generator.gks, atol=1e-15)
    assert res.time_cost == pytest.approx(form.time_cost)


def test_chain_rejects_bad_decomposition():
    z = random_generator(np.random.default_rng(92), 2, h=ZZ)
    trivial = SimulationDecomposition("forward", 1.0, ((1.0, np.eye(4)),))
    with pytest.raises(ValidationError):
        arbitrary_h_chain(z, trivial, trivial)


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_chain_census_for_random_noise(seed):
    fwd, bwd = ising_chain_decompositions()
    z = random_generator(np.random.default_rng(seed), 2, h=ZZ, gks_scale=1e-2, lamb_scale=1e-2)
    assert independent_entries(arbitrary_h_chain(z, fwd, bwd).generator.gks) <= 17


# Separable mixing


def test_separable_mixing_check():
    z = dephasing_generator([0.1, 0.2, 0.3])
    sep = dephasing_generator([0.2, 0.1, 0.0])
    assert separable_mixing_check(z, sep, 1.0).white
    assert separable_mixing_check(z, sep, 1.0).rate == pytest.approx(0.3)
    assert not separable_mixing_check(z, sep, 0.5).white
    with pytest.raises(ValidationError):
        separable_mixing_check(z, sep, -1)
