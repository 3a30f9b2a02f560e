import math

import numpy as np
import pytest

from agqc.compiler import (
    Schedule,
    ScheduleStep,
    compile_layered,
    compile_one_step,
    compile_reordered_fixed,
    compile_reordered_strip,
    compile_stepwise,
    delta1_gap,
    step_gap_analytic,
)
from agqc.gflow import find_gflow, zigzag_gflow_family
from agqc.graph import generate_chain, generate_cnot_graph, generate_zigzag
from agqc.logical import chain_unitary, compare
from agqc.pauli import (
    PauliString,
    RotatedPauliOp,
    single,
    stabilizer_generator,
    stabilizer_set,
    to_matrix,
)
from agqc.sim import (
    SizeCapError,
    assemble,
    conserved_operator_check,
    evolve,
    leakage_experiment,
    mbqc_logical_unitary,
    mbqc_reference_run,
    spectral_scan,
    step_endpoint_matrices,
    _propagate_step,
)

from conftest import chain_gflow


def rop(p):
    return RotatedPauliOp.from_pauli(p)


# --- assembly ---------------------------------------------------------------


def test_assemble_endpoints_match_term_sums():
    g = generate_chain(4, [0.0] * 4)
    sched = compile_stepwise(g, chain_gflow(4))
    terms = stabilizer_set(g, chain_gflow(4))
    h0 = -sum(to_matrix(t) for t in terms.values())
    assert np.allclose(assemble(sched, 0, 0.0), h0, atol=1e-12)
    h1 = (
        -to_matrix(single(4, 0, "X"))
        - to_matrix(terms[1])
        - to_matrix(terms[2])
    )
    assert np.allclose(assemble(sched, 0, 1.0), h1, atol=1e-12)


def test_assemble_reorder_fixed_matches_kept_terms():
    # H(s) = -T1 - T2 - (1-s) T3 - s X3
    g = generate_chain(4, [0.0] * 4)
    sched, _ = compile_reordered_fixed(g, chain_gflow(4), [2, 0, 1])
    terms = stabilizer_set(g, chain_gflow(4))
    s = 0.3
    want = (
        -to_matrix(terms[0])
        - to_matrix(terms[1])
        - (1 - s) * to_matrix(terms[2])
        - s * to_matrix(single(4, 2, "X"))
    )
    assert np.allclose(assemble(sched, 0, s), want, atol=1e-12)


def test_assemble_respects_gamma():
    g = generate_chain(3, [0.0] * 3)
    a = assemble(compile_stepwise(g, chain_gflow(3), gamma=2.5), 0, 0.4)
    b = assemble(compile_stepwise(g, chain_gflow(3), gamma=1.0), 0, 0.4)
    assert np.allclose(a, 2.5 * b)


def test_assemble_hermitian_random_angles(rng):
    angles = [0.0] + [float(rng.uniform(0, 2 * math.pi)) for _ in range(3)] + [0.0]
    g = generate_chain(5, angles)
    sched = compile_stepwise(g, chain_gflow(5))
    for s in (0.0, 0.37, 1.0):
        h = assemble(sched, 1, s)
        assert np.abs(h - h.conj().T).max() < 1e-12


def test_size_cap_enforced():
    g = generate_zigzag(8)  # 16 qubits
    sched = compile_layered(g, zigzag_gflow_family(8, 8))
    with pytest.raises(SizeCapError):
        assemble(sched, 0, 0.0)


# --- spectra ----------------------------------------------------------------


def test_spectral_scan_matches_analytic_gap():
    g = generate_chain(5, [0.0, 0.8, 2.4, 1.1, 0.0])
    sched = compile_stepwise(g, chain_gflow(5))
    grid = [i / 10 for i in range(11)]
    for k in range(len(sched.steps)):
        scan = spectral_scan(sched, k, grid)
        for i, s in enumerate(grid):
            want = step_gap_analytic(sched.steps[k], 1.0, s)
            assert abs(scan.gap[i] - want) < 1e-9
        assert all(d == 2 for d in scan.ground_degeneracy)


def test_spectral_scan_ladder_spacing_independent_of_u():
    # eigenvalues -|U| g eta, -(|U|-2) g eta, ... for the layered step
    g = generate_zigzag(3)
    sched = compile_layered(g, zigzag_gflow_family(3, 3))
    s = 0.3
    eta = math.hypot(1 - s, s)
    evals = np.linalg.eigvalsh(assemble(sched, 0, s))
    distinct = np.unique(np.round(evals, 9))
    assert np.allclose(distinct, [-3 * eta, -eta, eta, 3 * eta], atol=1e-9)
    scan = spectral_scan(sched, 0, [s])
    assert scan.gap[0] == pytest.approx(2 * eta, abs=1e-9)


def test_spectral_scan_cnot_in_order_degeneracy_four():
    g = generate_cnot_graph()
    sched = compile_stepwise(g, find_gflow(g))
    for k in (0, 3):
        scan = spectral_scan(sched, k, [0.0, 0.5, 1.0])
        assert all(d == 4 for d in scan.ground_degeneracy)  # 2^{|I|}


def test_spectral_scan_reorder_degeneracy_doubles():
    g = generate_chain(4, [0.0] * 4)
    sched, _ = compile_reordered_fixed(g, chain_gflow(4), [2, 0, 1])
    scan = spectral_scan(sched, 0, [0.0, 0.5, 1.0])
    assert scan.ground_degeneracy == (2, 2, 4)
    assert scan.gap[-1] == pytest.approx(0.0, abs=1e-9)
    assert scan.gap_above_degenerate[-1] > 0.5


def test_spectral_scan_delta1_cross_check():
    # untwisted chain with X^theta introduced on the second site
    g = generate_chain(4, [0.0] * 4)
    gf = chain_gflow(4)
    terms = stabilizer_set(g, gf)
    theta = 1.0471975511965976  # pi/3
    intro = RotatedPauliOp.from_parts(single(4, 1, "X"), {1: theta})
    step = ScheduleStep({1: terms[1]}, {1: intro}, (terms[0], terms[2]))
    sched = Schedule((step,), 1.0, g, gf)
    for s in (0.0, 0.25, 0.5, 0.75, 1.0):
        scan = spectral_scan(sched, 0, [s])
        assert scan.gap[0] == pytest.approx(delta1_gap(theta, s), abs=1e-9)


# --- evolution --------------------------------------------------------------


def test_evolve_constant_hamiltonian_is_identity():
    # removed == introduced: H(s) constant, so the logical map is identity
    g = generate_chain(3, [0.0, 0.6, 0.0])
    gf = chain_gflow(3)
    base = compile_stepwise(g, gf)
    terms = stabilizer_set(g, gf)
    step = ScheduleStep({0: terms[0]}, {0: terms[0]}, base.steps[0].static_terms)
    sched = Schedule((step,), 1.0, g, gf)
    # the "final" Hamiltonian equals H0, whose reference frame is the input frame
    from agqc.logical import initial_frame
    from agqc.sim import logical_basis_from_ops

    res = evolve(sched, 37.0)
    assert res.leakage < 1e-10
    basis0 = logical_basis_from_ops(
        list(step.static_terms) + [terms[0]], initial_frame(g, gf), 3
    )
    overlap = basis0.conj().T @ res.final_states
    assert compare(overlap, np.eye(2)) < 1e-9


def test_evolve_norm_preserved_and_energy_conserved(rng):
    g = generate_chain(4, [0.0, 1.2, 0.4, 0.0])
    sched = compile_stepwise(g, chain_gflow(4))
    a, b = step_endpoint_matrices(sched, 1)
    psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi /= np.linalg.norm(psi)
    h_fixed = a + 0.42 * b
    out = _propagate_step(h_fixed, np.zeros_like(h_fixed), psi, 50.0, 0.25)
    assert abs(np.linalg.norm(out) - 1.0) < 1e-10
    e0 = np.vdot(psi, h_fixed @ psi).real
    e1 = np.vdot(out, h_fixed @ out).real
    assert abs(e0 - e1) < 1e-10


def test_integrator_fourth_order(rng):
    g = generate_chain(4, [0.0, 0.9, 2.1, 0.0])
    a, b = step_endpoint_matrices(compile_stepwise(g, chain_gflow(4)), 1)
    psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi /= np.linalg.norm(psi)
    ref = _propagate_step(a, b, psi, 5.0, 0.002)
    e1 = np.linalg.norm(_propagate_step(a, b, psi, 5.0, 0.4) - ref)
    e2 = np.linalg.norm(_propagate_step(a, b, psi, 5.0, 0.2) - ref)
    assert e1 / e2 > 10.0  # ~16 for a 4th-order scheme


def test_evolve_chain_matches_prediction_any_angle():
    theta = 1.234
    g = generate_chain(3, [0.0, theta, 0.0])
    sched = compile_stepwise(g, chain_gflow(3))
    res = evolve(sched, 120.0)
    assert res.leakage < 1e-4
    assert compare(res.logical_unitary, chain_unitary([0.0, theta])) < 1e-3


def test_evolve_tau_list_per_step():
    g = generate_chain(3, [0.0, 0.3, 0.0])
    sched = compile_stepwise(g, chain_gflow(3))
    res = evolve(sched, [60.0, 80.0])
    assert res.tau_used == (60.0, 80.0)


def test_evolve_with_initial_state():
    g = generate_chain(3, [0.0, 0.0, 0.0])
    sched = compile_stepwise(g, chain_gflow(3))
    res = evolve(sched, 80.0, initial=np.array([1.0, 0.0]))
    assert res.final_states.shape == (8, 1)


def test_evolve_rejects_bad_tau():
    g = generate_chain(3, [0.0] * 3)
    sched = compile_stepwise(g, chain_gflow(3))
    with pytest.raises(ValueError):
        evolve(sched, -1.0)
    with pytest.raises(ValueError):
        evolve(sched, [10.0])


# --- conserved operators ----------------------------------------------------


def test_conserved_t1t3_in_reordered_step():
    g = generate_chain(4, [0.0] * 4)
    sched, _ = compile_reordered_fixed(g, chain_gflow(4), [2, 0, 1])
    t1t3 = rop(stabilizer_generator(g, 1).mul(stabilizer_generator(g, 3)))
    first = conserved_operator_check(sched, 0, [t1t3])[0]
    assert first.symbolic and first.conserved
    second = conserved_operator_check(sched, 1, [t1t3])[0]
    assert not second.symbolic and not second.conserved
    assert second.max_commutator_norm > 1.0


def test_conserved_identity_trivially():
    g = generate_chain(4, [0.0] * 4)
    sched = compile_stepwise(g, chain_gflow(4))
    ident = rop(PauliString(4))
    assert conserved_operator_check(sched, 0, [ident])[0].conserved


# --- leakage ----------------------------------------------------------------


def test_leakage_decreases_in_order():
    g = generate_chain(4, [0.0, 0.9, 0.3, 0.0])
    sched = compile_stepwise(g, chain_gflow(4))
    rows = leakage_experiment(sched, [15.0, 150.0])
    assert rows[0][1] > rows[1][1]
    assert rows[1][1] < 1e-3
    for tau, leak, fid in rows:
        assert fid == pytest.approx(1.0 - leak)


def test_leakage_plateau_for_unprotected_reordering():
    g = generate_chain(4, [0.0] * 4)
    sched, _ = compile_reordered_fixed(g, chain_gflow(4), [2, 0, 1])
    rows = leakage_experiment(sched, [30.0, 300.0])
    assert all(leak > 0.05 for _, leak, _ in rows)


def test_leakage_vanishes_for_strip_reordering():
    g = generate_chain(4, [0.0] * 4)
    sched = compile_reordered_strip(g, chain_gflow(4), [2, 0, 1])
    rows = leakage_experiment(sched, [150.0])
    assert rows[0][1] < 1e-3


# --- MBQC reference ---------------------------------------------------------


def test_mbqc_two_qubit_rule_both_outcomes():
    theta = 0.9
    g = generate_chain(2, [theta, 0.0])
    phi = np.array([0.6, 0.8j])
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    uz = np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    want = h @ uz @ phi
    for oc in ([0], [1]):
        run = mbqc_reference_run(g, chain_gflow(2), phi, oc)
        phase = np.exp(1j * np.angle(np.vdot(want, run.output_state)))
        assert np.abs(run.output_state - phase * want).max() < 1e-10


def test_mbqc_outcome_independent(rng):
    g = generate_chain(4, [0.0, 1.1, 2.2, 0.0])
    inp = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    inp /= np.linalg.norm(inp)
    base = mbqc_reference_run(g, chain_gflow(4), inp, "zeros")
    for bits in range(8):
        run = mbqc_reference_run(g, chain_gflow(4), inp, [bits >> i & 1 for i in range(3)])
        assert abs(np.vdot(base.output_state, run.output_state)) > 1 - 1e-10


def test_mbqc_random_outcomes_seeded():
    g = generate_chain(4, [0.0, 0.5, 0.25, 0.0])
    a = mbqc_reference_run(g, chain_gflow(4), np.array([1.0, 0.0]), "random", seed=7)
    b = mbqc_reference_run(g, chain_gflow(4), np.array([1.0, 0.0]), "random", seed=7)
    assert a.outcomes == b.outcomes
    assert np.allclose(a.output_state, b.output_state)


def test_mbqc_matches_chain_prediction(rng):
    angles = [0.0, float(rng.uniform(0, 2 * math.pi)), float(rng.uniform(0, 2 * math.pi)), 0.0]
    g = generate_chain(4, angles)
    u = mbqc_logical_unitary(g, chain_gflow(4))
    assert compare(u, chain_unitary(angles[:3])) < 1e-10


def test_mbqc_cnot_graph_realizes_x_controlled_not():
    # the 6-qubit two-row graph implements CNOT conjugated by H on the first
    # (control) wire, deterministically
    g = generate_cnot_graph()
    gf = find_gflow(g)
    u = mbqc_logical_unitary(g, gf)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    dressed = np.kron(h, np.eye(2)) @ cnot @ np.kron(h, np.eye(2))
    assert compare(u, dressed) < 1e-10


def test_mbqc_nontrivial_gflow_family_deterministic(rng):
    g = generate_zigzag(3)
    gf = zigzag_gflow_family(3, 2)
    inp = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    inp /= np.linalg.norm(inp)
    base = mbqc_reference_run(g, gf, inp, "zeros")
    for bits in range(8):
        run = mbqc_reference_run(g, gf, inp, [bits >> i & 1 for i in range(3)])
        assert abs(np.vdot(base.output_state, run.output_state)) > 1 - 1e-10


def test_mbqc_input_dimension_check():
    g = generate_chain(3, [0.0] * 3)
    with pytest.raises(ValueError):
        mbqc_reference_run(g, chain_gflow(3), np.array([1.0, 0.0, 0.0]))


def test_more_outputs_than_inputs_supported():
    # one input, two outputs: evolution reports leakage but no square unitary
    from agqc.gflow import Gflow
    from agqc.graph import make_graph

    g = make_graph(3, [(0, 1), (1, 2)], [0], [1, 2], {0: 0.0})
    gf = Gflow({0: frozenset({1})}, {0: 0})
    sched = compile_stepwise(g, gf)
    res = evolve(sched, 60.0)
    assert res.logical_unitary is None
    assert res.leakage < 1e-4
    run = mbqc_reference_run(g, gf, np.array([1.0, 0.0]))
    assert run.output_state.shape == (4,)


# --- model equivalence ------------------------------------------------------


def test_agqc_equals_mbqc_random_angles(rng):
    for n in (3, 4):
        angles = [0.0] + [float(rng.uniform(0, 2 * math.pi)) for _ in range(n - 2)] + [0.0]
        g = generate_chain(n, angles)
        gf = chain_gflow(n)
        u_mbqc = mbqc_logical_unitary(g, gf)
        res = evolve(compile_stepwise(g, gf), 100.0)
        assert compare(res.overlap_matrix, u_mbqc) < 1e-3
        assert compare(res.logical_unitary, u_mbqc) < 1e-6


def test_one_step_equals_stepwise_on_cnot():
    g = generate_cnot_graph()
    gf = find_gflow(g)
    res_sw = evolve(compile_stepwise(g, gf), 60.0)
    res_os = evolve(compile_one_step(g, gf), 240.0)
    assert compare(res_os.logical_unitary, res_sw.logical_unitary) < 1e-3
