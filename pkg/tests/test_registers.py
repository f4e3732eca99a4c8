"""Register algebra: indexing, operators, channels, metrics."""

import numpy as np
import pytest

from zkamp.registers import (
    DensityOperator,
    DiagonalOp,
    LayoutMismatchError,
    LinearOp,
    OpChain,
    PermutationOp,
    RegisterLayout,
    StateVector,
    apply,
    basis_state,
    dephase,
    embed_matrix,
    haar_random_unitary,
    measure,
    measurement_probabilities,
    partial_trace,
    project,
    random_state,
    trace_distance,
)

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def random_density(layout, seed):
    """PSD unit-trace matrix from a Ginibre square, the standard oracle."""
    rng = np.random.default_rng(seed)
    d = layout.total_dim
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = a @ a.conj().T
    return DensityOperator(layout, m / np.trace(m))


class TestRegisterLayout:
    def test_total_dim_is_product(self):
        layout = RegisterLayout([("W", 2), ("V", 2), ("A", 2), ("Y", 8), ("B", 2), ("Z", 6)])
        assert layout.total_dim == int(np.prod(layout.dims)) == 768

    @pytest.mark.parametrize(
        "regs",
        [
            [("A", 2), ("B", 3)],
            [("X", 3), ("Y", 1), ("Z", 4)],
            [("W", 2), ("V", 2), ("A", 2), ("Y", 8), ("B", 2), ("Z", 6)],
            [("P", 7), ("Q", 11), ("R", 13), ("S", 10)],
        ],
    )
    def test_flatten_unflatten_roundtrip(self, regs):
        layout = RegisterLayout(regs)
        for flat in range(layout.total_dim):
            assert layout.flatten(layout.unflatten(flat)) == flat

    def test_first_register_most_significant(self):
        layout = RegisterLayout([("A", 2), ("B", 3)])
        assert layout.flatten((1, 0)) == 3
        assert layout.unflatten(5) == (1, 2)

    def test_invalid_layouts_rejected(self):
        with pytest.raises(ValueError):
            RegisterLayout([("A", 2), ("A", 3)])
        with pytest.raises(ValueError):
            RegisterLayout([("A", 0)])

    def test_keep_preserves_order(self):
        layout = RegisterLayout([("W", 2), ("A", 3), ("B", 5)])
        assert layout.keep(["B", "W"]).names == ("W", "B")


class TestBasisState:
    def test_single_qubit(self):
        layout = RegisterLayout([("A", 2)])
        s = basis_state(layout, {"A": 0})
        np.testing.assert_allclose(s.amps, [1, 0])

    def test_two_registers(self):
        layout = RegisterLayout([("A", 2), ("B", 2)])
        s = basis_state(layout, {"A": 1, "B": 0})
        expected = np.zeros(4)
        expected[layout.flatten((1, 0))] = 1
        np.testing.assert_allclose(s.amps, expected)

    def test_protocol_sized_layout(self):
        layout = RegisterLayout([("W", 2), ("V", 2), ("A", 2), ("Y", 8), ("B", 2), ("Z", 6)])
        s = basis_state(layout, {name: 0 for name in layout.names})
        assert s.amps.shape == (768,)
        assert s.amps[0] == 1 and np.count_nonzero(s.amps) == 1

    def test_errors(self):
        layout = RegisterLayout([("A", 2)])
        with pytest.raises(KeyError):
            basis_state(layout, {"Q": 0})
        with pytest.raises(KeyError):
            basis_state(layout, {})
        with pytest.raises(ValueError):
            basis_state(layout, {"A": 2})


class TestApply:
    def test_identity(self):
        layout = RegisterLayout([("A", 2), ("B", 3)])
        op = LinearOp(layout, ("B",), np.eye(3), "unitary")
        s = basis_state(layout, {"A": 1, "B": 2})
        np.testing.assert_allclose(apply(op, s).amps, s.amps)

    def test_hadamard(self):
        layout = RegisterLayout([("A", 2)])
        op = LinearOp(layout, ("A",), H, "unitary")
        out = apply(op, basis_state(layout, {"A": 0}))
        np.testing.assert_allclose(out.amps, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_haar_roundtrip(self):
        layout = RegisterLayout([("Q", 8)])
        u = haar_random_unitary(8, seed=5)
        op = LinearOp(layout, ("Q",), u, "unitary")
        s = StateVector(layout, random_state(8, seed=6))
        back = apply(op, apply(op.adjoint(), s))
        assert np.linalg.norm(back.amps - s.amps) < 1e-12

    def test_unitary_preserves_norm(self):
        layout = RegisterLayout([("A", 2), ("B", 3), ("C", 2)])
        for seed in range(5):
            op = LinearOp(layout, ("A", "C"), haar_random_unitary(4, seed), "unitary")
            s = StateVector(layout, random_state(12, seed + 50))
            assert abs(apply(op, s).norm - 1) < 1e-12

    def test_layout_mismatch(self):
        layout = RegisterLayout([("A", 2)])
        other = RegisterLayout([("B", 2)])
        op = LinearOp(other, ("B",), H, "unitary")
        with pytest.raises(LayoutMismatchError):
            apply(op, basis_state(layout, {"A": 0}))

    def test_target_order_matches_layout_order(self):
        # Targets given out of order are canonicalized, so a CNOT built on
        # (control, target) = (A, B) acts identically however it is named.
        layout = RegisterLayout([("A", 2), ("B", 2)])
        cnot = np.eye(4)[[0, 1, 3, 2]]
        op = LinearOp(layout, ("A", "B"), cnot, "unitary")
        s = apply(op, basis_state(layout, {"A": 1, "B": 0}))
        np.testing.assert_allclose(s.amps, basis_state(layout, {"A": 1, "B": 1}).amps)


class TestProject:
    def test_half_probability(self):
        layout = RegisterLayout([("A", 2)])
        p0 = LinearOp(layout, ("A",), np.diag([1.0, 0.0]), "projector")
        plus = StateVector(layout, np.array([1, 1]) / np.sqrt(2))
        prob, collapsed = project(p0, plus)
        assert abs(prob - 0.5) < 1e-12
        np.testing.assert_allclose(collapsed.amps, [1, 0])

    def test_identity_projector(self):
        layout = RegisterLayout([("A", 2)])
        full = LinearOp(layout, ("A",), np.eye(2), "projector")
        s = StateVector(layout, random_state(2, 3))
        prob, collapsed = project(full, s)
        assert abs(prob - 1) < 1e-12
        np.testing.assert_allclose(collapsed.amps, s.amps)

    def test_empty_branch_marker(self):
        layout = RegisterLayout([("A", 2)])
        p1 = LinearOp(layout, ("A",), np.diag([0.0, 1.0]), "projector")
        prob, collapsed = project(p1, basis_state(layout, {"A": 0}))
        assert prob == 0.0 and collapsed is None

    def test_branch_probabilities_sum_to_one(self):
        layout = RegisterLayout([("A", 2), ("B", 3)])
        proj = LinearOp(layout, ("A",), np.diag([1.0, 0.0]), "projector")
        comp = LinearOp(layout, ("A",), np.diag([0.0, 1.0]), "projector")
        for seed in range(5):
            s = StateVector(layout, random_state(6, seed))
            p, _ = project(proj, s)
            q, _ = project(comp, s)
            assert abs(p + q - 1) < 1e-12

    def test_requires_projector(self):
        layout = RegisterLayout([("A", 2)])
        op = LinearOp(layout, ("A",), H, "unitary")
        with pytest.raises(ValueError):
            project(op, basis_state(layout, {"A": 0}))


class TestDephase:
    def test_diagonal_fixed_point(self):
        layout = RegisterLayout([("A", 3)])
        rho = DensityOperator(layout, np.diag([0.5, 0.3, 0.2]).astype(complex))
        np.testing.assert_allclose(dephase(rho, "A").matrix, rho.matrix, atol=1e-14)

    def test_plus_state_to_maximally_mixed(self):
        layout = RegisterLayout([("A", 2)])
        plus = StateVector(layout, np.array([1, 1]) / np.sqrt(2))
        out = dephase(plus.to_density_operator(), "A")
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-14)

    def test_idempotent_and_trace_preserving(self):
        layout = RegisterLayout([("A", 2), ("B", 3)])
        for seed in range(4):
            rho = random_density(layout, seed)
            once = dephase(rho, "B")
            twice = dephase(once, "B")
            np.testing.assert_allclose(once.matrix, twice.matrix, atol=1e-12)
            assert abs(np.trace(once.matrix) - 1) < 1e-12

    def test_unknown_register(self):
        layout = RegisterLayout([("A", 2)])
        with pytest.raises(KeyError):
            dephase(random_density(layout, 0), "Q")


class TestMeasure:
    def test_basis_state_is_certain(self):
        layout = RegisterLayout([("A", 2), ("B", 3)])
        s = basis_state(layout, {"A": 1, "B": 2})
        outcome, prob, collapsed = measure(s, "B", np.random.default_rng(0))
        assert outcome == 2 and abs(prob - 1) < 1e-12
        np.testing.assert_allclose(collapsed.amps, s.amps)

    def test_uniform_probability_vector(self):
        layout = RegisterLayout([("Z", 6)])
        s = StateVector(layout, np.ones(6) / np.sqrt(6))
        np.testing.assert_allclose(measurement_probabilities(s, "Z"), np.ones(6) / 6, atol=1e-12)

    def test_empirical_frequencies(self):
        layout = RegisterLayout([("A", 2)])
        s = StateVector(layout, np.array([0.5, np.sqrt(0.75)]))
        rng = np.random.default_rng(2024)
        hits = sum(measure(s, "A", rng)[0] for _ in range(10_000))
        assert abs(hits / 10_000 - 0.75) < 0.02

    def test_deterministic_per_seed(self):
        layout = RegisterLayout([("A", 2)])
        s = StateVector(layout, np.array([1, 1j]) / np.sqrt(2))
        a = [measure(s, "A", np.random.default_rng(7))[0] for _ in range(3)]
        b = [measure(s, "A", np.random.default_rng(7))[0] for _ in range(3)]
        assert a == b


class TestPartialTrace:
    def test_keep_everything(self):
        layout = RegisterLayout([("A", 2), ("B", 3)])
        rho = random_density(layout, 1)
        np.testing.assert_allclose(partial_trace(rho, ["A", "B"]).matrix, rho.matrix)

    def test_bell_pair_marginal(self):
        layout = RegisterLayout([("A", 2), ("B", 2)])
        bell = StateVector(layout, np.array([1, 0, 0, 1]) / np.sqrt(2))
        out = partial_trace(bell.to_density_operator(), ["A"])
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-14)

    def test_product_state_factor(self):
        la = RegisterLayout([("A", 2)])
        lb = RegisterLayout([("B", 3)])
        rho_a = random_density(la, 11)
        rho_b = random_density(lb, 12)
        joint = DensityOperator(
            RegisterLayout([("A", 2), ("B", 3)]), np.kron(rho_a.matrix, rho_b.matrix)
        )
        np.testing.assert_allclose(partial_trace(joint, ["A"]).matrix, rho_a.matrix, atol=1e-12)
        np.testing.assert_allclose(partial_trace(joint, ["B"]).matrix, rho_b.matrix, atol=1e-12)

    def test_measure_and_discard_equals_discard(self):
        layout = RegisterLayout([("A", 2), ("B", 2), ("C", 3)])
        for seed in range(3):
            rho = random_density(layout, seed + 30)
            lhs = partial_trace(dephase(rho, "B"), ["A", "C"])
            rhs = partial_trace(rho, ["A", "C"])
            np.testing.assert_allclose(lhs.matrix, rhs.matrix, atol=1e-12)

    def test_empty_keep_rejected(self):
        layout = RegisterLayout([("A", 2)])
        with pytest.raises(ValueError):
            partial_trace(random_density(layout, 0), [])


class TestTraceDistance:
    def test_identical(self):
        layout = RegisterLayout([("A", 3)])
        rho = random_density(layout, 4)
        assert trace_distance(rho, rho) == 0

    def test_orthogonal_pure_states(self):
        layout = RegisterLayout([("A", 2)])
        r0 = basis_state(layout, {"A": 0}).to_density_operator()
        r1 = basis_state(layout, {"A": 1}).to_density_operator()
        assert abs(trace_distance(r0, r1) - 1) < 1e-10

    def test_half_mixture(self):
        # Difference (rho - (rho+sigma)/2) = (rho - sigma)/2 has eigenvalues
        # +-1/2 for orthogonal pure rho, sigma, so the distance is 1/2.
        layout = RegisterLayout([("A", 2)])
        rho = basis_state(layout, {"A": 0}).to_density_operator()
        sigma = basis_state(layout, {"A": 1}).to_density_operator()
        mix = DensityOperator(layout, (rho.matrix + sigma.matrix) / 2)
        assert abs(trace_distance(mix, rho) - 0.5) < 1e-10

    def test_layout_mismatch(self):
        r1 = random_density(RegisterLayout([("A", 2)]), 0)
        r2 = random_density(RegisterLayout([("B", 2)]), 0)
        with pytest.raises(LayoutMismatchError):
            trace_distance(r1, r2)


class TestHaarRandomUnitary:
    def test_dim_one_is_a_phase(self):
        u = haar_random_unitary(1, seed=0)
        assert u.shape == (1, 1)
        assert abs(abs(u[0, 0]) - 1) < 1e-12

    def test_unitarity(self):
        u = haar_random_unitary(16, seed=1)
        assert np.max(np.abs(u.conj().T @ u - np.eye(16))) < 1e-10

    def test_seeds_give_distinct_operators(self):
        u1 = haar_random_unitary(8, seed=1)
        u2 = haar_random_unitary(8, seed=2)
        assert np.linalg.norm(u1 - u2, ord=2) > 1e-3

    def test_deterministic(self):
        np.testing.assert_array_equal(haar_random_unitary(4, 9), haar_random_unitary(4, 9))

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError):
            haar_random_unitary(0, seed=0)


class TestStructuredOps:
    def test_diagonal_matches_dense(self):
        layout = RegisterLayout([("A", 2), ("B", 3)])
        phases = np.exp(1j * np.linspace(0, 2, 3))
        op = DiagonalOp(layout, ("B",), phases)
        dense = LinearOp(layout, ("B",), np.diag(phases), "unitary")
        s = StateVector(layout, random_state(6, 17))
        np.testing.assert_allclose(apply(op, s).amps, apply(dense, s).amps, atol=1e-14)
        np.testing.assert_allclose(op.to_matrix(layout), dense.to_matrix(layout), atol=1e-14)

    def test_permutation_matches_dense(self):
        layout = RegisterLayout([("A", 2), ("B", 3)])
        image = np.array([2, 0, 1])
        op = PermutationOp(layout, ("B",), image)
        dense_mat = np.zeros((3, 3))
        dense_mat[image, np.arange(3)] = 1
        dense = LinearOp(layout, ("B",), dense_mat, "unitary")
        s = StateVector(layout, random_state(6, 18))
        np.testing.assert_allclose(apply(op, s).amps, apply(dense, s).amps, atol=1e-14)
        roundtrip = apply(op.adjoint(), apply(op, s))
        np.testing.assert_allclose(roundtrip.amps, s.amps, atol=1e-14)

    def test_chain_matches_matrix_product(self):
        layout = RegisterLayout([("A", 2), ("B", 2)])
        u1 = LinearOp(layout, ("A",), haar_random_unitary(2, 3), "unitary")
        u2 = LinearOp(layout, ("A", "B"), haar_random_unitary(4, 4), "unitary")
        chain = OpChain((u1, u2))
        s = StateVector(layout, random_state(4, 19))
        expected = u2.to_matrix(layout) @ u1.to_matrix(layout) @ s.amps
        np.testing.assert_allclose(chain.apply_to(layout, s.amps), expected, atol=1e-12)
        np.testing.assert_allclose(chain.to_matrix(layout), u2.to_matrix(layout) @ u1.to_matrix(layout))
        back = chain.adjoint().apply_to(layout, chain.apply_to(layout, s.amps))
        np.testing.assert_allclose(back, s.amps, atol=1e-12)

    def test_embed_matrix_against_kron(self):
        layout = RegisterLayout([("A", 2), ("B", 3), ("C", 2)])
        u = haar_random_unitary(3, 5)
        expected = np.kron(np.kron(np.eye(2), u), np.eye(2))
        np.testing.assert_allclose(embed_matrix(layout, ("B",), u), expected, atol=1e-14)

    def test_embed_matrix_non_adjacent_targets(self):
        layout = RegisterLayout([("A", 2), ("B", 3), ("C", 2)])
        u = haar_random_unitary(4, 6)
        op = LinearOp(layout, ("A", "C"), u, "unitary")
        dense = op.to_matrix(layout)
        s = StateVector(layout, random_state(12, 20))
        np.testing.assert_allclose(dense @ s.amps, apply(op, s).amps, atol=1e-12)


class TestValidation:
    def test_state_vector_must_be_normalized(self):
        layout = RegisterLayout([("A", 2)])
        with pytest.raises(ValueError):
            StateVector(layout, np.array([1.0, 1.0]))

    def test_density_operator_checks(self):
        layout = RegisterLayout([("A", 2)])
        with pytest.raises(ValueError):
            DensityOperator(layout, np.array([[1, 1], [0, 0]], dtype=complex))
        with pytest.raises(ValueError):
            DensityOperator(layout, np.eye(2, dtype=complex))

    def test_linear_op_kind_checks(self):
        layout = RegisterLayout([("A", 2)])
        with pytest.raises(ValueError):
            LinearOp(layout, ("A",), np.array([[1, 1], [0, 1]]), "unitary")
        with pytest.raises(ValueError):
            LinearOp(layout, ("A",), H, "projector")
        with pytest.raises(ValueError):
            LinearOp(layout, ("A",), np.eye(2), "hermitian")

    def test_immutability(self):
        layout = RegisterLayout([("A", 2)])
        s = basis_state(layout, {"A": 0})
        with pytest.raises(ValueError):
            s.amps[0] = 0.0
