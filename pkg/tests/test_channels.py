import numpy as np
import pytest
from scipy.linalg import expm

from qclassical.channels import (
    CPMap,
    Dephase,
    Identity,
    Observable,
    Outcome,
    Superoperator,
    apply,
    choi_matrix,
    compose,
    dephasing_channel,
    embed_left,
    identity_superop,
    intervention_matrix,
    invert,
    is_completely_positive,
    is_trace_preserving,
    kraus_channel,
    ordered_basis_matrix,
    projector_superop,
    reset_channel,
    sigma_x_observable,
    sigma_z_observable,
    unitary_channel,
    validate_superoperator,
)
from qclassical.errors import (
    DegenerateObservableError,
    DimensionError,
    NotInvertibleError,
    NotUnitaryError,
)
from qclassical.linalg import (
    SIGMA_Y,
    bloch_vector,
    ket,
    maximally_mixed,
    projector,
    state_from_bloch,
)
from qclassical.models import swap_gate
from qclassical.random import block_triangular_channel, haar_unitary, random_cptp, random_density_matrix

from oracles import projection_block_channel


class TestUnitaryChannel:
    def test_identity(self, rng):
        rho = random_density_matrix(2, rng).matrix
        out = apply(unitary_channel(np.eye(2)), rho)
        assert np.allclose(out, rho, atol=1e-14)

    def test_vectorization_contract(self, rng):
        # The column-stacking convention is a contract: apply must equal
        # conjugation for any unitary, entrywise.
        u = haar_unitary(3, rng)
        rho = random_density_matrix(3, rng).matrix
        assert np.allclose(
            apply(unitary_channel(u), rho), u @ rho @ u.conj().T, atol=1e-12
        )

    def test_quarter_turn_via_matrix_exponential(self):
        u = expm(-1j * (np.pi / 4.0) * SIGMA_Y)
        out = apply(unitary_channel(u), projector(ket(0, 2)))
        plus = (ket(0, 2) + ket(1, 2)) / np.sqrt(2.0)
        assert np.allclose(out, projector(plus), atol=1e-12)

    def test_swap_permutes_factors(self):
        swap = unitary_channel(swap_gate())
        for i in range(2):
            for j in range(2):
                state = projector(np.kron(ket(i, 2), ket(j, 2)))
                expected = projector(np.kron(ket(j, 2), ket(i, 2)))
                assert np.allclose(apply(swap, state), expected)

    def test_rejects_non_unitary(self):
        with pytest.raises(NotUnitaryError):
            unitary_channel(np.array([[1.0, 0.0], [0.0, 0.5]]))


class TestProjectorAndDephasing:
    def test_rank1_projection(self):
        obs = sigma_z_observable()
        rho = state_from_bloch(0.3, 0.4, 0.1)
        out = apply(projector_superop(obs, 0), rho)
        expected = rho[0, 0] * projector(ket(0, 2))
        assert np.allclose(out, expected, atol=1e-14)

    def test_projection_idempotent(self, rng):
        obs = sigma_z_observable()
        p = projector_superop(obs, 1)
        rho = random_density_matrix(2, rng).matrix
        once = apply(p, rho)
        assert np.allclose(apply(p, once), once, atol=1e-14)

    def test_outcome_index_range(self):
        with pytest.raises(IndexError):
            projector_superop(sigma_z_observable(), 2)
        with pytest.raises(IndexError):
            projector_superop(sigma_z_observable(), -1)

    def test_degenerate_projector_acts_locally(self, rng):
        # The embedded observable projects the left qubit only.
        obs = embed_left(sigma_z_observable(), 2)
        rho_b = random_density_matrix(2, rng).matrix
        state = np.kron(projector(ket(0, 2)), rho_b)
        out = apply(projector_superop(obs, 0), state)
        assert np.allclose(out, state, atol=1e-14)
        assert np.allclose(apply(projector_superop(obs, 1), state), 0.0, atol=1e-14)

    def test_sigma_z_dephasing_kills_xy(self):
        out = apply(dephasing_channel(sigma_z_observable()), state_from_bloch(0.3, -0.2, 0.5))
        assert np.allclose(bloch_vector(out), (0.0, 0.0, 0.5), atol=1e-14)

    def test_sigma_x_dephasing_keeps_x(self):
        out = apply(dephasing_channel(sigma_x_observable()), state_from_bloch(0.3, -0.2, 0.5))
        assert np.allclose(bloch_vector(out), (0.3, 0.0, 0.0), atol=1e-14)

    def test_dephasing_idempotent(self):
        d = dephasing_channel(sigma_x_observable())
        assert np.allclose(d.matrix @ d.matrix, d.matrix, atol=1e-14)

    def test_dephasing_is_sum_of_projections(self, rng):
        obs = sigma_z_observable()
        total = sum(projector_superop(obs, r).matrix for r in range(2))
        assert np.array_equal(dephasing_channel(obs).matrix, total)

    def test_projections_mutually_annihilate(self):
        obs = sigma_z_observable()
        p0 = projector_superop(obs, 0).matrix
        p1 = projector_superop(obs, 1).matrix
        assert np.allclose(p0 @ p1, 0.0, atol=1e-14)


class TestObservable:
    def test_rejects_non_projector(self):
        with pytest.raises(ValueError):
            Observable(((1.0, np.array([[0.5, 0.0], [0.0, 0.5]])),))

    def test_rejects_incomplete(self):
        with pytest.raises(ValueError):
            Observable(((1.0, projector(ket(0, 2))),))

    def test_degeneracy_flag(self):
        assert not sigma_z_observable().is_degenerate
        assert embed_left(sigma_z_observable(), 2).is_degenerate

    def test_embed_ranks(self):
        obs = embed_left(sigma_z_observable(), 2)
        assert [obs.rank(r) for r in range(2)] == [2, 2]


class TestComposeInvert:
    def test_compose_identity(self, rng):
        lam = random_cptp(2, rng)
        assert np.allclose(compose(lam, identity_superop(2)).matrix, lam.matrix)

    def test_compose_group_property(self, rng):
        u1, u2 = haar_unitary(2, rng), haar_unitary(2, rng)
        left = compose(unitary_channel(u2), unitary_channel(u1))
        right = unitary_channel(u2 @ u1)
        assert np.allclose(left.matrix, right.matrix, atol=1e-12)

    def test_compose_dimension_mismatch(self, rng):
        with pytest.raises(DimensionError):
            compose(random_cptp(2, rng), random_cptp(3, rng))

    def test_invert_unitary(self, rng):
        u = haar_unitary(2, rng)
        inv = invert(unitary_channel(u))
        assert np.allclose(inv.matrix, unitary_channel(u.conj().T).matrix, atol=1e-12)

    def test_invert_round_trip(self, rng):
        lam = block_triangular_channel(rng, dim=2)
        assert np.allclose(
            compose(invert(lam), lam).matrix, np.eye(4), atol=1e-8
        )

    def test_invert_depolarizing_raises(self):
        with pytest.raises(NotInvertibleError):
            invert(reset_channel(maximally_mixed(2).matrix))

    def test_invert_dephasing_raises(self):
        with pytest.raises(NotInvertibleError):
            invert(dephasing_channel(sigma_z_observable()))

    def test_inverse_of_tp_is_tp(self, rng):
        lam = block_triangular_channel(rng, dim=2)
        assert is_trace_preserving(invert(lam), atol=1e-8)


class TestChannelPhysicality:
    def test_random_cptp_is_cptp(self, rng):
        for _ in range(10):
            lam = random_cptp(2, rng)
            assert is_trace_preserving(lam)
            assert is_completely_positive(lam)
            rho = random_density_matrix(2, rng).matrix
            out = apply(lam, rho)
            assert abs(np.trace(out).real - 1.0) < 1e-10

    def test_choi_of_identity(self):
        choi = choi_matrix(identity_superop(2))
        bell = np.zeros(4, dtype=complex)
        bell[0], bell[3] = 1.0, 1.0
        assert np.allclose(choi, np.outer(bell, bell), atol=1e-14)

    def test_validate_rejects_false_claims(self):
        half = Superoperator(0.5 * np.eye(4, dtype=complex), cp=True, tp=True)
        with pytest.raises(ValueError):
            validate_superoperator(half)


class TestOrderedBasisMatrix:
    def test_identity_blocks(self):
        obs = sigma_z_observable()
        a, b, c, d = ordered_basis_matrix(identity_superop(2), obs, obs)
        assert np.allclose(a, np.eye(2), atol=1e-14)
        assert np.allclose(b, 0.0, atol=1e-14)
        assert np.allclose(c, 0.0, atol=1e-14)
        assert np.allclose(d, np.eye(2), atol=1e-14)

    def test_dephasing_blocks(self):
        obs = sigma_z_observable()
        a, b, c, d = ordered_basis_matrix(dephasing_channel(obs), obs, obs)
        assert np.allclose(a, np.eye(2), atol=1e-14)
        assert np.allclose(b, 0.0, atol=1e-14)
        assert np.allclose(c, 0.0, atol=1e-14)
        assert np.allclose(d, 0.0, atol=1e-14)

    @pytest.mark.parametrize("sampler", ["direct", "projection"])
    def test_block_shaped_channels(self, rng, sampler):
        obs = sigma_z_observable()
        for _ in range(5):
            if sampler == "direct":
                lam = block_triangular_channel(rng, dim=2)
            else:
                lam = projection_block_channel(rng, obs)
            a, b, _, _ = ordered_basis_matrix(lam, obs, obs)
            assert np.max(np.abs(b)) <= 1e-10
            assert np.all(a >= -1e-10)
            assert np.allclose(a.sum(axis=0), 1.0, atol=1e-10)

    def test_generic_channel_has_nonzero_block(self, rng):
        obs = sigma_z_observable()
        lam = random_cptp(2, rng)
        _, b, _, _ = ordered_basis_matrix(lam, obs, obs)
        assert np.max(np.abs(b)) > 1e-6

    def test_rejects_degenerate(self):
        obs = embed_left(sigma_z_observable(), 2)
        with pytest.raises(DegenerateObservableError):
            ordered_basis_matrix(identity_superop(4), obs, obs)

    def test_population_order_ascending_eigenvalue(self):
        # Eigenvalues (1, -1) sort the down state first; a channel that
        # resets to down must put all population weight in the first row.
        obs = sigma_z_observable()
        lam = reset_channel(projector(ket(1, 2)))
        a, _, _, _ = ordered_basis_matrix(lam, obs, obs)
        assert np.allclose(a, [[1.0, 1.0], [0.0, 0.0]], atol=1e-14)


class TestInterventionMatrix:
    def test_identity(self):
        assert np.array_equal(intervention_matrix(Identity(), 3), np.eye(9))

    def test_outcome_and_dephase_dimension_check(self):
        with pytest.raises(DimensionError):
            intervention_matrix(Outcome(sigma_z_observable(), 0), 3)
        with pytest.raises(DimensionError):
            intervention_matrix(Dephase(sigma_z_observable()), 3)

    def test_cpmap_passthrough(self, rng):
        lam = random_cptp(2, rng)
        assert np.array_equal(intervention_matrix(CPMap(lam), 2), lam.matrix)

    def test_kraus_channel_tp_validation(self):
        with pytest.raises(ValueError):
            kraus_channel([0.5 * np.eye(2)])
