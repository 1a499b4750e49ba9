import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclassical.channels import Dephase, Identity, apply, sigma_x_observable
from qclassical.errors import SingularTimeError
from qclassical.linalg import (
    SIGMA_Z,
    DensityMatrix,
    bloch_vector,
    ket,
    projector,
    state_from_bloch,
    trace_distance,
)
from qclassical.models import (
    DephasingModelParams,
    LorentzianDephasingProcess,
    QuadratureScheme,
    dephasing_separation_instance,
    bloch_ode_state,
    build_counterexample,
    dephased_trajectory_exact,
    dephased_trajectory_limits,
    dephasing_liouvillian,
    dephasing_reduced_state,
    dephasing_semigroup_process,
    ncgd_prediction,
    quadrature_oracle,
    trajectory_table,
    write_trajectory_csv,
)
from qclassical.process import InterventionSequence, TimeGrid, markov_from_dilation


def plus_state():
    return DensityMatrix(state_from_bloch(1.0, 0.0, 0.0))


class TestParams:
    def test_rate(self):
        assert DephasingModelParams(g=2.0, gamma=0.25, t=1.0, s=0.5).rate == 0.5

    def test_rejects_bad_times(self):
        with pytest.raises(ValueError):
            DephasingModelParams(s=2.0, t=1.0)

    def test_rejects_bad_coupling(self):
        with pytest.raises(ValueError):
            DephasingModelParams(g=0.0)

    def test_rejects_large_x0(self):
        with pytest.raises(ValueError):
            DephasingModelParams(x0=1.5)


class TestQuadratureScheme:
    def test_minimum_node_count(self):
        with pytest.raises(ValueError):
            QuadratureScheme(node_count=32)

    @pytest.mark.parametrize("nodes", [64, 500, 2000])
    def test_weight_normalization(self, nodes):
        scheme = QuadratureScheme(node_count=nodes)
        for gamma in (0.5, 1.0, 2.5):
            assert abs(scheme.wavefunction_norm(gamma) - 1.0) < 1e-12

    def test_overlap_matches_characteristic_decay(self):
        # Shifted-wavefunction overlap equals the exponential of the shift
        # difference; the rule must reproduce it without knowing it.
        scheme = QuadratureScheme(node_count=256)
        for gamma in (0.7, 1.0):
            for a, b in ((0.0, 0.0), (1.2, -0.4), (-0.3, 2.0), (3.0, -3.0)):
                got = scheme.overlap(np.array([a]), np.array([b]), gamma)[0]
                assert abs(got - np.exp(-gamma * abs(a - b))) < 1e-10


class TestReducedState:
    def test_zero_time_is_identity(self, rng):
        from qclassical.random import random_density_matrix

        rho0 = random_density_matrix(2, rng)
        params = DephasingModelParams(t=0.0, s=0.0)
        out = dephasing_reduced_state(params, rho0)
        assert np.allclose(out.matrix, rho0.matrix, atol=1e-14)

    def test_long_time_limit(self, rng):
        from qclassical.random import random_density_matrix

        rho0 = random_density_matrix(2, rng)
        params = DephasingModelParams(t=800.0, s=0.0)
        out = dephasing_reduced_state(params, rho0)
        expected = 0.5 * rho0.matrix + 0.5 * SIGMA_Z @ rho0.matrix @ SIGMA_Z
        assert np.allclose(out.matrix, expected, atol=1e-12)

    def test_bloch_action(self):
        params = DephasingModelParams(t=0.7, s=0.0)
        out = dephasing_reduced_state(
            params, DensityMatrix(state_from_bloch(0.4, -0.3, 0.5))
        )
        decay = np.exp(-0.7)
        assert np.allclose(
            bloch_vector(out.matrix), (0.4 * decay, -0.3 * decay, 0.5), atol=1e-12
        )

    @pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
    def test_quadrature_agreement(self, t, rng):
        from qclassical.random import random_density_matrix

        rho0 = random_density_matrix(2, rng)
        params = DephasingModelParams(t=t, s=0.0)
        closed = dephasing_reduced_state(params, rho0)
        oracle = quadrature_oracle(params, rho0, intervene=False)
        assert trace_distance(closed, oracle) < 1e-6

    def test_liouvillian_path_agreement(self, rng):
        from qclassical.random import random_density_matrix

        for t in (0.5, 2.0, 5.0):
            rho0 = random_density_matrix(2, rng)
            params = DephasingModelParams(t=t, s=0.0)
            ode = bloch_ode_state(params, rho0)
            closed = dephasing_reduced_state(params, rho0)
            assert trace_distance(ode, closed) < 1e-9

    def test_liouvillian_generates_bloch_decay(self):
        gen = dephasing_liouvillian(1.0)
        from scipy.linalg import expm

        prop = expm(gen * 0.9)
        from qclassical.channels import Superoperator

        out = apply(Superoperator(prop), state_from_bloch(1.0, 0.0, 0.0))
        assert abs(bloch_vector(out)[0] - np.exp(-0.9)) < 1e-12


class TestTrajectoryClosedForm:
    def test_reference_point(self):
        params = DephasingModelParams(g=1, gamma=1, x0=1, s=1, t=3)
        assert abs(
            dephased_trajectory_exact(params) - 0.5 * (np.exp(-1) + np.exp(-3))
        ) < 1e-12

    def test_dephasing_at_start_gives_plain_decay(self):
        for t in (0.5, 1.0, 4.0):
            params = DephasingModelParams(s=0.0, t=t)
            assert abs(dephased_trajectory_exact(params) - np.exp(-t)) < 1e-12

    def test_prediction_gap_at_reference(self):
        params = DephasingModelParams(g=1, gamma=1, x0=1, s=1, t=3)
        gap = dephased_trajectory_exact(params) - ncgd_prediction(params)
        assert abs(gap - 0.5 * (np.exp(-1) - np.exp(-3))) < 1e-12
        assert abs(gap - 0.159) < 1e-3

    def test_singular_point_raises(self):
        with pytest.raises(SingularTimeError):
            dephased_trajectory_exact(DephasingModelParams(s=1.0, t=2.0))

    def test_one_sided_limits_are_finite_and_coincide(self):
        # The sign term is undefined at t = 2s, but both branch limits
        # evaluate to the same finite value: a kink, not a jump.
        params = DephasingModelParams(s=1.0, t=2.0)
        left, right = dephased_trajectory_limits(params)
        expected = 0.5 * (1.0 + np.exp(-2.0))
        assert abs(left - expected) < 1e-12
        assert abs(right - expected) < 1e-12

    @pytest.mark.parametrize("side", [-1.0, 1.0])
    def test_limits_match_formula_approach(self, side):
        limit = dephased_trajectory_limits(DephasingModelParams(s=1.0, t=2.0))[0]
        for eps in (1e-3, 1e-5, 1e-7):
            params = DephasingModelParams(s=1.0, t=2.0 + side * eps)
            assert abs(dephased_trajectory_exact(params) - limit) < 3 * eps


class TestNcgdPrediction:
    def test_zero_time(self):
        assert ncgd_prediction(DephasingModelParams(x0=0.8, t=0.0, s=0.0)) == 0.8

    def test_reference_value(self):
        params = DephasingModelParams(g=1, gamma=1, x0=1, s=1, t=1)
        assert abs(ncgd_prediction(params) - np.exp(-1)) < 1e-12

    def test_independent_of_dephasing_time(self):
        # Finite-difference derivative in s is identically zero.
        values = [
            ncgd_prediction(DephasingModelParams(s=s, t=4.0)) for s in (0.5, 1.0, 2.0)
        ]
        assert max(values) - min(values) == 0.0


class TestQuadratureOracle:
    def test_matches_closed_form_after_singularity(self, rng):
        params = DephasingModelParams(g=1, gamma=1, x0=1, s=1, t=3)
        out = quadrature_oracle(params, plus_state(), intervene=True)
        assert abs(bloch_vector(out.matrix)[0] - dephased_trajectory_exact(params)) < 1e-6

    def test_matches_closed_form_before_singularity(self):
        # t < 2s branch: the evidence for trusting the sign term.
        params = DephasingModelParams(g=1, gamma=1, x0=1, s=1, t=1.5)
        out = quadrature_oracle(params, plus_state(), intervene=True)
        assert abs(bloch_vector(out.matrix)[0] - dephased_trajectory_exact(params)) < 1e-6

    def test_free_evolution_matches_prediction(self):
        params = DephasingModelParams(g=1, gamma=1, x0=1, s=1, t=3)
        out = quadrature_oracle(params, plus_state(), intervene=False)
        assert abs(bloch_vector(out.matrix)[0] - ncgd_prediction(params)) < 1e-6

    def test_node_doubling_stability(self):
        for (gamma, s, t) in ((1.0, 1.0, 3.0), (0.5, 0.4, 2.0), (2.0, 0.2, 1.1)):
            params = DephasingModelParams(gamma=gamma, s=s, t=t)
            coarse = quadrature_oracle(
                params, plus_state(), True, QuadratureScheme(node_count=2000)
            )
            fine = quadrature_oracle(
                params, plus_state(), True, QuadratureScheme(node_count=4000)
            )
            assert trace_distance(coarse, fine) < 1e-8

    def test_zero_coupling_limit(self, rng):
        from qclassical.random import random_density_matrix

        rho0 = random_density_matrix(2, rng)
        params = DephasingModelParams(g=1e-12, gamma=1.0, s=1.0, t=3.0)
        out = quadrature_oracle(params, rho0, intervene=True)
        from qclassical.channels import dephasing_channel

        dephased = apply(dephasing_channel(sigma_x_observable()), rho0.matrix)
        assert trace_distance(out.matrix, dephased) < 1e-10


@given(
    st.floats(0.2, 2.0),
    st.floats(0.1, 2.0),
    st.floats(0.05, 4.0),
)
@settings(max_examples=40, deadline=None)
def test_closed_form_equals_branch_simplification(rate, s, dt):
    # The hyperbolic closed form with its sign term reduces on both sides of
    # the singular point to x0/2 (exp(-rate |t-2s|) + exp(-rate t)).
    t = 2.0 * s + (dt if dt > 0.1 else -min(dt, 1.9 * s))
    if t < s or t == 2.0 * s:
        return
    params = DephasingModelParams(g=rate, gamma=1.0, x0=0.7, s=s, t=t)
    simplified = 0.35 * (np.exp(-rate * abs(t - 2 * s)) + np.exp(-rate * t))
    assert abs(dephased_trajectory_exact(params) - simplified) < 1e-10


class TestLorentzianProcess:
    def test_identity_sequence_reproduces_free_decay(self):
        process = LorentzianDephasingProcess(
            g=1.0,
            gamma=1.0,
            initial_s=plus_state(),
            times=TimeGrid((0.0, 1.0, 3.0)),
            scheme=QuadratureScheme(node_count=256),
        )
        seq = InterventionSequence(Identity(), (Identity(), Identity()))
        out = process.evaluate(seq)
        assert abs(out.norm - 1.0) < 1e-10
        assert abs(bloch_vector(out.matrix)[0] - np.exp(-3.0)) < 1e-10

    def test_mid_dephasing_matches_oracle(self):
        process = LorentzianDephasingProcess(
            g=1.0,
            gamma=1.0,
            initial_s=plus_state(),
            times=TimeGrid((0.0, 1.0, 3.0)),
        )
        obs = sigma_x_observable()
        seq = InterventionSequence(Identity(), (Dephase(obs), Identity()))
        out = process.evaluate(seq)
        params = DephasingModelParams(s=1.0, t=3.0)
        assert abs(
            bloch_vector(out.matrix)[0] - dephased_trajectory_exact(params)
        ) < 1e-10

    def test_derived_family_bloch_action(self):
        inst = dephasing_separation_instance()
        lam = inst.process.reduced_propagator(1)
        for x, y, z in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            out = apply(lam, state_from_bloch(x, y, z))
            decay = np.exp(-1.0)
            assert np.allclose(
                bloch_vector(out),
                (x * decay, y * decay, z),
                atol=1e-9,
            )

    def test_derived_markov_disagrees_after_intervention(self):
        # The map family reproduces free evolution but not the dephased
        # branch: the gap is half the transverse-expectation separation.
        inst = dephasing_separation_instance()
        derived = markov_from_dilation(inst.process)
        obs = sigma_x_observable()
        prep = inst.preparations.preparations[2]  # the transverse pure state
        seq = InterventionSequence(prep, (Dephase(obs), Identity(), Identity()))
        exact = inst.process.evaluate(seq).matrix
        approx = derived.evaluate(seq).matrix
        params = DephasingModelParams(s=1.0, t=3.0)
        gap = 0.5 * (dephased_trajectory_exact(params) - ncgd_prediction(params))
        assert abs(trace_distance(exact, approx) - gap) < 1e-9

    def test_semigroup_equals_derived_family(self):
        inst = dephasing_separation_instance()
        derived = markov_from_dilation(inst.process)
        semigroup = dephasing_semigroup_process(1.0, inst.process.times)
        for a, b in zip(derived.maps, semigroup.maps):
            assert np.max(np.abs(a.matrix - b.matrix)) < 1e-9


class TestCounterexampleBuilders:
    def test_index_error(self):
        with pytest.raises(IndexError):
            build_counterexample(4)

    def test_first_probabilities(self):
        from qclassical.process import joint_probability

        ce = build_counterexample(1)
        prep = ce.preparations.preparation
        assert abs(
            joint_probability(ce.process, prep, [(1, 0), (2, 0), (3, 0)]) - 0.125
        ) < 1e-12
        assert abs(joint_probability(ce.process, prep, [(1, 0), (3, 0)])) < 1e-12

    def test_second_erase_map(self):
        from qclassical.channels import invert
        from qclassical.errors import NotInvertibleError

        ce = build_counterexample(2)
        with pytest.raises(NotInvertibleError):
            invert(ce.process.maps[0])

    def test_third_swap_outputs(self):
        ce = build_counterexample(3)
        psi0 = np.kron((ket(0, 2) + ket(1, 2)) / np.sqrt(2), ket(0, 2))
        from qclassical.channels import CPMap, reset_channel

        prep = CPMap(reset_channel(projector(psi0)))
        obs = ce.observable
        no_deph = ce.process.evaluate(
            InterventionSequence(prep, (Identity(), Dephase(obs)))
        ).matrix
        both = ce.process.evaluate(
            InterventionSequence(prep, (Dephase(obs), Dephase(obs)))
        ).matrix
        psi1 = np.kron(ket(0, 2), (ket(0, 2) + ket(1, 2)) / np.sqrt(2))
        mixture = 0.5 * (
            projector(np.kron(ket(0, 2), ket(0, 2)))
            + projector(np.kron(ket(0, 2), ket(1, 2)))
        )
        assert np.max(np.abs(no_deph - projector(psi1))) < 1e-12
        assert np.max(np.abs(both - mixture)) < 1e-12

    def test_expected_verdict_keys(self):
        assert set(build_counterexample(1).expected) == {"classical", "incoherent"}
        assert set(build_counterexample(2).expected) == {
            "classical", "incoherent", "invertible", "markov",
        }


class TestTrajectoryTable:
    def test_columns_and_endpoints(self):
        table = trajectory_table(t_max=5.0, dt=0.01)
        assert table.shape == (501, 3)
        assert table[0, 0] == 0.0 and abs(table[-1, 0] - 5.0) < 1e-12
        assert table[0, 1] == 1.0 and table[0, 2] == 1.0

    def test_reference_row(self):
        table = trajectory_table(t_max=5.0, dt=0.01)
        row = table[300]
        assert abs(row[0] - 3.0) < 1e-12
        assert abs(row[1] - 0.5 * (np.exp(-1) + np.exp(-3))) < 1e-12
        assert abs(row[2] - np.exp(-3)) < 1e-12

    def test_singular_row_uses_limit(self):
        table = trajectory_table(t_max=5.0, dt=0.01)
        row = table[200]
        assert abs(row[1] - 0.5 * (1 + np.exp(-2.0))) < 1e-12

    def test_pre_dephasing_rows_decay(self):
        table = trajectory_table(t_max=5.0, dt=0.01)
        row = table[50]
        assert abs(row[1] - np.exp(-0.5)) < 1e-12
        assert abs(row[1] - row[2]) < 1e-12

    def test_csv_format(self, tmp_path):
        table = trajectory_table(t_max=0.05, dt=0.01)
        path = tmp_path / "out.csv"
        write_trajectory_csv(path, table)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x_exact,x_ncgd"
        assert len(lines) == 7
        for line in lines[1:]:
            for fieldvalue in line.split(","):
                assert "e" not in fieldvalue  # positional decimals only
                assert float(fieldvalue) is not None
        # full double precision round trip
        t, xe, xn = lines[3].split(",")
        assert float(xe) == table[2, 1]
