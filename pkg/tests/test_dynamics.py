import numpy as np
import pytest

from nonmarkov import dynamics, linalg, maps, states
from nonmarkov.dynamics import (
    DynamicalMap,
    GkslGenerator,
    PropagationError,
    divisibility_report,
    intermediate,
    model,
    propagate,
    rate_constant,
    rate_from_spec,
    rate_neg_tanh,
    rate_piecewise_linear,
    rate_sinusoid,
    reduce,
    time_grid,
)

SX, SY, SZ = dynamics.SIGMA_X, dynamics.SIGMA_Y, dynamics.SIGMA_Z


def pauli_eigenvalue(m: maps.QuantumMap, sigma) -> float:
    """lambda with m(sigma) = lambda * sigma for qubit Pauli maps."""
    out = m.apply(sigma)
    return float(np.trace(sigma @ out).real / 2)


class TestRateForms:
    def test_constant(self):
        assert rate_constant(2.5)(13.0) == 2.5
        assert rate_constant(2.5).constant

    def test_sinusoid(self):
        r = rate_sinusoid(2.0, 3.0, 0.5)
        assert r(1.2) == pytest.approx(2.0 * np.sin(3.0 * 1.2 + 0.5))

    def test_neg_tanh(self):
        assert rate_neg_tanh()(0.7) == pytest.approx(-np.tanh(0.7))

    def test_piecewise_linear(self):
        r = rate_piecewise_linear([(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)])
        assert r(0.5) == pytest.approx(1.0)
        assert r(1.5) == pytest.approx(1.0)
        assert r(5.0) == pytest.approx(0.0)

    def test_from_spec(self):
        assert rate_from_spec(1.5)(0.0) == 1.5
        r = rate_from_spec({"form": "sinusoid", "a": 1.0, "omega": 1.0})
        assert r(np.pi / 2) == pytest.approx(1.0)


class TestGenerator:
    def test_trace_annihilating_on_basis(self, rng):
        gen = model("pauli", {"gamma1": 0.3, "gamma2": 0.7, "gamma3": 0.1})
        l = gen.superop(0.0)
        for i in range(2):
            for j in range(2):
                e = np.zeros((2, 2), dtype=complex)
                e[i, j] = 1.0
                out = maps.unvec(l @ maps.vec(e), 2)
                assert abs(np.trace(out)) < 1e-10

    def test_nonfinite_rate_raises(self):
        gen = GkslGenerator(
            dim=2,
            h_eff=np.zeros((2, 2)),
            jumps=[SZ],
            rates=[lambda t: np.inf],
        )
        with pytest.raises(PropagationError):
            gen.superop(0.0)


class TestPropagate:
    def test_zero_generator_identity(self):
        gen = GkslGenerator(2, np.zeros((2, 2)), [], [])
        dm = propagate(gen, time_grid(1.0, 5))
        for m in dm.maps:
            assert np.abs(m.superop - np.eye(4)).max() < 1e-12

    def test_pure_hamiltonian_isospectral(self):
        gen = GkslGenerator(2, SZ, [], [])
        dm = propagate(gen, time_grid(2.0, 9))
        ref = np.sort(np.linalg.eigvalsh(maps.choi(dm.maps[0])))
        for m in dm.maps[1:]:
            w = np.sort(np.linalg.eigvalsh(maps.choi(m)))
            assert np.abs(w - ref).max() < 1e-9

    def test_amplitude_damping_population_decay(self):
        gamma = 1.3
        dm = propagate(model("amplitude_damping", {"gamma": gamma}), time_grid(1.0, 11))
        rho = states.basis_state(2, 1).matrix  # excited
        for t, m in zip(dm.grid, dm.maps):
            pop = m.apply(rho)[1, 1].real
            assert abs(pop - np.exp(-gamma * t)) < 1e-7

    def test_maps_are_cptp(self):
        dm = propagate(model("eternal"), time_grid(3.0, 31))
        for m in dm.maps:
            rep = maps.is_cptp(m)
            assert rep["cp"] and rep["tp"]

    def test_trace_preservation_budget(self):
        dm = propagate(
            model("dephasing", {"gamma": {"form": "sinusoid", "a": 1.0, "omega": 1.0}}),
            time_grid(4.0, 41),
        )
        for m in dm.maps:
            assert maps.is_cptp(m)["tp_residual"] < 1e-8

    def test_semigroup_property(self):
        gen = model("amplitude_damping", {"gamma": 0.8})
        dm = propagate(gen, np.array([0.0, 0.4, 0.6, 1.0]))
        lhs = maps.compose(dm.maps[1], dm.maps[2]).superop  # 0.4 then 0.6
        assert np.abs(lhs - dm.maps[3].superop).max() < 1e-7

    def test_eternal_closed_form_eigenvalues(self):
        dm = propagate(model("eternal"), time_grid(3.0, 25))
        for t, m in zip(dm.grid, dm.maps):
            l1 = pauli_eigenvalue(m, SX)
            l2 = pauli_eigenvalue(m, SY)
            l3 = pauli_eigenvalue(m, SZ)
            assert abs(l1 - np.exp(-t) * np.cosh(t)) < 1e-7
            assert abs(l2 - np.exp(-t) * np.cosh(t)) < 1e-7
            assert abs(l3 - np.exp(-2 * t)) < 1e-7

    def test_dephasing_closed_form(self):
        # single decoherence rate: off-diagonal factor exp(-Gamma), Gamma = 1 - cos t
        dm = propagate(
            model("dephasing", {"gamma": {"form": "sinusoid", "a": 1.0, "omega": 1.0}}),
            time_grid(4.0, 17),
        )
        for t, m in zip(dm.grid, dm.maps):
            lam = pauli_eigenvalue(m, SX)
            assert abs(lam - np.exp(-(1 - np.cos(t)))) < 1e-7

    def test_amplitude_damping_fixed_point(self):
        dm = propagate(model("amplitude_damping", {"gamma": 1.0}), np.array([0.0, 20.0]))
        rho = states.maximally_mixed(2).matrix
        out = dm.maps[-1].apply(rho)
        assert np.abs(out - np.diag([1.0, 0.0])).max() < 1e-6

    def test_grid_must_start_at_zero(self):
        with pytest.raises(ValueError):
            propagate(model("eternal"), np.array([0.5, 1.0]))


class TestReduce:
    def test_decoupled_hamiltonian_is_unitary_family(self):
        h = np.kron(SZ, np.eye(2))
        tm = dynamics.TotalSystemModel(2, 2, h, states.maximally_mixed(2))
        dm = reduce(tm, time_grid(1.0, 5))
        for t, m in zip(dm.grid, dm.maps):
            u = maps.unitary_map(np.cos(t) * np.eye(2) - 1j * np.sin(t) * SZ)
            assert np.abs(m.superop - u.superop).max() < 1e-9

    def test_identity_at_zero(self):
        dm = reduce(model("jaynes_cummings_toy"), time_grid(1.0, 3))
        assert np.abs(dm.maps[0].superop - np.eye(4)).max() < 1e-12

    def test_exchange_model_periodic_and_cptp(self):
        dm = reduce(model("jaynes_cummings_toy", {"g": 1.0}), time_grid(2 * np.pi, 9))
        for m in dm.maps:
            rep = maps.is_cptp(m)
            assert rep["cp"] and rep["tp"]
        # period 2*pi/g for the excitation exchange
        assert np.abs(dm.maps[-1].superop - np.eye(4)).max() < 1e-8

    def test_dimension_overflow(self):
        h = np.zeros((128, 128))
        tm = dynamics.TotalSystemModel(16, 8, h, states.maximally_mixed(8))
        with pytest.raises(ValueError):
            reduce(tm, time_grid(1.0, 3))


class TestIntermediate:
    def test_same_index_identity(self):
        dm = propagate(model("eternal"), time_grid(1.0, 5))
        v = intermediate(dm, 2, 2)
        assert np.abs(v.superop - np.eye(4)).max() < 1e-12

    def test_unitary_family(self):
        gen = GkslGenerator(2, SX, [], [])
        dm = propagate(gen, time_grid(1.0, 5))
        v = intermediate(dm, 3, 1)
        rep = maps.is_cptp(v)
        assert rep["cp"] and rep["tp"]

    def test_composition_residual(self):
        dm = propagate(model("eternal"), time_grid(2.0, 9))
        for j in (1, 4, 7):
            v = intermediate(dm, j, j - 1)
            recomposed = maps.compose(v, dm.maps[j - 1])
            assert np.abs(recomposed.superop - dm.maps[j].superop).max() < 1e-7
            assert maps.is_cptp(v)["tp_residual"] < 1e-8

    def test_order_check(self):
        dm = propagate(model("eternal"), time_grid(1.0, 3))
        with pytest.raises(ValueError):
            intermediate(dm, 0, 1)


class TestDivisibilityReport:
    def test_amplitude_damping_cp_divisible(self):
        dm = propagate(model("amplitude_damping", {"gamma": 1.0}), time_grid(2.0, 21))
        rep = divisibility_report(dm, ks=[1, 2], restarts=16, seed=3)
        assert rep.verdicts[2] == "k-divisible on grid"
        assert rep.verdicts[1] == "k-divisible on grid"
        for s in rep.steps:
            assert s.certificates[2].min_value >= -1e-8

    def test_eternal_k1_clean_k2_negative(self):
        dm = propagate(model("eternal"), time_grid(2.0, 21))
        rep = divisibility_report(dm, ks=[1, 2], restarts=16, seed=4)
        assert rep.verdicts[1] == "k-divisible on grid"
        assert rep.verdicts[2] == "not k-divisible on grid"
        # every step after t=0 carries a genuine negative certificate
        for s in rep.steps[1:]:
            assert s.certificates[2].certified_negative
            assert s.certificates[2].min_value < -1e-6

    def test_unitary_family_all_k(self):
        gen = GkslGenerator(2, SZ, [], [])
        dm = propagate(gen, time_grid(1.0, 6))
        rep = divisibility_report(dm, ks=[1, 2], restarts=8, seed=5)
        assert all(v == "k-divisible on grid" for v in rep.verdicts.values())

    def test_eternal_p_divisibility_rate_criterion(self):
        # pairwise rate sums stay nonnegative for t >= 0
        for t in np.linspace(0, 5, 50):
            g = [1.0, 1.0, -np.tanh(t)]
            for i in range(3):
                for j in range(i + 1, 3):
                    assert g[i] + g[j] >= 0

    def test_eternal_intermediate_pauli_ratios(self):
        dm = propagate(model("eternal"), time_grid(3.0, 31))
        for j in range(len(dm) - 1):
            v = intermediate(dm, j + 1, j)
            for sigma in (SX, SY, SZ):
                ratio = pauli_eigenvalue(v, sigma)
                assert 0 < ratio <= 1 + 1e-12

    def test_jsonable(self):
        dm = propagate(model("eternal"), time_grid(1.0, 4))
        rep = divisibility_report(dm, ks=[2], restarts=4, seed=6)
        doc = rep.to_jsonable()
        assert doc["verdicts"]["2"] == "not k-divisible on grid"
        assert len(doc["steps"]) == 3


class TestModelLibrary:
    def test_unknown_model(self):
        with pytest.raises(ValueError):
            model("elephant")

    def test_unknown_params(self):
        with pytest.raises(ValueError):
            model("eternal", {"gamma": 2.0})

    def test_amplitude_damping_needs_positive_rate(self):
        with pytest.raises(ValueError):
            model("amplitude_damping", {"gamma": -1.0})
