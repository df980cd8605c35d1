import numpy as np
import pytest

from nonmarkov import discrimination as disc
from nonmarkov import linalg, maps, states
from nonmarkov.maps import depolarizing, identity_map, replacer, transposition_map, unitary_map
from nonmarkov.states import StateEnsemble, basis_state, pure_state, random_density

KET0 = basis_state(2, 0)
KET1 = basis_state(2, 1)
PLUS = pure_state(np.array([1.0, 1.0]))


def trine_ensemble():
    vecs = []
    for k in range(3):
        th = 2 * np.pi * k / 3
        vecs.append(np.array([np.cos(th / 2), np.sin(th / 2)], dtype=complex))
    return StateEnsemble(np.full(3, 1 / 3), [pure_state(v) for v in vecs])


class TestHelstrom:
    def test_orthogonal(self):
        assert disc.helstrom_guess(0.5, KET0, KET1) == pytest.approx(1.0, abs=1e-12)

    def test_identical(self):
        rho = random_density(2, 2, 1)
        assert disc.helstrom_guess(0.3, rho, rho) == pytest.approx(0.7, abs=1e-12)

    def test_zero_plus_pair(self):
        expect = 0.5 * (1 + 1 / np.sqrt(2))
        assert disc.helstrom_guess(0.5, KET0, PLUS) == pytest.approx(expect, abs=1e-10)
        assert expect == pytest.approx(0.85355, abs=1e-5)


class TestPGuess:
    def test_orthogonal_pair(self):
        ens = StateEnsemble(np.array([0.5, 0.5]), [KET0, KET1])
        assert disc.p_guess(ens).value == pytest.approx(1.0, abs=1e-7)

    def test_matches_helstrom(self):
        for seed in range(5):
            r1 = random_density(2, 2, seed)
            r2 = random_density(2, 1, seed + 100)
            p1 = 0.25 + 0.5 * (seed / 5)
            ens = StateEnsemble(np.array([p1, 1 - p1]), [r1, r2])
            res = disc.p_guess(ens)
            assert res.value == pytest.approx(disc.helstrom_guess(p1, r1, r2), abs=1e-7)

    def test_trine(self):
        res = disc.p_guess(trine_ensemble())
        assert res.value == pytest.approx(2 / 3, abs=1e-6)

    def test_povm_feasible_and_achieving(self):
        res = disc.p_guess(trine_ensemble())
        total = sum(res.povm.elements)
        assert np.abs(total - np.eye(2)).max() < 1e-8
        for e in res.povm.elements:
            assert linalg.min_eig(e) >= -1e-9
        assert abs(res.value - res.sdp_value) < 1e-7

    def test_single_state_rejected(self):
        with pytest.raises(ValueError):
            disc.p_guess(StateEnsemble(np.array([1.0]), [KET0]))

    def test_monotone_under_positive_tp_preprocessing(self):
        ens = trine_ensemble()
        base = disc.p_guess(ens).value
        for seed in (4, 5):
            phi = maps.random_cptp(2, 2, seed)
            for pre in (phi, maps.compose(transposition_map(2), phi)):
                mapped = StateEnsemble(
                    ens.probs,
                    [states.DensityOperator(pre.apply(s.matrix)) for s in ens.states],
                )
                assert disc.p_guess(mapped).value <= base + 1e-7


class TestPGuessChannels:
    def test_identical_channels(self):
        m = maps.random_cptp(2, 2, 7)
        val = disc.p_guess_channels([0.4, 0.6], [m, m], k=1, restarts=4, seed=1)
        assert val == pytest.approx(0.6, abs=1e-6)

    def test_orthogonal_replacers(self):
        e1 = replacer(KET0.matrix)
        e2 = replacer(KET1.matrix)
        val = disc.p_guess_channels([0.5, 0.5], [e1, e2], k=1, restarts=4, seed=2)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_identity_vs_full_depolarizing(self):
        # entangled input achieves (1 + (1/2)(3/2))/2 = 0.875
        val = disc.p_guess_channels(
            [0.5, 0.5], [identity_map(2), depolarizing(1.0, 2)], k=2, restarts=8, seed=3
        )
        assert val == pytest.approx(0.875, abs=1e-5)

    def test_chain_in_k(self):
        e1 = maps.random_cptp(2, 2, 11)
        e2 = maps.random_cptp(2, 3, 12)
        vals = [
            disc.p_guess_channels([0.5, 0.5], [e1, e2], k=k, restarts=8, seed=4)
            for k in (1, 2)
        ]
        assert vals[0] <= vals[1] + 1e-6


class TestChannelDistance:
    def test_identical_channels_scalar(self):
        m = maps.random_cptp(2, 2, 13)
        for p in (0.2, 0.5, 0.8):
            val = disc.channel_distance(m, m, p, k=1, restarts=4, seed=5)
            assert val == pytest.approx(abs(1 - 2 * p), abs=1e-8)

    def test_identity_vs_depolarizing(self):
        for q in (0.3, 1.0):
            val = disc.channel_distance(
                identity_map(2), depolarizing(q, 2), 0.5, k=2, restarts=8, seed=6
            )
            assert val == pytest.approx(0.5 * 1.5 * q, abs=1e-6)

    def test_chain_in_k(self):
        e1 = maps.random_cptp(2, 2, 14)
        e2 = maps.random_cptp(2, 2, 15)
        vals = [
            disc.channel_distance(e1, e2, 0.4, k=k, restarts=8, seed=7) for k in (1, 2)
        ]
        assert vals[0] <= vals[1] + 1e-6

    def test_k_equals_d_matches_diamond(self):
        e1 = maps.random_cptp(2, 2, 16)
        e2 = maps.random_cptp(2, 2, 17)
        val = disc.channel_distance(e1, e2, 0.5, k=2, restarts=16, seed=8)
        dia = disc.diamond_norm(maps.weighted_difference(e1, e2, 0.5, 0.5))
        assert val == pytest.approx(dia, abs=1e-4)


class TestDiamondNorm:
    def test_cptp_is_one(self):
        for seed in (18, 19):
            m = maps.random_cptp(2, 2, seed)
            assert disc.diamond_norm(m) == pytest.approx(1.0, abs=1e-6)

    def test_identity_minus_depolarizing(self):
        for q in (0.1, 0.5, 1.0):
            m = maps.subtract(identity_map(2), depolarizing(q, 2))
            assert disc.diamond_norm(m) == pytest.approx(1.5 * q, abs=1e-5)

    def test_orthogonal_replacer_difference(self):
        m = maps.subtract(replacer(KET0.matrix), replacer(KET1.matrix))
        assert disc.diamond_norm(m) == pytest.approx(2.0, abs=1e-6)

    def test_homogeneity(self):
        m = maps.random_cptp(2, 2, 20)
        assert disc.diamond_norm(maps.scale_map(m, 2.0)) == pytest.approx(2.0, abs=1e-6)

    def test_difference_of_cptp_at_most_two(self):
        for seed in (21, 22):
            m = maps.subtract(maps.random_cptp(2, 2, seed), maps.random_cptp(2, 2, seed + 50))
            assert disc.diamond_norm(m) <= 2.0 + 1e-6

    def test_qutrit_identity_minus_depolarizing(self):
        # entangled-input oracle: eigenvalues q(1 - 1/9) once, -q/9 eight times
        q = 0.6
        m = maps.subtract(identity_map(3), depolarizing(q, 3))
        expect = q * (1 - 1 / 9) + 8 * q / 9
        assert disc.diamond_norm(m) == pytest.approx(expect, abs=1e-5)


class TestCbNorm:
    def test_unitary(self):
        u = states.random_unitary(2, 23)
        rep = disc.cb_norm_check(unitary_map(u), restarts=8, seed=9)
        assert rep["cb_value"] == pytest.approx(1.0, abs=1e-6)
        assert rep["residual"] <= 1e-3

    def test_random_cptp(self):
        m = maps.random_cptp(2, 2, 24)
        rep = disc.cb_norm_check(m, restarts=8, seed=10)
        assert rep["residual"] <= 1e-3

    def test_scaled_homogeneity(self):
        m = maps.random_cptp(2, 2, 25)
        rep = disc.cb_norm_check(maps.scale_map(m, 2.0), restarts=8, seed=11)
        assert rep["cb_value"] == pytest.approx(2.0, abs=1e-3)
        assert rep["diamond"] == pytest.approx(2.0, abs=1e-6)


class TestSquareNorm:
    def test_identity_operator(self):
        val = disc.square_norm(np.eye(4), dB=2, restarts=8, seed=12)
        assert val == pytest.approx(4.0, abs=1e-6)

    def test_zero(self):
        assert disc.square_norm(np.zeros((4, 4)), dB=2, restarts=2, seed=13) == 0.0

    def test_choi_identity_depolarizing(self):
        q = 0.7
        j = maps.choi(maps.subtract(identity_map(2), depolarizing(q, 2)))
        val = disc.square_norm(j, dB=2, restarts=50, seed=14)
        assert val == pytest.approx(3 * q, rel=1e-2)

    def test_choi_identity_for_random_maps(self):
        for seed in (26, 27):
            m = maps.subtract(maps.random_cptp(2, 2, seed), maps.random_cptp(2, 2, seed + 30))
            j = maps.choi(m)
            val = disc.square_norm(j, dB=2, restarts=50, seed=15)
            dia = disc.diamond_norm(m)
            assert val == pytest.approx(2 * dia, rel=1e-2)

    def test_monotone_iterates_are_lower_bounds(self):
        # few restarts never exceed many restarts beyond tolerance
        j = maps.choi(maps.subtract(identity_map(2), depolarizing(0.5, 2)))
        lo = disc.square_norm(j, dB=2, restarts=2, seed=16)
        hi = disc.square_norm(j, dB=2, restarts=40, seed=16)
        assert lo <= hi + 1e-9


class TestOperationalFidelity:
    def test_identical(self):
        m = maps.random_cptp(2, 2, 28)
        assert disc.operational_fidelity(m, m, restarts=2, seed=17) == pytest.approx(
            1.0, abs=1e-6
        )

    def test_orthogonal_replacers(self):
        val = disc.operational_fidelity(
            replacer(KET0.matrix), replacer(KET1.matrix), restarts=4, seed=18
        )
        assert val == pytest.approx(0.0, abs=1e-6)

    def test_phase_flip_half(self):
        # output fidelity is sqrt(1/2 + |<psi| I (x) Z |psi>|^2 / 2) >= 1/sqrt2,
        # attained at |+>-type inputs
        z = np.diag([1.0, -1.0]).astype(complex)
        flip = maps.mix([identity_map(2), unitary_map(z)], [0.5, 0.5])
        val = disc.operational_fidelity(identity_map(2), flip, restarts=6, seed=19)
        assert val == pytest.approx(1 / np.sqrt(2), abs=1e-4)
        # grid-search oracle over product inputs cannot beat the optimizer
        grid_best = 1.0
        for th in np.linspace(0, np.pi, 200):
            for ph in np.linspace(0, 2 * np.pi, 200):
                b = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
                overlap = abs(b.conj() @ (z @ b)) ** 2
                grid_best = min(grid_best, np.sqrt(0.5 + 0.5 * overlap))
        assert val <= grid_best + 1e-6

    def test_chain_against_diamond(self):
        for seed in (29, 30):
            e1 = maps.random_cptp(2, 2, seed)
            e2 = maps.random_cptp(2, 2, seed + 60)
            f = disc.operational_fidelity(e1, e2, restarts=6, seed=20)
            dia = disc.diamond_norm(maps.subtract(e1, e2))
            assert 1 - f <= 0.5 * dia + 1e-6
            assert 0.5 * dia <= np.sqrt(max(0.0, 1 - f * f)) + 1e-6

    def test_rejects_non_cptp(self):
        with pytest.raises(ValueError):
            disc.operational_fidelity(transposition_map(2), identity_map(2))
