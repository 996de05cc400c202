"""Tests for isofield.simulate.

Monte-Carlo checks use fixed seeds and 3-standard-error bands from the
jackknife estimator, so they are deterministic; the deterministic
truncated-covariance identities against the correlation module are the
sharp loop-closure checks and run at machine tolerance.
"""

import math

import numpy as np
import pytest

from isofield.correlation import (
    SpectralMeasure,
    VectorSpectralPair,
    scalar_corr,
    vector_corr,
)
from isofield.simulate import (
    FieldRealization,
    SimulationPlan,
    estimate_correlation,
    simulate_dyadic,
    simulate_scalar,
    simulate_vector,
    truncated_scalar_covariance,
    truncated_vector_covariance,
    unified_atoms,
    vector_expansion_covariance,
)


def scalar_measure():
    return SpectralMeasure(((0.8, 1.0), (1.7, 0.4)))


def vector_pair():
    return VectorSpectralPair(
        phi1=SpectralMeasure(((0.8, 0.6), (1.7, 0.4))),
        phi2=SpectralMeasure(((1.2, 0.5),)),
    )


class TestSimulationPlan:
    def test_rejects_bad_kind(self):
        with pytest.raises(ValueError):
            SimulationPlan(kind="tensor", spectral=scalar_measure(), points=((0, 0, 0),))

    def test_kind_spectral_pairing(self):
        with pytest.raises(ValueError):
            SimulationPlan(kind="scalar", spectral=vector_pair(), points=((0, 0, 0),))
        with pytest.raises(ValueError):
            SimulationPlan(kind="vector", spectral=scalar_measure(), points=((0, 0, 0),))
        with pytest.raises(ValueError):
            SimulationPlan(kind="dyadic", spectral=scalar_measure(), points=((0, 0, 0),))

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            SimulationPlan(
                kind="scalar", spectral=scalar_measure(), points=((0, 0, 0),), ell_max=-1
            )
        with pytest.raises(ValueError):
            SimulationPlan(
                kind="scalar", spectral=scalar_measure(), points=((0, 0, 0),), realizations=0
            )
        with pytest.raises(ValueError):
            SimulationPlan(kind="scalar", spectral=scalar_measure(), points=())

    def test_rejects_bad_points_and_seed(self):
        with pytest.raises(ValueError):
            SimulationPlan(kind="scalar", spectral=scalar_measure(), points=((0, 0),))
        with pytest.raises(ValueError):
            SimulationPlan(
                kind="scalar", spectral=scalar_measure(), points=((0, 0, math.inf),)
            )
        with pytest.raises(ValueError):
            SimulationPlan(
                kind="scalar", spectral=scalar_measure(), points=((0, 0, 0),), master_seed=-1
            )
        with pytest.raises(ValueError):
            SimulationPlan(
                kind="scalar",
                spectral=scalar_measure(),
                points=((0, 0, 0),),
                master_seed=2**64,
            )

    def test_point_array(self):
        plan = SimulationPlan(
            kind="scalar", spectral=scalar_measure(), points=((1, 2, 3), (4, 5, 6))
        )
        assert plan.point_array.shape == (2, 3)
        assert plan.point_array[1, 2] == 6.0


class TestFieldRealization:
    def plan(self):
        return SimulationPlan(
            kind="scalar", spectral=scalar_measure(), points=((0, 0, 0),), realizations=3
        )

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            FieldRealization(
                plan=self.plan(), values=np.zeros((2, 1, 1)), component_names=("T",)
            )
        with pytest.raises(ValueError):
            FieldRealization(
                plan=self.plan(), values=np.zeros((3, 1, 2)), component_names=("T",)
            )

    def test_finiteness_checked(self):
        vals = np.zeros((3, 1, 1))
        vals[1, 0, 0] = math.nan
        with pytest.raises(ValueError):
            FieldRealization(plan=self.plan(), values=vals, component_names=("T",))

    def test_values_read_only(self):
        real = FieldRealization(
            plan=self.plan(), values=np.zeros((3, 1, 1)), component_names=("T",)
        )
        with pytest.raises(ValueError):
            real.values[0, 0, 0] = 1.0


class TestScalarSimulation:
    def test_zero_wavenumber_atom_is_constant(self):
        plan = SimulationPlan(
            kind="scalar",
            spectral=SpectralMeasure(((0.0, 2.0),)),
            points=((0.0, 0.0, 0.0), (1.0, 2.0, -0.5), (0.0, 3.0, 0.0)),
            ell_max=6,
            realizations=4000,
            master_seed=11,
        )
        real = simulate_scalar(plan)
        spread = real.values.max(axis=1) - real.values.min(axis=1)
        assert np.max(np.abs(spread)) == 0.0
        var = real.values[:, 0, 0].var()
        # variance of the sample variance is 2 mass^2 / R
        band = 3.0 * 2.0 * math.sqrt(2.0 / plan.realizations)
        assert abs(var - 2.0) < band

    def test_covariance_matches_analytic(self):
        phi = scalar_measure()
        plan = SimulationPlan(
            kind="scalar",
            spectral=phi,
            points=((0.6, 0.0, 0.0), (-0.6, 0.3, 0.0)),
            ell_max=12,
            realizations=6000,
            master_seed=2024,
        )
        real = simulate_scalar(plan)
        est = estimate_correlation(real, [(0, 1), (0, 0)])
        r = float(np.linalg.norm(plan.point_array[0] - plan.point_array[1]))
        for k, want in enumerate((scalar_corr(r, phi), scalar_corr(0.0, phi))):
            z = abs(est.moments[k, 0, 0] - want) / est.standard_errors[k, 0, 0]
            assert z < 3.0

    def test_bit_identical_reruns(self):
        plan = SimulationPlan(
            kind="scalar",
            spectral=scalar_measure(),
            points=((0.3, 0.2, 0.1), (1.5, 0.0, 0.0)),
            ell_max=8,
            realizations=700,
            master_seed=42,
        )
        a = simulate_scalar(plan)
        b = simulate_scalar(plan)
        assert np.array_equal(a.values, b.values)

    def test_thread_count_does_not_change_values(self, monkeypatch):
        plan = SimulationPlan(
            kind="scalar",
            spectral=scalar_measure(),
            points=((0.3, 0.2, 0.1), (0.5, -0.7, 0.2)),
            ell_max=8,
            realizations=1400,
            master_seed=7,
        )
        monkeypatch.setenv("ISOFIELD_THREADS", "1")
        a = simulate_scalar(plan)
        monkeypatch.setenv("ISOFIELD_THREADS", "5")
        b = simulate_scalar(plan)
        assert np.array_equal(a.values, b.values)

    def test_seed_changes_values(self):
        base = dict(
            kind="scalar",
            spectral=scalar_measure(),
            points=((0.3, 0.2, 0.1),),
            ell_max=6,
            realizations=50,
        )
        a = simulate_scalar(SimulationPlan(master_seed=1, **base))
        b = simulate_scalar(SimulationPlan(master_seed=2, **base))
        assert not np.array_equal(a.values, b.values)

    def test_gaussian_marginal(self):
        plan = SimulationPlan(
            kind="scalar",
            spectral=scalar_measure(),
            points=((0.7, -0.1, 0.4),),
            ell_max=10,
            realizations=10_000,
            master_seed=314,
        )
        vals = simulate_scalar(plan).values[:, 0, 0]
        z = (vals - vals.mean()) / vals.std()
        n = vals.shape[0]
        skew = float(np.mean(z**3))
        kurt = float(np.mean(z**4))
        assert abs(skew) < 4.0 * math.sqrt(6.0 / n)
        assert abs(kurt - 3.0) < 4.0 * math.sqrt(24.0 / n)

    def test_empty_measure_gives_zero_field(self):
        plan = SimulationPlan(
            kind="scalar",
            spectral=SpectralMeasure(()),
            points=((0.0, 0.0, 0.0),),
            ell_max=2,
            realizations=5,
        )
        assert np.max(np.abs(simulate_scalar(plan).values)) == 0.0

    def test_kind_checked(self):
        plan = SimulationPlan(kind="vector", spectral=vector_pair(), points=((0, 0, 0),))
        with pytest.raises(ValueError):
            simulate_scalar(plan)

    def test_truncated_covariance_identity(self):
        phi = scalar_measure()
        x = np.array([0.5, -0.3, 0.2])
        y = np.array([-0.4, 0.1, 0.6])
        got = truncated_scalar_covariance(phi, x, y, 24)
        want = scalar_corr(float(np.linalg.norm(x - y)), phi)
        assert abs(got - want) < 1e-12

    def test_truncation_tail_declines(self):
        phi = SpectralMeasure(((2.0, 1.0),))
        x = np.array([2.5, 0.0, 0.0])
        y = np.array([0.0, 2.5, 0.0])
        want = scalar_corr(float(np.linalg.norm(x - y)), phi)
        errs = [
            abs(truncated_scalar_covariance(phi, x, y, L) - want) for L in (8, 12, 16)
        ]
        assert errs[0] > 1e-8
        assert errs[2] < 1e-6 * errs[0]
        assert errs[2] < 1e-12


class TestCoefficientCovariance:
    def test_monopole_block_diagonal(self):
        pair = VectorSpectralPair(
            phi1=SpectralMeasure(((1.0, 1.0),)), phi2=SpectralMeasure(())
        )
        ell_max = 3
        nlm = (ell_max + 1) ** 2
        cov = vector_expansion_covariance(pair, ell_max, 0)
        want = 4.0 * math.pi / 3.0
        for i in range(3):
            for j in range(3):
                got = cov[i * nlm, j * nlm]
                assert abs(got - (want if i == j else 0.0)) < 1e-12

    def test_selection_rules(self):
        pair = VectorSpectralPair(
            phi1=SpectralMeasure(((1.0, 1.0),)), phi2=SpectralMeasure(())
        )
        ell_max = 4
        nlm = (ell_max + 1) ** 2
        cov = vector_expansion_covariance(pair, ell_max, 0)
        block = cov[:3 * nlm, :3 * nlm].reshape(3, nlm, 3, nlm)

        def degree_slice(ell):
            return slice(ell * ell, (ell + 1) ** 2)

        # odd degree differences and differences beyond 2 vanish
        for ell, ellp in ((0, 1), (1, 2), (0, 3), (0, 4), (1, 4)):
            sub = block[:, degree_slice(ell), :, degree_slice(ellp)]
            assert np.max(np.abs(sub)) == 0.0
        # difference 2 is reachable through the degree-2 coupling
        sub = block[:, degree_slice(0), :, degree_slice(2)]
        assert np.max(np.abs(sub)) > 1e-3

    def test_full_matrix_psd_and_symmetric(self):
        cov = vector_expansion_covariance(vector_pair(), 4, 1)
        assert np.max(np.abs(cov - cov.T)) < 1e-12
        assert float(np.linalg.eigvalsh(cov).min()) >= -1e-9

    def test_atom_index_range(self):
        with pytest.raises(ValueError):
            vector_expansion_covariance(vector_pair(), 2, 3)

    def test_unified_atom_merge(self):
        atoms = unified_atoms(vector_pair())
        assert atoms == ((0.8, 0.6, 0.0), (1.2, 0.0, 0.5), (1.7, 0.4, 0.0))

    def test_truncated_covariance_identity(self):
        pair = vector_pair()
        x = np.array([0.5, -0.3, 0.2])
        y = np.array([-0.4, 0.1, 0.6])
        got = truncated_vector_covariance(pair, x, y, 20)
        want = vector_corr(x - y, pair)
        assert np.max(np.abs(got - want)) < 1e-12


class TestVectorSimulation:
    def test_covariance_matches_analytic(self):
        pair = vector_pair()
        plan = SimulationPlan(
            kind="vector",
            spectral=pair,
            points=((0.25, 0.0, 0.0), (-0.25, 0.0, 0.0)),
            ell_max=8,
            realizations=3000,
            master_seed=3,
        )
        real = simulate_vector(plan)
        est = estimate_correlation(real, [(0, 1)])
        want = vector_corr(np.array([0.5, 0.0, 0.0]), pair)
        z = np.abs(est.moments[0] - want) / est.standard_errors[0]
        assert np.max(z) < 3.0

    def test_potential_only_variance_is_isotropic(self):
        pair = VectorSpectralPair(
            phi1=SpectralMeasure(()), phi2=SpectralMeasure(((1.3, 0.9),))
        )
        plan = SimulationPlan(
            kind="vector",
            spectral=pair,
            points=((0.4, 0.2, -0.1),),
            ell_max=8,
            realizations=4000,
            master_seed=17,
        )
        real = simulate_vector(plan)
        est = estimate_correlation(real, [(0, 0)])
        want = vector_corr(np.zeros(3), pair)
        z = np.abs(est.moments[0] - want) / est.standard_errors[0]
        assert np.max(z) < 3.0
        assert np.max(np.abs(want - np.eye(3) * 0.3)) < 1e-15

    def test_statistical_rotation_invariance(self):
        pair = vector_pair()
        rng = np.random.default_rng(5)
        q, r = np.linalg.qr(rng.normal(size=(3, 3)))
        q = q * np.sign(np.diag(r))
        x = np.array([0.3, 0.1, -0.2])
        y = np.array([-0.2, 0.25, 0.1])
        plan = SimulationPlan(
            kind="vector",
            spectral=pair,
            points=(tuple(q @ x), tuple(q @ y)),
            ell_max=8,
            realizations=3000,
            master_seed=23,
        )
        est = estimate_correlation(simulate_vector(plan), [(0, 1)])
        want = vector_corr(q @ (x - y), pair)
        z = np.abs(est.moments[0] - want) / est.standard_errors[0]
        assert np.max(z) < 3.0

    def test_thread_count_does_not_change_values(self, monkeypatch):
        plan = SimulationPlan(
            kind="vector",
            spectral=vector_pair(),
            points=((0.3, 0.2, 0.1),),
            ell_max=5,
            realizations=1100,
            master_seed=29,
        )
        monkeypatch.setenv("ISOFIELD_THREADS", "1")
        a = simulate_vector(plan)
        monkeypatch.setenv("ISOFIELD_THREADS", "4")
        b = simulate_vector(plan)
        assert np.array_equal(a.values, b.values)

    def test_kind_checked(self):
        plan = SimulationPlan(kind="scalar", spectral=scalar_measure(), points=((0, 0, 0),))
        with pytest.raises(ValueError):
            simulate_vector(plan)


class TestDyadicSimulation:
    def plan(self, realizations=2000, seed=9):
        return SimulationPlan(
            kind="dyadic",
            spectral=vector_pair(),
            points=((0.2, 0.1, 0.0),),
            ell_max=6,
            realizations=realizations,
            master_seed=seed,
        )

    def test_zero_scale_is_constant_mean(self):
        real = simulate_dyadic(1.5, 0.0, vector_pair(), vector_pair(), self.plan(50))
        want = np.array([1.5, 0.0, 0.0, 1.5])
        assert np.max(np.abs(real.values - want)) == 0.0

    def test_mean_is_mu_identity(self):
        real = simulate_dyadic(1.5, 1.0, vector_pair(), vector_pair(), self.plan(4000))
        mean = real.values.mean(axis=(0, 1))
        se = real.values.std(axis=(0, 1)) / math.sqrt(real.values.shape[0])
        z = np.abs(mean - np.array([1.5, 0.0, 0.0, 1.5])) / se
        assert np.max(z) < 3.0

    def test_fluctuation_variance_is_product_of_variances(self):
        pair = vector_pair()
        real = simulate_dyadic(0.7, 1.0, pair, pair, self.plan(6000, seed=13))
        c11 = real.values[:, 0, 0] - 0.7
        var = float(np.mean(c11**2))
        per_comp = (pair.phi1.total_mass + pair.phi2.total_mass) / 3.0
        want = per_comp * per_comp
        # Var(a b) for independent centered factors; the square has
        # relative sampling error sqrt(8 / R)
        band = 3.0 * want * math.sqrt(8.0 / c11.shape[0])
        assert abs(var - want) < band

    def test_factors_are_independent(self):
        pair = vector_pair()
        plan = self.plan(5000, seed=31)
        real = simulate_dyadic(0.0, 1.0, pair, pair, plan)
        # E[C11 C22] = E[a1 b1 a2 b2] = E[a1 a2] E[b1 b2], which vanishes
        # at zero separation
        prod = real.values[:, 0, 0] * real.values[:, 0, 3]
        se = float(np.std(prod) / math.sqrt(prod.shape[0]))
        assert abs(float(np.mean(prod))) < 3.0 * se

    def test_kind_checked(self):
        plan = SimulationPlan(kind="vector", spectral=vector_pair(), points=((0, 0, 0),))
        with pytest.raises(ValueError):
            simulate_dyadic(1.0, 1.0, vector_pair(), vector_pair(), plan)


class TestEstimator:
    def constant_realization(self, value=2.0, n=6):
        plan = SimulationPlan(
            kind="scalar",
            spectral=scalar_measure(),
            points=((0, 0, 0), (1, 0, 0)),
            realizations=n,
        )
        vals = np.full((n, 2, 1), value)
        return FieldRealization(plan=plan, values=vals, component_names=("T",))

    def test_constant_input_gives_exact_zero(self):
        est = estimate_correlation(self.constant_realization(), [(0, 1)])
        assert est.moments[0, 0, 0] == 0.0
        assert est.standard_errors[0, 0, 0] == 0.0

    def test_permutation_invariance(self):
        plan = SimulationPlan(
            kind="scalar",
            spectral=scalar_measure(),
            points=((0.4, 0.0, 0.0), (0.0, 0.4, 0.0)),
            ell_max=8,
            realizations=400,
            master_seed=51,
        )
        real = simulate_scalar(plan)
        rng = np.random.default_rng(0)
        perm = rng.permutation(real.values.shape[0])
        shuffled = FieldRealization(
            plan=plan, values=real.values[perm], component_names=("T",)
        )
        a = estimate_correlation(real, [(0, 1), (1, 1)])
        b = estimate_correlation(shuffled, [(0, 1), (1, 1)])
        assert np.array_equal(a.moments, b.moments)
        assert np.array_equal(a.standard_errors, b.standard_errors)

    def test_single_atom_monte_carlo(self):
        phi = SpectralMeasure(((1.0, 1.5),))
        plan = SimulationPlan(
            kind="scalar",
            spectral=phi,
            points=((0.45, 0.0, 0.0), (-0.45, 0.0, 0.0)),
            ell_max=12,
            realizations=5000,
            master_seed=77,
        )
        est = estimate_correlation(simulate_scalar(plan), [(0, 1)])
        want = scalar_corr(0.9, phi)
        z = abs(est.moments[0, 0, 0] - want) / est.standard_errors[0, 0, 0]
        assert z < 3.0

    def test_input_validation(self):
        real = self.constant_realization(n=6)
        with pytest.raises(ValueError):
            estimate_correlation(real, [(0, 5)])
        with pytest.raises(ValueError):
            estimate_correlation(real, [])
        single = FieldRealization(
            plan=SimulationPlan(
                kind="scalar", spectral=scalar_measure(), points=((0, 0, 0),)
            ),
            values=np.zeros((1, 1, 1)),
            component_names=("T",),
        )
        with pytest.raises(ValueError):
            estimate_correlation(single, [(0, 0)])

    def test_two_realizations_have_no_error_bar(self):
        est = estimate_correlation(self.constant_realization(n=2), [(0, 0)])
        assert math.isinf(est.standard_errors[0, 0, 0])
