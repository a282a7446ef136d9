import math

import numpy as np
import pytest

from pcrc.core import classify, log_distance, ones
from pcrc.ensemble import (
    Ensemble,
    LawSpec,
    best_sample,
    expectation_mult,
    lift_inclusion,
    make_dirac,
    mixture,
    pushforward,
    sample_ensemble,
    stochastic_index,
    truncate_support,
    uniform,
)
from pcrc.errors import ValidationError
from pcrc.indices import IndexSpec, evaluate_index
from pcrc.projections import gmm_project, project_cm, project_reciprocal

from conftest import C3, INC3, NONREC2, random_consistent, random_positive, random_reciprocal

KII = IndexSpec("kii")


def reciprocal_ensemble(rng, n, m):
    return uniform(np.stack([random_reciprocal(rng, n) for _ in range(m)]))


class TestEnsembleType:
    def test_validation(self):
        with pytest.raises(ValidationError):
            Ensemble([0.5, 0.4], np.stack([ones(2), ones(2)]))
        with pytest.raises(ValidationError):
            Ensemble([1.0], -np.ones((1, 2, 2)))
        with pytest.raises(ValidationError):
            Ensemble([], np.zeros((0, 2, 2)))

    def test_immutable(self):
        x = make_dirac(C3)
        with pytest.raises(ValueError):
            x.matrices[0, 0, 0] = 5.0


class TestDirac:
    def test_examples(self, rng):
        x = make_dirac(ones(3))
        assert x.m == 1 and x.weights[0] == 1.0
        a = random_positive(rng, 4)
        np.testing.assert_array_equal(expectation_mult(make_dirac(a)), a)
        r = random_reciprocal(rng, 4)
        for spec in (KII, IndexSpec("dist", "CPC"), IndexSpec("dist", "CM", gamma=2, indicator=True)):
            assert stochastic_index(make_dirac(r), spec) == evaluate_index(r, spec)


class TestSampling:
    def test_degenerate(self):
        x = sample_ensemble(LawSpec("lognormal", INC3, 1e-12, 50, 3))
        assert all(log_distance(a, INC3) <= 1e-10 for _, a in x)

    def test_reciprocal_coupling(self, rng):
        base = random_reciprocal(rng, 4)
        for law, disp in (("lognormal", 0.5), ("uniform_additive", 0.3)):
            x = sample_ensemble(LawSpec(law, base, disp, 200, 11, "reciprocal"))
            assert all(classify(a).reciprocal for _, a in x)

    def test_independent_is_not_reciprocal(self):
        x = sample_ensemble(LawSpec("lognormal", C3, 0.3, 10, 1, "independent"))
        assert not any(classify(a).reciprocal for _, a in x)
        np.testing.assert_array_equal(x.matrices[:, 0, 0], 1.0)

    def test_determinism(self):
        spec = LawSpec("uniform_additive", C3, 0.5, 500, 2**63 + 5, "independent")
        a, b = sample_ensemble(spec), sample_ensemble(spec)
        np.testing.assert_array_equal(a.matrices, b.matrices)
        assert a.law == b.law
        c = sample_ensemble(LawSpec("uniform_additive", C3, 0.5, 500, 6, "independent"))
        assert not np.array_equal(a.matrices, c.matrices)

    def test_uniform_redraws(self):
        x = sample_ensemble(LawSpec("uniform_additive", C3, 1.0, 2000, 4))
        assert np.all(x.matrices > 0)
        assert x.law["redraws"] > 0
        # geometric redraw counts: two 0.5 entries fail w.p. 1/4, one 0.25 entry w.p. 3/8
        expected = 2000 * (2 * (1 / 4) / (3 / 4) + (3 / 8) / (5 / 8))
        assert x.law["redraws"] == pytest.approx(expected, rel=0.1)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            LawSpec("lognormal", C3, 0.0, 10, 1)
        with pytest.raises(ValidationError):
            LawSpec("cauchy", C3, 1.0, 10, 1)
        with pytest.raises(ValidationError):
            LawSpec("lognormal", C3, 1.0, 0, 1)

    def test_clt_bound(self):
        n, sigma, count = 3, 0.3, 10_000
        bound = 3 * sigma * math.sqrt(n * (n - 1)) / math.sqrt(count)
        for seed in range(42, 62):
            x = sample_ensemble(LawSpec("lognormal", C3, sigma, count, seed, "reciprocal"))
            assert log_distance(expectation_mult(x), C3) <= bound


class TestPushforward:
    def test_dirac(self, rng):
        a = random_positive(rng, 3)
        np.testing.assert_array_equal(pushforward(make_dirac(a), project_reciprocal).matrices[0], project_reciprocal(a))

    def test_identity(self, rng):
        x = uniform(np.stack([random_positive(rng, 3) for _ in range(5)]))
        y = pushforward(x, lambda a: a)
        np.testing.assert_array_equal(y.matrices, x.matrices)
        np.testing.assert_array_equal(y.weights, x.weights)

    def test_two_point(self):
        x = uniform(np.stack([NONREC2, ones(2)]))
        y = pushforward(x, project_reciprocal)
        np.testing.assert_array_equal(y.matrices, [[[1, 0.5], [2, 1]], ones(2)])

    def test_functoriality(self, rng):
        x = uniform(np.stack([random_positive(rng, 4) for _ in range(20)]))
        f, g = gmm_project, project_reciprocal
        np.testing.assert_array_equal(pushforward(x, lambda a: f(g(a))).matrices, pushforward(pushforward(x, g), f).matrices)

    def test_threaded_matches(self, rng, monkeypatch):
        x = uniform(np.stack([random_positive(rng, 4) for _ in range(30)]))
        seq = pushforward(x, project_cm)
        monkeypatch.setenv("PCRC_THREADS", "4")
        np.testing.assert_array_equal(pushforward(x, project_cm).matrices, seq.matrices)

    def test_error_names_sample(self):
        x = uniform(np.stack([C3, C3 * np.array([[1, 1, 1], [1, 1, 1], [5, 1, 1]])]))
        with pytest.raises(ValidationError, match="sample 1"):
            pushforward(x, gmm_project)


class TestLift:
    def test_round_trips(self, rng):
        x = reciprocal_ensemble(rng, 4, 10)
        lifted = lift_inclusion(x, "reciprocal")
        assert lifted.provenance["support"] == "reciprocal"
        np.testing.assert_allclose(pushforward(lifted, project_reciprocal).matrices, x.matrices, rtol=1e-15)
        c = random_consistent(rng, 4)
        y = pushforward(lift_inclusion(make_dirac(c), "consistent_reciprocal"), gmm_project)
        np.testing.assert_allclose(y.matrices[0], c, rtol=1e-14)

    def test_offender_named(self):
        x = uniform(np.stack([ones(2), NONREC2]))
        with pytest.raises(ValidationError, match=r"sample 1 .*2\.77"):
            lift_inclusion(x, "reciprocal")


class TestExpectation:
    def test_geometric_mean(self):
        a, b = ones(2), ones(2)
        a[0, 1], b[0, 1] = 2.0, 8.0
        assert expectation_mult(uniform(np.stack([a, b])))[0, 1] == pytest.approx(4.0, rel=1e-15)

    def test_fibration(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 7))
            x = reciprocal_ensemble(rng, n, 20)
            lhs = expectation_mult(pushforward(x, gmm_project))
            assert log_distance(lhs, gmm_project(expectation_mult(x))) <= 1e-10

    def test_homomorphic(self, rng):
        x = uniform(np.stack([random_positive(rng, 3) for _ in range(7)]))
        c = random_positive(rng, 3)
        lhs = expectation_mult(pushforward(x, lambda a: a * c))
        np.testing.assert_allclose(lhs, expectation_mult(x) * c, rtol=1e-13)


class TestStochasticIndex:
    def test_weighted_mean(self):
        x = uniform(np.stack([C3, INC3]))
        assert stochastic_index(x, KII) == pytest.approx(0.25, abs=1e-15)

    def test_linearity(self, rng):
        x = reciprocal_ensemble(rng, 4, 8)
        y = reciprocal_ensemble(rng, 4, 5)
        z = mixture([(0.3, x), (0.7, y)])
        for spec in (KII, IndexSpec("dist", "CPC", gamma=2)):
            assert stochastic_index(z, spec) == pytest.approx(0.3 * stochastic_index(x, spec) + 0.7 * stochastic_index(y, spec), rel=1e-12)

    def test_zero_iff_support(self, rng):
        x = uniform(np.stack([random_consistent(rng, 4) for _ in range(6)]))
        assert stochastic_index(x, KII) <= 1e-12
        y = mixture([(0.99, x), (0.01, make_dirac(random_reciprocal(rng, 4)))])
        assert stochastic_index(y, KII) > 0

    def test_failure_names_sample(self):
        x = uniform(np.stack([ones(2), NONREC2]))
        with pytest.raises(ValidationError, match="sample 1"):
            stochastic_index(x, KII)

    def test_best_sample(self):
        x = uniform(np.stack([INC3, C3]))
        np.testing.assert_array_equal(best_sample(x, KII).matrices[0], C3)


class TestTruncate:
    def test_dirac(self):
        for eps in (0.01, 0.5, 0.99):
            t = truncate_support(make_dirac(INC3), eps)
            np.testing.assert_array_equal(t.matrices, [INC3])
            assert t.provenance["retained_mass"] == 1.0

    def test_small_ensemble_kept(self, rng):
        x = uniform(np.stack([random_positive(rng, 3) for _ in range(5)]))
        t = truncate_support(x, 0.1)
        np.testing.assert_array_equal(t.matrices, x.matrices)

    def test_lognormal(self):
        for seed in range(10):
            x = sample_ensemble(LawSpec("lognormal", C3, 0.5, 1000, seed))
            t = truncate_support(x, 0.1)
            assert t.provenance["retained_mass"] >= 0.9
            assert t.m < x.m
            spread = lambda e: np.max(np.ptp(e.logs(), axis=0))
            assert spread(t) < spread(x)

    def test_weight_ratios(self, rng):
        w = rng.uniform(1, 2, size=200)
        x = Ensemble(w / w.sum(), np.stack([random_positive(rng, 3) for _ in range(200)]))
        t = truncate_support(x, 0.3)
        assert t.m <= x.m
        kept = np.array([np.flatnonzero(np.all(x.matrices == a, axis=(1, 2)))[0] for a in t.matrices])
        ratios = t.weights / x.weights[kept]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
        assert float(x.weights[kept].sum()) >= 0.7

    def test_invalid_epsilon(self):
        with pytest.raises(ValidationError):
            truncate_support(make_dirac(C3), 0.0)
