import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbvs.marginal import (Dataset, DegenerateResponseError, PriorConfig,
                           add_covariate, init_workspace, log_posterior_weight,
                           posterior_mean_coefficients, remove_covariate,
                           residual_sum, scan_additions, swap_covariate)

from conftest import random_dataset


def dense_weight(data, subset, prior):
    """Textbook evaluation: explicit projection-style residual and det."""
    cols = sorted(subset)
    d = len(cols)
    xa = data.x[:, cols]
    y = data.y
    if d:
        inner = np.linalg.inv(np.eye(d) / prior.g + xa.T @ xa)
        r2 = float(y @ (y - xa @ (inner @ (xa.T @ y))))
        logdet = math.log(np.linalg.det(np.eye(d) + prior.g * xa.T @ xa))
    else:
        r2 = float(y @ y)
        logdet = 0.0
    w = -d * math.log(data.p - 1) - 0.5 * logdet
    if prior.sigma2 is None:
        return w - 0.5 * data.n * math.log(r2)
    return w - r2 / (2 * prior.sigma2)


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1.0)


# hand-evaluable instance: x'x = 4, x'y = 2, y'y = 5, p = 3
@pytest.fixture
def scalar_data():
    x = np.array([[2.0, 1.0, 0.0], [0.0, 3.0, 1.0]])
    y = np.array([1.0, 2.0])
    return Dataset(y, x)


class TestInitWorkspace:
    def test_empty_subset(self, make_data):
        data = make_data(8, 4)
        ws = init_workspace(data, [], PriorConfig(g=2.0))
        assert ws.chol.shape == (0, 0)
        assert ws.logdet_a == 0.0
        assert ws.bx.size == 0
        assert ws.yy == pytest.approx(float(data.y @ data.y))

    def test_single_column(self, scalar_data):
        ws = init_workspace(scalar_data, [0], PriorConfig(g=1.0))
        np.testing.assert_allclose(ws.chol, [[math.sqrt(5.0)]])
        assert ws.logdet_a == pytest.approx(math.log(5.0))

    def test_factor_reproduces_gram(self, make_data):
        data = make_data(8, 6, seed=3)
        g = 2.5
        ws = init_workspace(data, [1, 3, 4], PriorConfig(g=g))
        xa = data.x[:, [1, 3, 4]]
        target = np.eye(3) / g + xa.T @ xa
        assert np.linalg.norm(ws.gram() - target) <= 1e-10 * np.linalg.norm(target)

    def test_out_of_range(self, make_data):
        with pytest.raises(IndexError):
            init_workspace(make_data(5, 3), [3], PriorConfig(g=1.0))

    def test_nonfinite_data_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(np.array([1.0, np.nan]), np.ones((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.ones(3), np.ones((2, 2)))

    def test_rank_deficient_is_fine(self, make_data):
        data = make_data(5, 3)
        x = np.column_stack([data.x, data.x[:, 0], data.x[:, 1] * 2])
        dup = Dataset(data.y, x)
        ws = init_workspace(dup, range(5), PriorConfig(g=10.0))
        assert np.all(np.isfinite(ws.chol))
        assert rel_err(log_posterior_weight(ws, PriorConfig(g=10.0), dup),
                       dense_weight(dup, range(5), PriorConfig(g=10.0))) < 1e-8


class TestLogPosteriorWeight:
    def test_empty_model_known_sigma(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal(20)
        y *= math.sqrt(10.0 / (y @ y))
        data = Dataset(y, rng.standard_normal((20, 100)))
        ws = init_workspace(data, [], PriorConfig(g=3.0, sigma2=1.0))
        assert log_posterior_weight(ws, PriorConfig(g=3.0, sigma2=1.0), data) == pytest.approx(-5.0)

    def test_scalar_hand_value(self, scalar_data):
        prior = PriorConfig(g=1.0, sigma2=1.0)
        ws = init_workspace(scalar_data, [0], prior)
        assert residual_sum(ws) == pytest.approx(4.2)
        expected = -math.log(2) - 0.5 * math.log(5) - 2.1
        assert log_posterior_weight(ws, prior, scalar_data) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(-3.59787, abs=1e-5)

    @pytest.mark.parametrize("sigma2", [None, 0.7])
    def test_matches_dense(self, make_data, sigma2):
        data = make_data(10, 6, seed=5)
        prior = PriorConfig(g=4.0, sigma2=sigma2)
        for subset in ([0, 2, 3, 5], [1], [0, 1, 2, 3, 4, 5]):
            ws = init_workspace(data, subset, prior)
            assert rel_err(log_posterior_weight(ws, prior, data),
                           dense_weight(data, subset, prior)) <= 1e-9

    def test_custom_q(self, make_data):
        data = make_data(10, 5)
        a = PriorConfig(g=2.0, q=0.25)
        b = PriorConfig(g=2.0)
        ws = init_workspace(data, [0, 1], a)
        diff = log_posterior_weight(ws, a, data) - log_posterior_weight(ws, b, data)
        assert diff == pytest.approx(2 * (math.log(1 / 3) + math.log(4)))

    def test_jeffreys_degenerate_response(self):
        data = Dataset(np.zeros(4), np.eye(4)[:, :2])
        ws = init_workspace(data, [0], PriorConfig(g=1.0))
        with pytest.raises(DegenerateResponseError):
            log_posterior_weight(ws, PriorConfig(g=1.0), data)

    def test_prior_g_mismatch(self, make_data):
        data = make_data(6, 3)
        ws = init_workspace(data, [0], PriorConfig(g=1.0))
        with pytest.raises(ValueError):
            log_posterior_weight(ws, PriorConfig(g=2.0), data)

    def test_invalid_prior(self):
        with pytest.raises(ValueError):
            PriorConfig(g=0.0)
        with pytest.raises(ValueError):
            PriorConfig(g=1.0, q=1.0)
        with pytest.raises(ValueError):
            PriorConfig(g=1.0, sigma2=-1.0)


class TestUpdates:
    def test_add_first_column(self, make_data):
        data = make_data(7, 4)
        g = 3.0
        ws = add_covariate(init_workspace(data, [], PriorConfig(g=g)), 2, data)
        assert ws.chol[0, 0] == pytest.approx(math.sqrt(1 / g + data.x[:, 2] @ data.x[:, 2]))

    def test_add_matches_scratch(self, make_data):
        data = make_data(15, 8, seed=2)
        prior = PriorConfig(g=5.0)
        ws = add_covariate(init_workspace(data, [1, 4, 6], prior), 3, data)
        scratch = init_workspace(data, [1, 3, 4, 6], prior)
        assert rel_err(log_posterior_weight(ws, prior, data),
                       log_posterior_weight(scratch, prior, data)) <= 1e-9
        assert ws.subset == (1, 3, 4, 6)

    def test_add_then_remove(self, make_data):
        data = make_data(15, 8, seed=4)
        prior = PriorConfig(g=5.0)
        ws = init_workspace(data, [0, 5], prior)
        back = remove_covariate(add_covariate(ws, 2, data), 2, data)
        assert rel_err(log_posterior_weight(back, prior, data),
                       log_posterior_weight(ws, prior, data)) <= 1e-9

    def test_remove_singleton(self, make_data):
        data = make_data(6, 3)
        ws = remove_covariate(init_workspace(data, [1], PriorConfig(g=1.0)), 1, data)
        assert ws.logdet_a == 0.0 and ws.d == 0

    def test_remove_middle_matches_scratch(self, make_data):
        data = make_data(12, 9, seed=8)
        prior = PriorConfig(g=2.0, sigma2=1.5)
        ws = init_workspace(data, [0, 2, 4, 6, 8], prior)
        out = remove_covariate(ws, 4, data)
        scratch = init_workspace(data, [0, 2, 6, 8], prior)
        assert rel_err(log_posterior_weight(out, prior, data),
                       log_posterior_weight(scratch, prior, data)) <= 1e-9
        assert np.allclose(out.gram(), scratch.gram(), rtol=1e-10, atol=1e-12)

    def test_remove_then_add(self, make_data):
        data = make_data(12, 9, seed=9)
        prior = PriorConfig(g=2.0)
        ws = init_workspace(data, [0, 2, 4, 6], prior)
        back = add_covariate(remove_covariate(ws, 2, data), 2, data)
        assert rel_err(log_posterior_weight(back, prior, data),
                       log_posterior_weight(ws, prior, data)) <= 1e-9

    def test_swap_matches_scratch_and_is_involution(self, make_data):
        data = make_data(20, 10, seed=1)
        prior = PriorConfig(g=7.0)
        ws = init_workspace(data, [1, 3, 5], prior)
        sw = swap_covariate(ws, 3, 8, data)
        scratch = init_workspace(data, [1, 5, 8], prior)
        assert rel_err(log_posterior_weight(sw, prior, data),
                       log_posterior_weight(scratch, prior, data)) <= 1e-9
        back = swap_covariate(sw, 8, 3, data)
        assert rel_err(log_posterior_weight(back, prior, data),
                       log_posterior_weight(ws, prior, data)) <= 1e-9

    def test_swap_single_column(self, make_data):
        data = make_data(10, 4, seed=6)
        prior = PriorConfig(g=2.0)
        sw = swap_covariate(init_workspace(data, [0], prior), 0, 3, data)
        direct = add_covariate(init_workspace(data, [], prior), 3, data)
        np.testing.assert_allclose(sw.chol, direct.chol)
        assert log_posterior_weight(sw, prior, data) == pytest.approx(
            log_posterior_weight(direct, prior, data), rel=1e-12)

    def test_errors(self, make_data):
        data = make_data(6, 4)
        ws = init_workspace(data, [0, 1], PriorConfig(g=1.0))
        with pytest.raises(ValueError):
            add_covariate(ws, 1, data)
        with pytest.raises(IndexError):
            add_covariate(ws, 4, data)
        with pytest.raises(ValueError):
            remove_covariate(ws, 3, data)
        with pytest.raises(ValueError):
            swap_covariate(ws, 0, 1, data)

    def test_scan_matches_individual_adds(self, make_data):
        data = make_data(25, 12, seed=10)
        prior = PriorConfig(g=9.0)
        ws = init_workspace(data, [2, 7], prior)
        scores = scan_additions(ws, data, prior, range(12))
        for k in range(12):
            if k in (2, 7):
                assert scores[k] == -np.inf
            else:
                w = log_posterior_weight(add_covariate(ws, k, data), prior, data)
                assert rel_err(scores[k], w) < 1e-12


class TestPosteriorMean:
    def test_empty(self, make_data):
        ws = init_workspace(make_data(5, 2), [], PriorConfig(g=1.0))
        assert posterior_mean_coefficients(ws).size == 0

    def test_scalar(self, scalar_data):
        ws = init_workspace(scalar_data, [0], PriorConfig(g=1.0))
        np.testing.assert_allclose(posterior_mean_coefficients(ws), [0.4])

    def test_large_g_is_least_squares(self, make_data):
        data = make_data(20, 5, seed=12, signal={0: 1.0, 3: -2.0})
        ws = init_workspace(data, [0, 1, 3], PriorConfig(g=1e12))
        ols = np.linalg.lstsq(data.x[:, [0, 1, 3]], data.y, rcond=None)[0]
        np.testing.assert_allclose(posterior_mean_coefficients(ws), ols, rtol=1e-4)

    def test_order_follows_sorted_subset(self, make_data):
        data = make_data(20, 6, seed=13)
        prior = PriorConfig(g=4.0)
        ws = add_covariate(init_workspace(data, [4], prior), 1, data)
        ref = posterior_mean_coefficients(init_workspace(data, [1, 4], prior))
        np.testing.assert_allclose(posterior_mean_coefficients(ws), ref, rtol=1e-10)


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

ops = st.lists(st.tuples(st.sampled_from(["add", "remove", "swap"]),
                         st.integers(0, 10_000), st.integers(0, 10_000)),
               min_size=1, max_size=40)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), sequence=ops, sigma=st.sampled_from([None, 1.3]),
       g=st.floats(0.05, 500.0))
def test_scratch_equivalence(seed, sequence, sigma, g):
    data = random_dataset(14, 10, seed=seed)
    prior = PriorConfig(g=g, sigma2=sigma)
    ws = init_workspace(data, [], prior)
    for op, a, b in sequence:
        inside = list(ws.cols)
        outside = [j for j in range(data.p) if j not in inside]
        if op == "add" and outside:
            ws = add_covariate(ws, outside[a % len(outside)], data)
        elif op == "remove" and inside:
            ws = remove_covariate(ws, inside[a % len(inside)], data)
        elif op == "swap" and inside and outside:
            ws = swap_covariate(ws, inside[a % len(inside)], outside[b % len(outside)], data)
        scratch = init_workspace(data, ws.subset, prior)
        assert rel_err(log_posterior_weight(ws, prior, data),
                       log_posterior_weight(scratch, prior, data)) <= 1e-8
        target = scratch.gram()
        if ws.d:
            idx = np.argsort(ws.cols)
            gram = ws.gram()[np.ix_(idx, idx)]
            assert np.linalg.norm(gram - target) <= 1e-10 * np.linalg.norm(target)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 15), d=st.integers(1, 8),
       g=st.floats(0.01, 1000.0))
def test_determinant_identity(seed, n, d, g):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    data = Dataset(rng.standard_normal(n), x)
    ws = init_workspace(data, range(d), PriorConfig(g=g))
    phi = np.clip(np.linalg.eigvalsh(x.T @ x), 0.0, None)
    assert d * math.log(g) + ws.logdet_a == pytest.approx(
        float(np.sum(np.log1p(g * phi))), abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), g=st.floats(0.01, 1e4))
def test_residual_monotone(seed, g):
    data = random_dataset(12, 8, seed=seed)
    prior = PriorConfig(g=g)
    order = np.random.default_rng(seed).permutation(8)
    ws = init_workspace(data, [], prior)
    prev = residual_sum(ws)
    assert prev == pytest.approx(data.yy)
    for j in order:
        ws = add_covariate(ws, int(j), data)
        r2 = residual_sum(ws)
        assert 0 < r2 <= prev * (1 + 1e-12)
        prev = r2


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_posterior_odds_exact(seed):
    rng = np.random.default_rng(seed)
    data = random_dataset(16, 9, seed=seed)
    prior = PriorConfig(g=6.0, sigma2=0.8)
    a1 = sorted(rng.choice(9, size=rng.integers(0, 6), replace=False).tolist())
    a2 = sorted(rng.choice(9, size=rng.integers(0, 6), replace=False).tolist())

    def parts(a):
        xa = data.x[:, a]
        d = len(a)
        if d == 0:
            return 0, float(data.y @ data.y), 1.0
        inner = np.linalg.inv(np.eye(d) / prior.g + xa.T @ xa)
        r2 = float(data.y @ data.y - data.y @ xa @ inner @ xa.T @ data.y)
        return d, r2, np.linalg.det(np.eye(d) + prior.g * xa.T @ xa)

    d1, r1, det1 = parts(a1)
    d2, r2, det2 = parts(a2)
    # ratio of posterior probabilities of model a1 to model a2
    ratio = ((1 / (data.p - 1)) ** (d1 - d2) * math.exp(-(r1 - r2) / (2 * prior.sigma2))
             * math.sqrt(det2) / math.sqrt(det1))
    w1 = log_posterior_weight(init_workspace(data, a1, prior), prior, data)
    w2 = log_posterior_weight(init_workspace(data, a2, prior), prior, data)
    assert w1 - w2 == pytest.approx(math.log(ratio), abs=1e-8)
