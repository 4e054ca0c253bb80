import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from graphssl import (
    LabeledSet,
    SSLConfig,
    build_ablation_affinity,
    build_affinity,
    build_laplacian,
    build_ssl_laplacian,
    build_w_ssl,
    build_w_wnll,
    generate_moons,
    GraphConfig,
    kmeans,
    laplacian_for,
    MoonsSpec,
    smallest_eigenpairs,
    ssl_labeled_affinity,
    wnll_labeled_affinity,
)
from graphssl.errors import ConfigError, InputError


def dense(M):
    return M.toarray() if sparse.issparse(M) else np.asarray(M)


def random_affinity(n, rng, density=0.6):
    A = rng.random((n, n)) * (rng.random((n, n)) < density)
    A = np.triu(A, 1)
    return A + A.T


def random_labeled_set(n, K, m, rng):
    idx = rng.choice(n, m, replace=False)
    lab = np.arange(m) % K
    return LabeledSet.from_labels(idx, lab, n, K)


def ssl_oracle(A, S, alpha):
    """Entry-by-entry case analysis of the SSL affinity."""
    n = len(A)
    cls = S.node_class
    mx = A.max()
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = cls[i], cls[j]
            if a >= 0 and b >= 0 and a == b:
                out[i, j] = 2 * A[i, j] + alpha * mx
            elif a >= 0 and b >= 0:
                out[i, j] = 0.0
            elif (a >= 0) != (b >= 0):
                out[i, j] = (2 + alpha) * A[i, j]
            else:
                out[i, j] = 2 * A[i, j]
    return out


def wnll_oracle(A, S, mu):
    n = len(A)
    lab = S.mask
    out = 2 * A.copy()
    for i in range(n):
        for j in range(n):
            if lab[i] != lab[j]:
                out[i, j] += (mu - 1) * A[i, j]
    return out


W3 = np.array([[0, 0.5, 0.2], [0.5, 0, 0.9], [0.2, 0.9, 0]])


class TestLabeledSet:
    def test_overlap_rejected(self):
        with pytest.raises(InputError):
            LabeledSet((np.array([0, 1]), np.array([1])), 3)

    def test_out_of_range(self):
        with pytest.raises(InputError):
            LabeledSet((np.array([3]),), 3)

    def test_properties(self):
        S = LabeledSet.from_labels([4, 1, 2], [1, 0, 1], 6)
        assert S.n_classes == 2 and S.m == 3
        np.testing.assert_array_equal(S.indices, [1, 2, 4])
        np.testing.assert_array_equal(S.node_class, [-1, 0, 1, -1, 1, -1])

    def test_default_config(self):
        S = LabeledSet.from_labels(np.arange(20), np.arange(20) % 2, 500)
        cfg = SSLConfig.default(S)
        assert cfg.mu == 25.0 and cfg.alpha == 24.0


class TestWNLL:
    def test_empty_set_gives_zero(self):
        assert wnll_labeled_affinity(W3, LabeledSet.empty(3)).nnz == 0

    def test_all_labeled_gives_zero(self):
        S = LabeledSet.from_labels([0, 1, 2], [0, 1, 0], 3)
        assert wnll_labeled_affinity(W3, S).nnz == 0

    def test_three_node_case(self):
        S = LabeledSet((np.array([0]),), 3)
        Wl = dense(wnll_labeled_affinity(W3, S))
        assert Wl[0, 1] == Wl[1, 0] == 0.5
        assert Wl[0, 2] == Wl[2, 0] == 0.2
        assert Wl[1, 2] == 0

    def test_three_node_mu3(self):
        S = LabeledSet((np.array([0]),), 3)
        Ww = dense(build_w_wnll(W3, S, SSLConfig(mu=3.0, alpha=2.0)))
        assert Ww[0, 1] == pytest.approx(4 * 0.5, abs=1e-15)
        assert Ww[0, 2] == pytest.approx(4 * 0.2, abs=1e-15)
        assert Ww[1, 2] == 2 * 0.9

    def test_empty_and_mu1_give_2w(self):
        S = LabeledSet((np.array([0]),), 3)
        np.testing.assert_array_equal(dense(build_w_wnll(W3, LabeledSet.empty(3))), 2 * W3)
        np.testing.assert_array_equal(dense(build_w_wnll(W3, S, SSLConfig(1.0, 0.0))), 2 * W3)

    def test_mu_below_one_warns(self):
        S = LabeledSet((np.array([0]),), 3)
        with pytest.warns(RuntimeWarning):
            build_w_wnll(W3, S, SSLConfig(mu=0.5, alpha=-0.5))

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        A = random_affinity(20, rng)
        S = random_labeled_set(20, 3, 6, rng)
        cfg = SSLConfig.default(S)
        np.testing.assert_allclose(dense(build_w_wnll(A, S, cfg)), wnll_oracle(A, S, cfg.mu), rtol=1e-12, atol=0)


class TestSSLLabeledAffinity:
    def test_single_class(self):
        S = LabeledSet((np.array([0, 1, 2]),), 3)
        Wl = dense(ssl_labeled_affinity(W3, S, SSLConfig(3.0, 2.0)))
        off = ~np.eye(3, dtype=bool)
        assert np.all(Wl[off] == 0.9)

    def test_two_class_alpha2(self):
        S = LabeledSet((np.array([0, 1]), np.array([2])), 3)
        Wl = dense(ssl_labeled_affinity(W3, S, SSLConfig(3.0, 2.0)))
        assert Wl[0, 1] == 0.9
        assert Wl[0, 2] == -0.2
        assert Wl[1, 2] == -0.9
        np.testing.assert_array_equal(Wl, Wl.T)

    def test_empty(self):
        assert ssl_labeled_affinity(W3, LabeledSet.empty(3), SSLConfig(1.0, 1.0)).nnz == 0

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_nonpositive_alpha(self, alpha):
        S = LabeledSet((np.array([0]), np.array([2])), 3)
        with pytest.raises(ConfigError):
            ssl_labeled_affinity(W3, S, SSLConfig(2.0, alpha))


class TestBuildWSSL:
    def test_cross_pair_exactly_zero(self):
        S = LabeledSet((np.array([0, 1]), np.array([2])), 3)
        for alpha in (2.0, 3.0, 7.3, 1e-3):
            Ws = dense(build_w_ssl(W3, S, SSLConfig(alpha + 1, alpha)))
            assert Ws[0, 2] == 0.0 and Ws[1, 2] == 0.0

    def test_same_class_substitution(self):
        A = np.array([[0, 0.2, 0.9], [0.2, 0, 0.1], [0.9, 0.1, 0]])
        S = LabeledSet((np.array([0, 1]),), 3)
        Ws = dense(build_w_ssl(A, S, SSLConfig(5.0, 4.0)))
        assert Ws[0, 1] == pytest.approx(4.0, abs=1e-15)

    def test_empty_set(self):
        np.testing.assert_array_equal(dense(build_w_ssl(W3, LabeledSet.empty(3))), 2 * W3)

    def test_all_labeled_alpha_zero(self):
        S = LabeledSet((np.array([0, 1]), np.array([2])), 3)
        Ws = dense(build_w_ssl(W3, S))
        assert SSLConfig.default(S).alpha == 0
        assert Ws[0, 2] == 0 and Ws[1, 2] == 0
        assert Ws[0, 1] == 2 * 0.5

    def test_fill_in_for_same_class_pairs(self):
        A = np.zeros((4, 4))
        A[0, 1] = A[1, 0] = A[2, 3] = A[3, 2] = 0.5
        S = LabeledSet((np.array([0, 3]),), 4)
        Ws = dense(build_w_ssl(A, S, SSLConfig(2.0, 1.0)))
        assert Ws[0, 3] == 0.5

    def test_matches_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            A = random_affinity(25, rng)
            S = random_labeled_set(25, 3, 9, rng)
            cfg = SSLConfig.default(S)
            np.testing.assert_allclose(dense(build_w_ssl(A, S, cfg)), ssl_oracle(A, S, cfg.alpha), rtol=1e-12, atol=0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(3, 30), st.integers(1, 4), st.integers(0, 10_000), st.floats(0.01, 100.0))
    def test_nonnegative_and_exact_cancellation(self, n, K, seed, alpha):
        rng = np.random.default_rng(seed)
        A = random_affinity(n, rng)
        m = int(rng.integers(1, n + 1))
        S = random_labeled_set(n, K, m, rng)
        Ws = dense(build_w_ssl(A, S, SSLConfig(alpha + 1, alpha)))
        Ww = dense(build_w_wnll(A, S, SSLConfig(alpha + 1, alpha)))
        assert Ws.min() >= -1e-12 and Ww.min() >= -1e-12
        cls = S.node_class
        cross = (cls[:, None] >= 0) & (cls[None, :] >= 0) & (cls[:, None] != cls[None, :])
        assert np.all(np.abs(Ws[cross]) <= 1e-12)
        np.testing.assert_array_equal(Ws, Ws.T)

    def test_mixed_pairs_match_wnll(self):
        rng = np.random.default_rng(4)
        A = random_affinity(15, rng)
        S = random_labeled_set(15, 2, 4, rng)
        cfg = SSLConfig.default(S)
        Ws, Ww = dense(build_w_ssl(A, S, cfg)), dense(build_w_wnll(A, S, cfg))
        mixed = S.mask[:, None] != S.mask[None, :]
        np.testing.assert_allclose(Ws[mixed], Ww[mixed], rtol=1e-12)


class TestAblation:
    def test_w3_equals_wnll(self):
        rng = np.random.default_rng(6)
        A = random_affinity(30, rng)
        S = random_labeled_set(30, 3, 6, rng)
        cfg = SSLConfig.default(S)
        diff = dense(build_ablation_affinity(A, S, cfg, "W3")) - dense(build_w_wnll(A, S, cfg))
        assert np.abs(diff).max() <= 1e-12

    def test_w2_empty(self):
        np.testing.assert_array_equal(
            dense(build_ablation_affinity(W3, LabeledSet.empty(3), SSLConfig(2.0, 1.0), "W2")), 2 * W3
        )

    def test_w1_two_same_class(self):
        S = LabeledSet((np.array([0, 2]),), 3)
        out = dense(build_ablation_affinity(W3, S, SSLConfig(4.0, 3.0), "W1"))
        assert out[0, 2] == pytest.approx(2 * 0.2 + 3 * 0.9, abs=1e-15)
        assert out[0, 1] == 2 * 0.5 and out[1, 2] == 2 * 0.9

    def test_w2_cross_zero_others_doubled(self):
        S = LabeledSet((np.array([0]), np.array([1])), 3)
        out = dense(build_ablation_affinity(W3, S, SSLConfig(4.0, 3.0), "W2"))
        assert out[0, 1] == 0
        assert out[0, 2] == 2 * 0.2 and out[1, 2] == 2 * 0.9

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            build_ablation_affinity(W3, LabeledSet.empty(3), variant="W4")

    def test_sum_of_parts(self):
        rng = np.random.default_rng(9)
        A = random_affinity(20, rng)
        S = random_labeled_set(20, 2, 6, rng)
        cfg = SSLConfig.default(S)
        parts = sum(dense(build_ablation_affinity(A, S, cfg, v)) - 2 * A for v in ("W1", "W2", "W3"))
        np.testing.assert_allclose(2 * A + parts, dense(build_w_ssl(A, S, cfg)), atol=1e-12)


class TestSSLLaplacian:
    def test_empty_set_is_2l(self):
        rng = np.random.default_rng(1)
        A = random_affinity(12, rng)
        L = build_laplacian(A)
        Ls = build_ssl_laplacian(build_w_ssl(A, LabeledSet.empty(12)))
        np.testing.assert_allclose(Ls.toarray(), 2 * L.toarray(), rtol=1e-15, atol=0)

    def test_row_sums_and_psd(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            A = random_affinity(20, rng)
            S = random_labeled_set(20, 3, 7, rng)
            L = build_ssl_laplacian(build_w_ssl(A, S))
            M = L.toarray()
            assert np.abs(M.sum(1)).max() <= 1e-12 * L.degree.max()
            for _ in range(20):
                f = rng.normal(size=20)
                assert f @ M @ f >= -1e-10 * f @ f

    def test_negative_rejected(self):
        with pytest.raises(InputError):
            build_ssl_laplacian(-W3)

    def test_laplacian_for_names(self):
        S = LabeledSet((np.array([0]), np.array([2])), 3)
        for name in ("L", "L_WNLL", "L_SSL", "L1_SSL", "L2_SSL", "L3_SSL"):
            assert laplacian_for(name, W3, S).n == 3
        with pytest.raises(ConfigError):
            laplacian_for("L_X", W3, S)


@pytest.fixture(scope="module")
def moons_graph():
    d = generate_moons(MoonsSpec(400, 2, 0.1, seed=2))
    return d, build_affinity(d, GraphConfig(sigma=0.5, neighbors=20))


class TestSpectralProperties:
    def test_unsupervised_limit_embedding(self, moons_graph):
        _, W = moons_graph
        S = LabeledSet.empty(W.shape[0], 2)
        e0 = smallest_eigenpairs(build_laplacian(W), 2)
        e1 = smallest_eigenpairs(laplacian_for("L_SSL", W, S), 2)
        np.testing.assert_allclose(e1.eigenvalues, 2 * e0.eigenvalues, rtol=1e-8)
        # columns agree up to sign; the sign rule makes them identical
        for c in range(2):
            u, v = e0.coordinates[:, c], e1.coordinates[:, c]
            assert min(np.abs(u - v).max(), np.abs(u + v).max()) <= 1e-7

    def test_scale_invariance(self, moons_graph):
        d, W = moons_graph
        rng = np.random.default_rng(0)
        S = random_labeled_set(W.shape[0], 2, 10, rng)
        S = LabeledSet.from_labels(S.indices, d.true_labels[S.indices], W.shape[0], 2)
        for c in (0.01, 7.0):
            Ws1 = build_w_ssl(W, S)
            Wsc = build_w_ssl(c * W, S)
            np.testing.assert_allclose(Wsc.toarray(), c * Ws1.toarray(), rtol=1e-12, atol=1e-300)
        labels = []
        for c in (1.0, 0.01, 7.0):
            emb = smallest_eigenpairs(laplacian_for("L_SSL", c * W, S), 1)
            labels.append(kmeans(emb.coordinates, 2, seed=0).labels)
        assert np.array_equal(labels[0], labels[1]) and np.array_equal(labels[0], labels[2])

    def test_no_warnings_on_default_path(self, moons_graph):
        _, W = moons_graph
        S = LabeledSet.from_labels([0, 399], [0, 1], W.shape[0])
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            laplacian_for("L_WNLL", W, S)
            laplacian_for("L_SSL", W, S)
