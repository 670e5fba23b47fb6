import itertools

import numpy as np
import pytest
import scipy.linalg
from conftest import barbell, blob, complete_graph, path_graph, random_connected
from hypothesis import given, settings
from hypothesis import strategies as st

from hmsc.diffusion import DENSE_LIMIT, RESIDUAL_TOL, embed, normalized_laplacian, smallest_eigenpairs
from hmsc.graph import Component


def dense_laplacian(comp):
    a = comp.adjacency.toarray()
    d = a.sum(axis=1)
    return np.eye(len(a)) - a / np.sqrt(np.outer(d, d))


def test_path_spectrum():
    pairs = smallest_eigenpairs(path_graph(3), 3)
    assert np.allclose(pairs.values, [0, 1, 2], atol=1e-9)


def test_complete_graph_spectrum():
    pairs = smallest_eigenpairs(complete_graph(4), 4)
    assert np.allclose(pairs.values, [0, 4 / 3, 4 / 3, 4 / 3], atol=1e-9)


def test_random_component_matches_dense_oracle():
    rng = np.random.default_rng(3)
    comp = random_connected(30, rng, extra=0.1)
    pairs = smallest_eigenpairs(comp, 4)
    oracle_vals, oracle_vecs = np.linalg.eigh(dense_laplacian(comp))
    assert np.allclose(pairs.values, oracle_vals[:4], atol=1e-6)
    # compare spanned subspaces, robust to sign and to near-degeneracy
    overlap = np.abs(oracle_vecs[:, :4].T @ pairs.vectors)
    assert np.allclose(np.linalg.svd(overlap, compute_uv=False), 1, atol=1e-6)


def test_first_eigenvector_constant_phi():
    comp = random_connected(25, np.random.default_rng(1))
    pairs = smallest_eigenpairs(comp, 3)
    assert pairs.values[0] <= 1e-8
    phi1 = pairs.phi[:, 0]
    assert np.allclose(phi1, phi1[0], rtol=1e-6)
    assert np.all(pairs.residuals <= RESIDUAL_TOL * np.maximum(1, pairs.values))


def test_sign_convention():
    pairs = smallest_eigenpairs(random_connected(20, np.random.default_rng(2)), 5)
    for col in pairs.vectors.T:
        first = col[np.flatnonzero(np.abs(col) > 1e-10)[0]]
        assert first > 0


def test_sparse_path_matches_dense():
    rng = np.random.default_rng(5)
    comp = blob(DENSE_LIMIT + 200, rng, size=40)
    assert comp.size > DENSE_LIMIT
    pairs = smallest_eigenpairs(comp, 4, seed=0)
    vals = scipy.linalg.eigh(normalized_laplacian(comp.adjacency).toarray(), eigvals_only=True, subset_by_index=(0, 3))
    assert np.allclose(pairs.values, vals, atol=1e-8)
    assert np.all(pairs.residuals <= RESIDUAL_TOL * np.maximum(1, pairs.values))


def test_disconnected_rejected():
    comp = Component.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(ValueError, match="not connected"):
        smallest_eigenpairs(comp, 2)
    with pytest.raises(ValueError):
        embed(comp, d=1)


def test_embed_too_small():
    with pytest.raises(ValueError, match="too small"):
        embed(path_graph(3), d=3)


def test_barbell_fiedler_separates_triangles():
    dmap = embed(barbell(3), d=1)
    x = dmap.points[:, 0]
    assert np.all(np.sign(x[:3]) == np.sign(x[0]))
    assert np.all(np.sign(x[3:]) == -np.sign(x[0]))
    # oracle: dense eigenvector of the 6-node Laplacian
    vals, vecs = np.linalg.eigh(dense_laplacian(barbell(3)))
    assert np.array_equal(np.sign(vecs[:3, 1]) == np.sign(vecs[0, 1]), np.ones(3, bool))


def test_complete_graph_embedding_equidistant():
    dmap = embed(complete_graph(4), d=3)
    dists = [np.linalg.norm(dmap.points[i] - dmap.points[j]) for i, j in itertools.combinations(range(4), 2)]
    assert np.ptp(dists) < 1e-9


def test_embedding_formula_both_conventions():
    comp = random_connected(15, np.random.default_rng(9))
    pairs = smallest_eigenpairs(comp, 4)
    for conv, w in (("paper", pairs.values[1:4]), ("standard", 1 - pairs.values[1:4])):
        dmap = embed(comp, d=3, t=2, convention=conv)
        assert np.allclose(dmap.points, pairs.phi[:, 1:4] * w**2, atol=1e-12)


def test_time_scales_coordinates():
    comp = random_connected(15, np.random.default_rng(4))
    one = embed(comp, d=3, t=1)
    two = embed(comp, d=3, t=2)
    lam = one.eigenvalues[1:4]
    assert np.allclose(two.points, one.points * lam, atol=1e-12)
    for j in range(3):
        assert np.array_equal(np.argsort(one.points[:, j], kind="stable"), np.argsort(two.points[:, j], kind="stable"))


def test_bad_convention():
    with pytest.raises(ValueError):
        embed(path_graph(6), d=1, convention="other")


@settings(max_examples=25, deadline=None)
@given(st.integers(6, 25), st.integers(0, 2**32 - 1))
def test_relabeling_invariance(n, seed):
    rng = np.random.default_rng(seed)
    comp = random_connected(n, rng, extra=0.15)
    vals = np.linalg.eigvalsh(dense_laplacian(comp))
    # skip near-degenerate spectra where eigenvectors are not unique
    if np.min(np.diff(vals[:5])) < 1e-6:
        return
    perm = rng.permutation(n)
    inv = np.argsort(perm)
    edges = comp.edge_list()
    permuted = Component.from_edges(n, inv[edges])
    a = embed(comp, d=3).points
    b = embed(permuted, d=3).points[inv]
    for j in range(3):
        assert np.allclose(a[:, j], b[:, j], atol=1e-8) or np.allclose(a[:, j], -b[:, j], atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_residual_invariant(n, seed):
    comp = random_connected(n, np.random.default_rng(seed))
    m = min(n, 4)
    pairs = smallest_eigenpairs(comp, m)
    lap = dense_laplacian(comp)
    res = np.linalg.norm(lap @ pairs.vectors - pairs.vectors * pairs.values, axis=0)
    assert np.all(res <= 1e-8 * np.maximum(1, pairs.values))
    assert np.allclose(np.linalg.norm(pairs.vectors, axis=0), 1)
