import warnings

import numpy as np
import pytest

from smoothsdp.exceptions import GsetParseError
from smoothsdp.maxcut import (
    Graph,
    _exhaustive_small,
    brute_force_maxcut,
    build_problem,
    cut_bound,
    gw_round,
    parse_gset,
)
from smoothsdp.certificate import certify
from smoothsdp.staircase import StaircaseConfig, run

from conftest import complete, cycle, random_graph


def test_parse_triangle():
    g = parse_gset("3 3\n1 2 1\n1 3 1\n2 3 1")
    assert g.n == 3 and g.num_edges == 3
    np.testing.assert_array_equal(g.laplacian().to_dense(), complete(3).laplacian().to_dense())


def test_parse_negative_edge():
    g = parse_gset("2 1\n1 2 -1")
    assert g.weights.tolist() == [-1.0] and (g.rows[0], g.cols[0]) == (0, 1)


@pytest.mark.parametrize(
    "text, message",
    [
        ("2 1\n1 3 1", "endpoint out of range, line 2"),
        ("2 1\n1 x 1", "non-numeric token, line 2"),
        ("3 2\n1 2 1", "edge count mismatch"),
        ("3 1\n2 2 1", "self-loop, line 2"),
        ("3 1\n1 2", "expected 'i j w', line 2"),
        ("3\n", "header must be 'n m', line 1"),
        ("", "empty input"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(GsetParseError) as info:
        parse_gset(text)
    assert message in str(info.value)


def test_duplicates_summed_with_warning():
    with pytest.warns(UserWarning):
        g = parse_gset("2 2\n1 2 1\n2 1 2.5")
    assert g.num_edges == 1 and g.weights[0] == 3.5


def test_gset_round_trip(rng):
    g = random_graph(9, 0.4, rng, weights=lambda r, k: r.choice([-1.0, 1.0], k))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        h = parse_gset(g.to_gset())
    np.testing.assert_array_equal(h.rows, g.rows)
    np.testing.assert_array_equal(h.weights, g.weights)


def test_laplacian_examples():
    L = Graph.from_edges(2, [(0, 1, 1.0)]).laplacian().to_dense()
    np.testing.assert_array_equal(L, [[1, -1], [-1, 1]])
    np.testing.assert_array_equal(np.diag(complete(3).laplacian().to_dense()), [2, 2, 2])


def test_objective_bookkeeping(rng):
    g = random_graph(10, 0.5, rng)
    P = build_problem(g)
    Y = P.manifold(3).random_point(rng)
    assert P.sdp_cut_value(Y) + P.cost(Y) == pytest.approx(0.0, abs=1e-12)


def test_triangle_sdp_value_and_dual():
    P = build_problem(complete(3))
    Y, cert, _ = run(P, StaircaseConfig(p_schedule=[4]))
    assert P.sdp_cut_value(Y) == pytest.approx(9 / 4, abs=1e-9)
    assert -cert.dual_value == pytest.approx(9 / 4, abs=1e-6)


def test_cut_bound_examples():
    P = build_problem(complete(3))
    Y, cert, _ = run(P)
    assert cut_bound(P, Y, cert) >= 2
    P = build_problem(cycle(4))
    Y, cert, _ = run(P)
    assert cut_bound(P, Y, cert) == pytest.approx(4.0, abs=1e-6)


def test_cut_bound_clamps_nonnegative_lambda():
    P = build_problem(complete(3))
    Y, cert, _ = run(P)
    if cert.lambda_min_S[0] >= 0:
        assert cut_bound(P, Y, cert) == P.sdp_cut_value(Y)
    # an artificial PSD certificate gives exactly the SDP value
    fake = type(cert)(**{**cert.__dict__, "lambda_min_S": (0.5, 0.6)})
    assert cut_bound(P, Y, fake) == P.sdp_cut_value(Y)


def test_cut_bound_is_sound_at_arbitrary_points(rng):
    for seed in range(10):
        g = random_graph(9, 0.5, np.random.default_rng(seed))
        P = build_problem(g)
        Y = P.manifold(2).random_point(seed)
        assert brute_force_maxcut(g)[0] <= cut_bound(P, Y, certify(P, Y)) + 1e-9


def test_rounding_rank_one_point():
    g = cycle(5)
    P = build_problem(g)
    x = np.array([1, -1, 1, -1, -1])
    res = gw_round(P, x[:, None].astype(float), samples=50, seed=3)
    np.testing.assert_array_equal(res.assignment, x)
    assert res.cut_value == g.cut_value(x)


def test_rounding_examples():
    for g, opt in ((complete(3), 2.0), (cycle(6), 6.0)):
        P = build_problem(g)
        Y, cert, _ = run(P)
        res = gw_round(P, Y, samples=1000, seed=0, cert=cert)
        assert res.cut_value == opt
        assert res.cut_value <= res.certified_upper_bound + 1e-9
        assert res.assignment[0] == 1


def test_rounding_is_deterministic(rng):
    g = random_graph(14, 0.4, rng)
    P = build_problem(g)
    Y, _, _ = run(P)
    a, b = gw_round(P, Y, 300, seed=9), gw_round(P, Y, 300, seed=9)
    np.testing.assert_array_equal(a.assignment, b.assignment)
    assert g.cut_value(a.assignment) == a.cut_value


def test_brute_force_examples():
    assert brute_force_maxcut(Graph.from_edges(2, [(0, 1, 1.0)]))[0] == 1
    assert brute_force_maxcut(complete(3))[0] == 2
    assert brute_force_maxcut(cycle(5))[0] == 4
    with pytest.raises(ValueError):
        brute_force_maxcut(cycle(25))


def test_brute_force_matches_enumeration(rng):
    for seed in range(10):
        r = np.random.default_rng(seed)
        g = random_graph(int(r.integers(2, 10)), 0.5, r, weights=lambda q, k: q.normal(size=k))
        val, x = brute_force_maxcut(g)
        assert val == pytest.approx(_exhaustive_small(g), abs=1e-12)
        assert g.cut_value(x) == pytest.approx(val)


def test_brute_force_chunked_path():
    g = random_graph(18, 0.3, np.random.default_rng(1))
    val, x = brute_force_maxcut(g, chunk_bits=10)
    assert val == brute_force_maxcut(g)[0] and g.cut_value(x) == val


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 0, 1.0)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 3, 1.0)])
    with pytest.raises(ValueError):
        Graph.from_adjacency(np.eye(2))
