import json
import math
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from congest_mrct import mrct, oracle
from congest_mrct.errors import InvalidTerminalSet, SamplingFailure
from congest_mrct.graph import TerminalSet, diameter, generate
from congest_mrct.mrct import (SamplingParams, announce_tree, det_bound_holds, good_nodes, rand_bound_holds,
                               run_deterministic, run_randomized, sample_terminals, sampling_params)
from congest_mrct.primitives import validate_tree
from congest_mrct.sptrees import compute_dprime


def test_k5_hits_the_bound_exactly():
    g = generate("clique", 5)
    S = TerminalSet.all_nodes(g)
    res = run_deterministic(g, S)
    assert res.rc_chosen == 32
    assert oracle.rc_exact(g, S) == 20
    assert res.rc_chosen * 5 == (2 * 5 - 2) * 20  # ratio 1.6 = 2 - 2/5
    assert res.chosen_root == 1  # all trees cost the same, smallest ID wins


@pytest.mark.parametrize("n", [2, 3, 6, 9])
def test_path_is_its_own_answer(n):
    g = generate("path", n, max_delay=3, seed=n)
    res = run_deterministic(g, TerminalSet.all_nodes(g))
    assert res.rc_chosen == oracle.rc_exact(g, g.nodes)
    edges = {(min(u, p), max(u, p)) for u, p in res.tree.items() if p is not None}
    assert edges == {(u, v) for u, v, _ in g.edges()}


def test_random_graph_five_terminals():
    g = generate("random_connected", 18, p=0.25, seed=11, max_delay=4)
    S = TerminalSet(g, [2, 5, 9, 13, 17])
    res = run_deterministic(g, S)
    assert det_bound_holds(res.rc_chosen, oracle.rc_exact(g, S), 5)
    assert res.rc_chosen == min(res.rc_all.values())
    assert set(res.rc_all) == set(S)


def test_too_few_terminals():
    g = generate("path", 3)
    with pytest.raises(InvalidTerminalSet):
        run_deterministic(g, TerminalSet(g, [1]))


def test_result_json_fields():
    g = generate("clique", 4)
    res = run_deterministic(g, TerminalSet.all_nodes(g))
    d = json.loads(res.to_json(rc_graph=12))
    assert set(d) == {"mode", "chosen_root", "rc_chosen", "rc_graph_oracle", "ratio", "bound", "rounds_used",
                      "max_edge_bits", "sample"}
    assert d["ratio"] == 1.5 == d["bound"] and d["sample"] is None


def test_phase_accounting():
    g = generate("grid", 16, max_delay=2, seed=1)
    S = TerminalSet(g, [1, 4, 13, 16])
    res = run_deterministic(g, S)
    K = len(S) + 2 * res.dprime
    assert res.phases["trees"] == res.phases["costs"] == K + 1
    assert res.rounds_used == sum(res.phases.values()) - (len(res.phases) - 1)
    assert res.rounds_used <= res.round_budget(diameter(g))


def test_announce_k4_and_p3():
    g = generate("clique", 4)
    res = run_deterministic(g, TerminalSet.all_nodes(g))
    assert res.tree == {1: None, 2: 1, 3: 1, 4: 1}
    g = generate("path", 3)
    dp = compute_dprime(g)
    assert announce_tree(g, dp.leader_parent, 3).root == 3
    res = run_deterministic(g, TerminalSet(g, [1, 3]))
    assert res.chosen_root == 1 and res.tree == {1: None, 2: 1, 3: 2}


graphs = st.builds(
    lambda n, p, seed, md: generate("random_connected", n, p=p, seed=seed, max_delay=md),
    st.integers(3, 18), st.floats(0.15, 0.9), st.integers(0, 10_000), st.integers(1, 4),
)


@given(graphs, st.data())
def test_deterministic_invariants(g, data):
    S = TerminalSet(g, data.draw(st.sets(st.integers(1, g.n), min_size=2, max_size=g.n)))
    res = run_deterministic(g, S)
    validate_tree(g, res.tree)
    rc_g = oracle.rc_exact(g, S)
    assert det_bound_holds(res.rc_chosen, rc_g, len(S))
    # the min-SSRC tree already satisfies the bound through |S| * SSRC
    ssrc = oracle.all_ssrc(g, S)
    v = min(ssrc, key=lambda u: (ssrc[u], u))
    assert res.rc_all[v] * len(S) <= (2 * len(S) - 2) * len(S) * ssrc[v]
    assert res.rc_chosen <= res.rc_all[v]


# ---------------------------------------------------------------- sampling


def test_sampling_params_example():
    p = sampling_params(1000, 1000, 10, 0.5)
    assert p.beta == 0.5 and p.gamma == 5 and p.s == 35 and not p.fallback
    assert math.log(1000) / 10 > 0.5


def test_sampling_params_branches():
    # ln 100 / 3 > 1, so beta = 1, gamma = 3, s = ceil(3 ln 100) = 14
    assert sampling_params(100, 14, 3, 1.0).fallback
    assert not sampling_params(100, 15, 3, 1.0).fallback
    huge = sampling_params(1000, 1000, 1, 100.0)
    assert huge.gamma == 2 and huge.s == math.ceil(2 * math.log(1000))
    small = sampling_params(64, 64, 20, 1.0)
    assert small.beta == pytest.approx(math.log(64) / 20)
    with pytest.raises(ValueError):
        sampling_params(10, 10, 2, 0)


def star_setup(n=30):
    g = generate("star", n)
    S = TerminalSet.all_nodes(g)
    return g, S, compute_dprime(g, S)


def test_sample_is_uniform_enough():
    g, S, dp = star_setup()
    params = SamplingParams(alpha=1.0, beta=1.0, gamma=3, s=5, fallback=False)
    hits = Counter()
    for seed in range(300):
        smp = sample_terminals(g, S, params, dp, seed=seed)
        assert len(smp.sample) == 5
        hits.update(smp.sample)
    # each terminal is expected 50 times (sd about 6.6)
    assert min(hits[v] for v in S) > 20 and max(hits.values()) < 80


def test_sample_is_deterministic_per_seed():
    g, S, dp = star_setup()
    params = SamplingParams(alpha=1.0, beta=1.0, gamma=3, s=7, fallback=False)
    a = sample_terminals(g, S, params, dp, seed=5)
    b = sample_terminals(g, S, params, dp, seed=5)
    assert a.sample == b.sample and a.attempts == b.attempts


def test_short_sample_triggers_a_restart():
    g, S, dp = star_setup()
    params = SamplingParams(alpha=1.0, beta=1.0, gamma=3, s=10, fallback=False)
    runs = [sample_terminals(g, S, params, dp, seed=seed, c_sample=1.0) for seed in range(30)]
    restarted = [r for r in runs if r.attempts > 1]
    assert restarted
    for r in restarted:
        assert r.sub_sample_sizes[0] < 10 <= r.sub_sample_sizes[-1]
        assert len(r.sample) == 10


def test_sampling_failure(monkeypatch):
    g, S, dp = star_setup()
    monkeypatch.setattr(mrct, "MAX_SAMPLING_ATTEMPTS", 0)
    with pytest.raises(SamplingFailure):
        sample_terminals(g, S, SamplingParams(1.0, 1.0, 3, 5, False), dp)
    with pytest.raises(ValueError):
        sample_terminals(g, S, SamplingParams(1.0, 1.0, 3, 5, False), dp, c_sample=0.5)


def test_randomized_falls_back_on_small_terminal_sets():
    g = generate("random_connected", 12, p=0.4, seed=2)
    S = TerminalSet(g, [1, 2, 3, 4])
    res = run_randomized(g, S, alpha=1.0)
    assert res.fallback and res.sample is None
    assert res.rc_chosen == run_deterministic(g, S).rc_chosen


def test_randomized_on_a_clique_matches_deterministic():
    g = generate("clique", 40)
    S = TerminalSet.all_nodes(g)
    res = run_randomized(g, S, alpha=1.0, seed=3)
    assert not res.fallback and len(res.sample) == res.params.s < 40
    assert res.rc_chosen == run_deterministic(g, S).rc_chosen == 2 * 39 ** 2


@pytest.mark.parametrize("seed", range(4))
def test_randomized_run(seed):
    g = generate("random_connected", 60, p=0.1, seed=seed, max_delay=2)
    S = TerminalSet.all_nodes(g)
    res = run_randomized(g, S, alpha=1.0, seed=seed)
    assert set(res.sample) <= set(S) and len(res.sample) == res.params.s
    assert set(res.rc_all) == set(res.sample)
    assert res.phases["trees"] == len(res.sample) + 2 * res.dprime + 1
    assert res.rounds_used <= 4 * (res.params.s + res.dprime) + 12 * res.dprime
    rc_g = oracle.rc_exact(g, S)
    good = good_nodes(oracle.all_ssrc(g, S), res.params.gamma)
    if good & set(res.sample):
        assert rand_bound_holds(res.rc_chosen, rc_g, len(S), res.params.beta)
    validate_tree(g, res.tree)


def test_good_nodes():
    ssrc = {1: 10, 2: 5, 3: 7, 4: 5, 5: 20, 6: 9}
    assert good_nodes(ssrc, 3) == {2, 4}
    assert good_nodes(ssrc, 2) == {2, 3, 4}
    assert good_nodes(ssrc, 6) == {2, 4}


def test_bound_helpers_are_exact():
    assert det_bound_holds(8, 5, 5) and not det_bound_holds(9, 5, 5)
    assert rand_bound_holds(13, 5, 5, 1.0) and not rand_bound_holds(14, 5, 5, 1.0)
