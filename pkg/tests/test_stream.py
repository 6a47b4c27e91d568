from __future__ import annotations

import random

import pytest

from bdmatching.oracle import replay_reference
from bdmatching.stream import (
    EdgeEvent,
    GeneratorConfig,
    InvalidStream,
    StreamSpec,
    canonical,
    dumps,
    edge_set,
    final_graph,
    generate,
    greedy_levels,
    loads,
    read_stream,
    replay_degrees,
    validate_stream,
    write_stream,
)


def spec_of(n, K, ops):
    return StreamSpec.from_ops(n, K, ops)


def random_valid_stream(rng: random.Random, n: int, events: int, K: int) -> StreamSpec:
    present: set = set()
    ops, dels = [], 0
    while len(ops) < events:
        if present and dels < K and rng.random() < 0.3:
            e = rng.choice(sorted(present))
            present.remove(e)
            dels += 1
            ops.append(("-", *e))
        else:
            u, v = rng.sample(range(n), 2)
            e = canonical(u, v)
            if e in present:
                continue
            present.add(e)
            ops.append(("+", *e))
    return spec_of(n, K, ops)


class TestValidate:
    def test_duplicate_insert(self):
        report = validate_stream(spec_of(2, 0, [("+", 0, 1), ("+", 0, 1)]))
        assert not report and report.seq == 2 and "duplicate" in report.reason

    def test_reinsertion_after_delete(self):
        report = validate_stream(spec_of(2, 1, [("+", 0, 1), ("-", 0, 1), ("+", 0, 1)]))
        assert report.ok and report.edges == {(0, 1)}

    def test_delete_absent(self):
        report = validate_stream(spec_of(2, 2, [("+", 0, 1), ("-", 0, 1), ("-", 0, 1)]))
        assert not report and report.seq == 3

    def test_budget(self):
        report = validate_stream(spec_of(3, 1, [("+", 0, 1), ("+", 1, 2), ("-", 0, 1), ("-", 1, 2)]))
        assert not report and report.seq == 4 and "budget" in report.reason

    def test_vertex_range_and_canonical_form(self):
        bad = StreamSpec(3, 0, (EdgeEvent(1, "+", (2, 1)),))
        assert not validate_stream(bad)
        assert not validate_stream(spec_of(3, 0, [("+", 0, 3)]))

    def test_from_ops_canonicalizes(self):
        spec = spec_of(3, 0, [("+", 2, 0)])
        assert spec.events[0].edge == (0, 2) and spec.events[0].seq == 1


class TestFinalGraph:
    def test_empty(self):
        assert edge_set(final_graph(spec_of(4, 0, []))) == set()

    def test_set_semantics(self):
        g = final_graph(spec_of(3, 1, [("+", 0, 1), ("+", 1, 2), ("-", 0, 1)]))
        assert edge_set(g) == {(1, 2)}

    def test_invalid_raises(self):
        with pytest.raises(InvalidStream):
            final_graph(spec_of(2, 0, [("+", 0, 1), ("-", 0, 1)]))

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_naive_replay(self, seed):
        spec = random_valid_stream(random.Random(seed), 10, 50, 10)
        assert final_graph(spec) == replay_reference(spec) == final_graph(spec)

    def test_large_replay(self):
        spec = random_valid_stream(random.Random(99), 200, 10_000, 3000)
        assert edge_set(final_graph(spec)) == edge_set(replay_reference(spec))

    def test_degrees(self):
        spec = random_valid_stream(random.Random(5), 12, 80, 20)
        g = final_graph(spec)
        assert replay_degrees(spec) == {v: len(g[v]) for v in range(12)}


class TestOnePass:
    def test_second_iteration_fails(self):
        it = spec_of(2, 0, [("+", 0, 1)]).stream()
        assert len(list(it)) == 1
        with pytest.raises(RuntimeError):
            list(it)


class TestTextFormat:
    def test_roundtrip(self, tmp_path):
        spec = random_valid_stream(random.Random(1), 9, 40, 5)
        path = tmp_path / "s.txt"
        write_stream(spec, path)
        raw = path.read_bytes()
        assert raw.startswith(b"9 5\n") and b"\r" not in raw
        assert read_stream(path) == spec
        assert loads(dumps(spec)) == spec

    def test_bad_line(self):
        with pytest.raises(InvalidStream):
            loads("3 0\n* 0 1\n")
        with pytest.raises(InvalidStream):
            loads("")


class TestGenerators:
    def test_erdos_renyi_complete(self):
        spec = generate(GeneratorConfig("erdos_renyi", n=4, p=1.0, K=0, seed=3))
        assert len(spec.events) == 6 and spec.num_deletions == 0

    @pytest.mark.parametrize("kind", ["erdos_renyi", "matching_killer", "block_bipartite"])
    def test_deterministic_and_valid(self, kind):
        cfg = GeneratorConfig(kind, n=30, K=6, p=0.4, seed=11, blocks=3, block_size=8)
        a, b = generate(cfg), generate(cfg)
        assert dumps(a) == dumps(b)
        assert validate_stream(a)
        assert a.num_deletions <= 6

    def test_reinsertion_streams_validate(self):
        for seed in range(20):
            spec = generate(GeneratorConfig("erdos_renyi", n=12, K=8, p=0.5, seed=seed, reinsert=0.7))
            assert validate_stream(spec)

    @pytest.mark.parametrize("seed", range(10))
    def test_matching_killer_hits_greedy_matched_edges(self, seed):
        spec = generate(GeneratorConfig("matching_killer", n=8, K=2, p=0.6, seed=seed))
        inserted = [ev.edge for ev in spec.events if ev.is_insert]
        deleted = [ev.edge for ev in spec.events if not ev.is_insert]
        assert len(deleted) == 2
        # step-through replay of the greedy levels on the insertion order
        levels: list[dict[int, int]] = [{}, {}]
        matched = set()
        for u, v in inserted:
            for level in levels:
                if u not in level and v not in level:
                    level[u], level[v] = v, u
                    matched.add((u, v))
                    break
        assert all(e in matched for e in deleted)
        first_insert = {}
        for ev in spec.events:
            if ev.is_insert:
                first_insert.setdefault(ev.edge, ev.seq)
            else:
                assert first_insert[ev.edge] < ev.seq

    def test_greedy_levels(self):
        star = [(0, i) for i in range(1, 5)]
        assert greedy_levels(star, 3) == [[(0, 1)], [(0, 2)], [(0, 3)]]

    def test_block_bipartite_components(self):
        spec = generate(GeneratorConfig("block_bipartite", K=4, p=0.9, seed=2, blocks=2, block_size=10))
        assert validate_stream(spec) and spec.n == 20
        parent = list(range(spec.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for ev in spec.events:
            if ev.is_insert:
                parent[find(ev.edge[0])] = find(ev.edge[1])
        groups = {find(v) for v in range(spec.n)}
        assert len(groups) == 2
        assert {find(v) for v in range(10)} != {find(v) for v in range(10, 20)}

    def test_infeasible_k(self):
        with pytest.raises(ValueError):
            generate(GeneratorConfig("erdos_renyi", n=4, p=1.0, K=7))
        with pytest.raises(ValueError):
            generate(GeneratorConfig("no_such_kind", n=4))
