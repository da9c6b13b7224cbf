"""Array-kernel propagation: backend agreement and engine equivalence."""
import numpy as np
import pytest

from conftest import VICTIM_PREFIX, random_attack, random_graph
from stealthsim.fastpath import (
    PREF_CUSTOMER,
    PREF_NONE,
    PREF_ORIGIN,
    CsrTopology,
    FastOrigination,
    backend_name,
    build_seeds,
    infected_on_path,
    propagate_fast,
)
from stealthsim.fastpath import kernels_numba, kernels_numpy
from stealthsim.routing import OriginationSpec, propagate
from stealthsim.scenario import AttackKind, attach_adversary
from stealthsim.synth import synth_topology


def _run(kernels, csr, originations, accept=None):
    seeds = build_seeds(csr, originations)
    if accept is None:
        accept = np.ones(len(csr), np.uint8)
    return kernels.propagate_kernel(
        csr.prov_indptr, csr.prov_idx,
        csr.peer_indptr, csr.peer_idx,
        csr.cust_indptr, csr.cust_idx,
        *seeds, accept,
    )


class TestCsr:
    def test_index_order_is_ascending_asn(self, t5_graph):
        csr = CsrTopology.from_graph(t5_graph)
        assert list(csr.asns) == [1, 2, 3, 4, 5, 6]
        assert csr.idx_of(4) == 3

    def test_adjacency_rows(self, t5_graph):
        csr = CsrTopology.from_graph(t5_graph)
        one = csr.idx_of(1)
        assert sorted(csr.asns[csr.customers_of(one)]) == [3, 6]
        assert list(csr.asns[csr.peers_of(one)]) == [2]
        assert list(csr.asns[csr.providers_of(csr.idx_of(5))]) == [3]


class TestBackendAgreement:
    def test_backends_agree_across_random_graphs(self):
        rng = np.random.default_rng(11)
        for trial in range(40):
            g = random_graph(rng, max_nodes=12)
            csr = CsrTopology.from_graph(g)
            nodes = list(g.nodes_sorted())
            victim = int(nodes[int(rng.integers(len(nodes)))])
            origs = [FastOrigination(victim)]
            if rng.random() < 0.5 and len(nodes) > 2:
                other = int(nodes[int(rng.integers(len(nodes)))])
                if other != victim:
                    targets = tuple(
                        int(a) for a in g.neighbors(other) if a != victim
                    )
                    if targets:
                        origs.append(FastOrigination(other, targets))
            accept = None
            if rng.random() < 0.4:
                accept = (rng.random(len(csr)) < 0.8).astype(np.uint8)
            a = _run(kernels_numba, csr, origs, accept)
            b = _run(kernels_numpy, csr, origs, accept)
            for left, right in zip(a, b):
                np.testing.assert_array_equal(left, right, err_msg=f"trial {trial}")

    def test_backends_agree_on_synth_topology(self):
        g = synth_topology(400, seed=5)
        csr = CsrTopology.from_graph(g)
        rng = np.random.default_rng(6)
        infected = (rng.random(len(csr)) < 0.05).astype(np.uint8)
        for victim in rng.choice(csr.asns, 5, replace=False):
            a = _run(kernels_numba, csr, [FastOrigination(int(victim))])
            b = _run(kernels_numpy, csr, [FastOrigination(int(victim))])
            for left, right in zip(a, b):
                np.testing.assert_array_equal(left, right)
            on_a = kernels_numba.on_path_kernel(*a, infected)
            on_b = kernels_numpy.on_path_kernel(*b, infected)
            np.testing.assert_array_equal(on_a, on_b)


class TestEngineEquivalence:
    def test_matches_reference_engine(self):
        rng = np.random.default_rng(23)
        for _ in range(60):
            g = random_graph(rng, max_nodes=10)
            nodes = list(g.nodes_sorted())
            victim = int(nodes[int(rng.integers(len(nodes)))])
            rib = propagate(g, [OriginationSpec(victim, VICTIM_PREFIX)])
            csr = CsrTopology.from_graph(g)
            state = propagate_fast(csr, [FastOrigination(victim)])
            for i, asn in enumerate(csr.asns):
                entry = rib.best(int(asn), VICTIM_PREFIX)
                if entry is None:
                    assert state.pref[i] == PREF_NONE
                    continue
                assert state.dist[i] == len(entry.route.as_path)
                if len(entry.route.as_path) > 1:
                    assert int(csr.asns[state.next_hop[i]]) == entry.next_hop
                else:
                    assert state.pref[i] == PREF_ORIGIN

    def test_contest_matches_engine(self):
        rng = np.random.default_rng(37)
        for _ in range(40):
            g = random_graph(rng, max_nodes=10)
            sc = random_attack(rng, g, AttackKind.EQUALLY_SPECIFIC)
            aug = attach_adversary(g, sc)
            rib = propagate(
                aug,
                [
                    OriginationSpec(sc.victim.origin, VICTIM_PREFIX),
                    sc.malicious,
                ],
            )
            csr = CsrTopology.from_graph(aug)
            state = propagate_fast(
                csr,
                [
                    FastOrigination(sc.victim.origin),
                    FastOrigination(sc.malicious.origin, sc.malicious.announce_to),
                ],
            )
            for i, asn in enumerate(csr.asns):
                entry = rib.best(int(asn), VICTIM_PREFIX)
                if entry is None:
                    assert state.pref[i] == PREF_NONE
                    continue
                assert state.dist[i] == len(entry.route.as_path)
                if len(entry.route.as_path) > 1:
                    assert int(csr.asns[state.next_hop[i]]) == entry.next_hop

    def test_path_indices_reconstruct_engine_paths(self, t5_graph):
        csr = CsrTopology.from_graph(t5_graph)
        state = propagate_fast(csr, [FastOrigination(5)])
        rib = propagate(t5_graph, [OriginationSpec(5, VICTIM_PREFIX)])
        for asn in t5_graph.nodes_sorted():
            idx_path = state.path_indices(csr.idx_of(asn))
            asn_path = tuple(int(csr.asns[i]) for i in idx_path)
            assert asn_path == rib.best(asn, VICTIM_PREFIX).route.as_path


class TestOnPath:
    def test_matches_bruteforce_walk(self):
        rng = np.random.default_rng(41)
        for _ in range(30):
            g = random_graph(rng, max_nodes=10)
            nodes = list(g.nodes_sorted())
            victim = int(nodes[int(rng.integers(len(nodes)))])
            csr = CsrTopology.from_graph(g)
            state = propagate_fast(csr, [FastOrigination(victim)])
            infected = (rng.random(len(csr)) < 0.3)
            on = infected_on_path(state, infected)
            for i in range(len(csr)):
                if state.pref[i] == PREF_NONE:
                    assert not on[i]
                    continue
                expected = any(infected[j] for j in state.path_indices(i))
                assert bool(on[i]) == expected

    def test_spoofed_seed_lengthens_path(self, t5_graph):
        csr = CsrTopology.from_graph(t5_graph)
        plain = propagate_fast(csr, [FastOrigination(6, (1,))])
        spoofed = propagate_fast(csr, [FastOrigination(6, (1,), spoof_origin=5)])
        one = csr.idx_of(1)
        assert plain.dist[one] == 2
        assert spoofed.dist[one] == 3
        assert plain.pref[one] == spoofed.pref[one] == PREF_CUSTOMER

    def test_spoof_target_equal_to_spoofed_origin_is_skipped(self, t5_graph):
        csr = CsrTopology.from_graph(t5_graph)
        state = propagate_fast(csr, [FastOrigination(6, (1,), spoof_origin=1)])
        assert state.pref[csr.idx_of(1)] == PREF_NONE


class TestBackendSelection:
    def test_backend_name_is_known(self):
        assert backend_name() in ("numba", "numpy")
