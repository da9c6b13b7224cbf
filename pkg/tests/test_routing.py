"""Announcements, communities, best-route selection, and propagation."""
import pytest

from stealthsim.errors import ConfigError, SimulationError
from stealthsim.routing import (
    NO_ADVERTISE,
    NO_EXPORT,
    NO_EXPORT_SUBCONFED,
    CommunityAction,
    CommunityRegistry,
    CommunityRule,
    LearnedFrom,
    OriginationSpec,
    Prefix,
    Rib,
    RibEntry,
    RouteAnnouncement,
    effective_action,
    export_allowed,
    format_community,
    make_community,
    parse_community,
    propagate,
    rewrite_community,
    select_best,
)
from stealthsim.topology import CUSTOMER, PEER, PROVIDER

P = Prefix.parse("10.0.0.0/23")


class TestCommunities:
    def test_wellknown_values_are_rfc1997(self):
        assert NO_EXPORT == 0xFFFFFF01
        assert NO_ADVERTISE == 0xFFFFFF02
        assert NO_EXPORT_SUBCONFED == 0xFFFFFF03
        assert NO_EXPORT == make_community(65535, 65281)

    def test_format_parse_roundtrip(self):
        assert format_community(NO_EXPORT) == "65535:65281"
        assert parse_community("65535:65281") == NO_EXPORT
        assert parse_community("174:990") == make_community(174, 990)
        assert format_community(parse_community("0:1")) == "0:1"

    @pytest.mark.parametrize("bad", ["174", "174:", ":990", "174:65536", "65536:1", "a:b"])
    def test_parse_rejects_malformed(self, bad):
        with pytest.raises(ConfigError):
            parse_community(bad)

    def test_wellknown_act_everywhere(self):
        reg = CommunityRegistry()
        assert effective_action(reg, 174, frozenset({NO_EXPORT})) is CommunityAction.NO_EXPORT
        assert effective_action(reg, 9999, frozenset({NO_EXPORT})) is CommunityAction.NO_EXPORT

    def test_scoped_community_acts_only_at_its_as(self):
        rule = CommunityRule(parse_community("174:990"), CommunityAction.NO_EXPORT, scope=174)
        reg = CommunityRegistry((rule,))
        comms = frozenset({parse_community("174:990")})
        assert effective_action(reg, 174, comms) is CommunityAction.NO_EXPORT
        assert effective_action(reg, 3356, comms) is None

    def test_strictest_action_wins(self):
        reg = CommunityRegistry()
        comms = frozenset({NO_EXPORT, NO_ADVERTISE, NO_EXPORT_SUBCONFED})
        assert effective_action(reg, 1, comms) is CommunityAction.NO_ADVERTISE
        assert (
            CommunityAction.NO_ADVERTISE
            > CommunityAction.NO_EXPORT
            > CommunityAction.NO_EXPORT_SUBCONFED
        )

    def test_duplicate_rule_rejected(self):
        rule = CommunityRule(parse_community("174:990"), CommunityAction.NO_EXPORT, scope=174)
        with pytest.raises(ConfigError):
            CommunityRegistry((rule, rule))

    def test_unregistered_community_is_inert(self):
        reg = CommunityRegistry()
        assert effective_action(reg, 1, frozenset({make_community(3, 3)})) is None

    def test_rewrite_community(self):
        assert rewrite_community(174) == make_community(174, 123)
        with pytest.raises(ConfigError):
            rewrite_community(70000)


class TestPrefix:
    def test_parse_and_str(self):
        assert str(P) == "10.0.0.0/23"
        assert P.length == 23

    def test_host_bits_rejected(self):
        with pytest.raises(ConfigError):
            Prefix.parse("10.0.1.0/23")

    @pytest.mark.parametrize("bad", ["10.0.0.0", "10.0.0.0/33", "300.0.0.0/8", "x/8"])
    def test_malformed_rejected(self, bad):
        with pytest.raises(ConfigError):
            Prefix.parse(bad)

    def test_containment(self):
        sub = Prefix.parse("10.0.0.0/24")
        assert P.contains(sub)
        assert P.contains(P)
        assert not sub.contains(P)
        assert not P.contains(Prefix.parse("10.0.2.0/24"))

    def test_first_subprefix_is_lower_half(self):
        assert P.first_subprefix() == Prefix.parse("10.0.0.0/24")
        with pytest.raises(ConfigError):
            Prefix.parse("10.0.0.1/32").first_subprefix()

    def test_ordering_is_deterministic(self):
        a, b = Prefix.parse("10.0.0.0/24"), Prefix.parse("10.0.1.0/24")
        assert sorted([b, a]) == [a, b]


class TestAnnouncementAndEntry:
    def test_origin_is_path_tail(self):
        ann = RouteAnnouncement(P, (4, 2, 1, 3, 5))
        assert ann.origin == 5

    def test_empty_and_looped_paths_rejected(self):
        with pytest.raises(ConfigError):
            RouteAnnouncement(P, ())
        with pytest.raises(ConfigError):
            RouteAnnouncement(P, (1, 2, 1))

    def test_next_hop(self):
        entry = RibEntry(RouteAnnouncement(P, (4, 2, 5)), LearnedFrom.PEER)
        assert entry.next_hop == 2
        origin = RibEntry(RouteAnnouncement(P, (5,)), LearnedFrom.ORIGIN)
        assert origin.next_hop == 5

    def test_origin_entries_must_have_unit_path(self):
        with pytest.raises(ConfigError):
            RibEntry(RouteAnnouncement(P, (1, 5)), LearnedFrom.ORIGIN)

    def test_rib_rejects_second_entry_for_same_prefix(self):
        rib = Rib()
        rib.install(4, RibEntry(RouteAnnouncement(P, (4, 2)), LearnedFrom.PEER))
        with pytest.raises(SimulationError):
            rib.install(4, RibEntry(RouteAnnouncement(P, (4, 3)), LearnedFrom.CUSTOMER))


class TestSelectBest:
    def test_customer_beats_shorter_peer(self):
        long_customer = (RouteAnnouncement(P, (7, 8, 9, 5)), LearnedFrom.CUSTOMER)
        short_peer = (RouteAnnouncement(P, (2, 5)), LearnedFrom.PEER)
        best = select_best([short_peer, long_customer])
        assert best.learned_from is LearnedFrom.CUSTOMER
        assert best.route.as_path == (7, 8, 9, 5)

    def test_peer_beats_provider(self):
        peer = (RouteAnnouncement(P, (2, 1, 5)), LearnedFrom.PEER)
        provider = (RouteAnnouncement(P, (3, 5)), LearnedFrom.PROVIDER)
        assert select_best([provider, peer]).learned_from is LearnedFrom.PEER

    def test_shorter_path_wins_within_class(self):
        a = (RouteAnnouncement(P, (9, 8, 5)), LearnedFrom.CUSTOMER)
        b = (RouteAnnouncement(P, (4, 5)), LearnedFrom.CUSTOMER)
        assert select_best([a, b]).route.as_path == (4, 5)

    def test_lowest_next_hop_breaks_full_ties(self):
        # the head of an as-heard path is the neighbor it came from
        a = (RouteAnnouncement(P, (9, 5)), LearnedFrom.CUSTOMER)
        b = (RouteAnnouncement(P, (4, 5)), LearnedFrom.CUSTOMER)
        assert select_best([a, b]).route.as_path == (4, 5)

    def test_single_candidate_is_identity(self):
        only = (RouteAnnouncement(P, (2, 5)), LearnedFrom.PEER)
        picked = select_best([only])
        assert picked.route is only[0] and picked.learned_from is LearnedFrom.PEER

    def test_mixed_prefixes_rejected(self):
        other = Prefix.parse("10.0.2.0/24")
        with pytest.raises(ConfigError):
            select_best(
                [
                    (RouteAnnouncement(P, (1, 5)), LearnedFrom.PEER),
                    (RouteAnnouncement(other, (1, 5)), LearnedFrom.PEER),
                ]
            )

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            select_best([])


class TestExportPolicy:
    @pytest.mark.parametrize(
        "learned,role,allowed",
        [
            (LearnedFrom.CUSTOMER, PROVIDER, True),
            (LearnedFrom.CUSTOMER, PEER, True),
            (LearnedFrom.CUSTOMER, CUSTOMER, True),
            (LearnedFrom.ORIGIN, PROVIDER, True),
            (LearnedFrom.PEER, CUSTOMER, True),
            (LearnedFrom.PEER, PEER, False),
            (LearnedFrom.PEER, PROVIDER, False),
            (LearnedFrom.PROVIDER, CUSTOMER, True),
            (LearnedFrom.PROVIDER, PEER, False),
            (LearnedFrom.PROVIDER, PROVIDER, False),
        ],
    )
    def test_valley_free_matrix(self, learned, role, allowed):
        path = (1,) if learned is LearnedFrom.ORIGIN else (1, 5)
        entry = RibEntry(RouteAnnouncement(P, path), learned)
        assert export_allowed(entry, role) is allowed

    def test_locks_block_all_export(self):
        entry = RibEntry(RouteAnnouncement(P, (1, 5)), LearnedFrom.CUSTOMER, export_locked=True)
        assert not export_allowed(entry, CUSTOMER)
        entry = RibEntry(RouteAnnouncement(P, (1, 5)), LearnedFrom.CUSTOMER, advertise_locked=True)
        assert not export_allowed(entry, CUSTOMER)


class TestPropagation:
    def test_t5_benign_paths(self, t5_graph):
        rib = propagate(t5_graph, [OriginationSpec(5, P)])
        assert rib.best(4, P).route.as_path == (4, 2, 1, 3, 5)
        assert rib.best(2, P).route.as_path == (2, 1, 3, 5)
        assert rib.best(5, P).learned_from is LearnedFrom.ORIGIN
        assert rib.holders(P) == [1, 2, 3, 4, 5, 6]

    def test_t5_valley_free_blocks_peer_to_peer_transit(self, t5_graph):
        # 4's route climbs 5->3->1, crosses the single 1-2 peer edge, descends to 4;
        # 2's peer-learned route must not be re-exported upward, which the
        # destination set already proves: everything below 2 got it only via 2.
        rib = propagate(t5_graph, [OriginationSpec(4, P)])
        # 4 -> 2 (customer route) -> peer 1 -> customers 3, 6 -> 5
        assert rib.best(1, P).route.as_path == (1, 2, 4)
        assert rib.best(3, P).route.as_path == (3, 1, 2, 4)

    def test_announce_to_limits_initial_export(self, t5_graph):
        rib = propagate(t5_graph, [OriginationSpec(6, P, announce_to=(1,))])
        assert rib.best(1, P).route.as_path == (1, 6)
        # 1 learned it from a customer, so it still spreads from there
        assert rib.best(4, P).route.as_path == (4, 2, 1, 6)

    def test_no_export_installs_but_never_spreads(self, t5_graph):
        rib = propagate(
            t5_graph,
            [OriginationSpec(6, P, communities=frozenset({NO_EXPORT}), announce_to=(1,))],
        )
        assert rib.holders(P) == [1, 6]
        entry = rib.best(1, P)
        assert entry.export_locked and not entry.advertise_locked

    def test_no_advertise_sets_both_visibility_locks(self, t5_graph):
        rib = propagate(
            t5_graph,
            [OriginationSpec(6, P, communities=frozenset({NO_ADVERTISE}), announce_to=(1,))],
        )
        entry = rib.best(1, P)
        assert entry.advertise_locked
        assert rib.holders(P) == [1, 6]

    def test_scoped_community_only_locks_named_as(self, t5_graph):
        tag = parse_community("3:66")
        reg = CommunityRegistry((CommunityRule(tag, CommunityAction.NO_EXPORT, scope=3),))
        rib = propagate(
            t5_graph, [OriginationSpec(5, P, communities=frozenset({tag}))], reg=reg
        )
        # stops at 3: nothing beyond it hears the route
        assert rib.holders(P) == [3, 5]
        rib2 = propagate(
            t5_graph, [OriginationSpec(4, P, communities=frozenset({tag}))], reg=reg
        )
        # same tag originated under 2 spreads everywhere except past 3
        assert rib2.best(1, P) is not None
        assert rib2.best(3, P).export_locked
        assert rib2.best(5, P) is None

    def test_multi_prefix_originations_are_independent(self, t5_graph):
        q = Prefix.parse("10.0.0.0/24")
        rib = propagate(t5_graph, [OriginationSpec(5, P), OriginationSpec(6, q)])
        assert rib.best(4, P).route.as_path == (4, 2, 1, 3, 5)
        assert rib.best(4, q).route.as_path == (4, 2, 1, 6)

    def test_duplicate_origination_rejected(self, t5_graph):
        with pytest.raises(ConfigError):
            propagate(t5_graph, [OriginationSpec(5, P), OriginationSpec(5, P)])

    def test_unknown_origin_rejected(self, t5_graph):
        with pytest.raises(ConfigError):
            propagate(t5_graph, [OriginationSpec(99, P)])

    def test_announce_to_requires_adjacency(self, t5_graph):
        with pytest.raises(ConfigError):
            propagate(t5_graph, [OriginationSpec(6, P, announce_to=(4,))])

    def test_spoofed_origin_appends_fake_tail(self, t5_graph):
        rib = propagate(
            t5_graph, [OriginationSpec(6, P, announce_to=(1,), spoof_origin=5)]
        )
        assert rib.best(1, P).route.as_path == (1, 6, 5)
        assert rib.best(1, P).route.origin == 5

    def test_equally_specific_contest_prefers_shorter_customer_route(self, t5_graph):
        rib = propagate(
            t5_graph,
            [OriginationSpec(5, P), OriginationSpec(6, P, announce_to=(1,))],
        )
        assert rib.best(1, P).route.as_path == (1, 6)
        assert rib.best(4, P).route.as_path == (4, 2, 1, 6)
        assert rib.best(3, P).route.as_path == (3, 5)
