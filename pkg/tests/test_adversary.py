"""Adversary construction tests: openings, tails, bounds, and full games."""

import math
import random
from collections import Counter

import pytest

from dscp.adversary import (
    MAX_BOUND_Q,
    BitUniverse,
    BottleneckSet,
    ScomAllocationView,
    SplitRecord,
    bound_sa,
    bound_sb,
    derive_structure,
    gen_scom,
    gen_tail,
    gen_theorem2,
    max_bound,
    play_game,
    transcript_to_text,
)
from dscp.core import (
    Allocation,
    Subset,
    Universe,
    count_covers,
    frequencies,
    is_set_cover,
    parse_instance,
)
from dscp.online import GreedyCover, OnlineAlgorithm, PolyOn


class Scripted(OnlineAlgorithm):
    """Replays a fixed opening script, then a constant default id."""

    name = "scripted"

    def __init__(self, opening, default=0):
        self.opening = list(opening)
        self.default = default
        self.step = 0

    def init(self, universe, fmin):
        self.step = 0

    def assign(self, subset):
        i = self.step
        self.step += 1
        return self.opening[i] if i < len(self.opening) else self.default


def all_partitions(total):
    """Integer partitions as non-increasing tuples (oracle helper)."""
    if total == 0:
        return [()]
    out = []
    for first in range(total, 0, -1):
        for rest in all_partitions(total - first):
            if not rest or rest[0] <= first:
                out.append((first,) + rest)
    return out


def matching_oracle(sizes):
    """Max covers against the nested tail, by brute force.

    A class of size d holds its bottleneck only in the first d nested tail
    subsets, and each tail subset can complete at most one partition, so the
    answer is a maximum matching between classes and slots 1..d."""
    best = 0

    def rec(i, used, acc):
        nonlocal best
        best = max(best, acc)
        if i == len(sizes):
            return
        rec(i + 1, used, acc)
        for slot in range(1, sizes[i] + 1):
            if slot not in used:
                rec(i + 1, used | {slot}, acc + 1)

    rec(0, frozenset(), 0)
    return best


# ---------------------------------------------------------------------------
# universe and opening subsets
# ---------------------------------------------------------------------------

def test_bit_universe():
    bu = BitUniverse(3)
    assert bu.n == 8
    assert bu.universe == Universe(8)
    assert bu.bit(6, 0) == 0
    assert bu.bit(6, 1) == 1
    assert bu.bit(6, 2) == 1
    with pytest.raises(ValueError):
        BitUniverse(0)


def test_gen_scom_frozen():
    assert gen_scom(2) == [Subset((1, 3)), Subset((2, 3))]
    assert gen_scom(3) == [
        Subset((1, 3, 5, 7)),
        Subset((2, 3, 6, 7)),
        Subset((4, 5, 6, 7)),
    ]


def test_gen_scom_shape():
    for q in range(1, 8):
        opening = gen_scom(q)
        assert len(opening) == q
        assert all(len(s) == 1 << (q - 1) for s in opening)
        # element 0 appears nowhere, so the opening alone has fmin 0
        assert frequencies(opening, Universe(1 << q)).fmin == 0


# ---------------------------------------------------------------------------
# two-stream lower-bound sequences
# ---------------------------------------------------------------------------

def test_gen_theorem2_frozen():
    v1 = gen_theorem2(4, 8, 1)
    assert v1 == [Subset((0, 1)), Subset((0, 2)), Subset((0, 3))] \
        + [Subset((0,))] * 5
    v2 = gen_theorem2(4, 8, 2)
    assert v2 == [
        Subset((0, 1)), Subset((0, 2)), Subset((0, 3)),
        Subset((2, 3)), Subset((1, 3)), Subset((1, 2)),
        Subset((1,)), Subset((1,)),
    ]
    # shared prefix: a deterministic algorithm cannot tell them apart early
    assert v1[:3] == v2[:3]


def test_gen_theorem2_fmin():
    u = Universe(4)
    assert frequencies(gen_theorem2(4, 8, 1), u).fmin == 1
    assert frequencies(gen_theorem2(4, 8, 2), u).fmin == 3


def test_gen_theorem2_errors():
    with pytest.raises(ValueError):
        gen_theorem2(4, 8, 3)
    with pytest.raises(ValueError):
        gen_theorem2(1, 8, 1)
    with pytest.raises(ValueError):
        gen_theorem2(4, 2, 1)
    with pytest.raises(ValueError):
        gen_theorem2(4, 5, 2)


# ---------------------------------------------------------------------------
# structure derivation
# ---------------------------------------------------------------------------

def test_view_validation():
    view = ScomAllocationView(3, ((0,), (1, 2)))
    assert view.sizes == (1, 2)
    assert view.max_size == 2
    assert view.class_counts() == {1: 1, 2: 1}
    with pytest.raises(ValueError):
        ScomAllocationView(2, ((0, 1), ()))
    with pytest.raises(ValueError):
        ScomAllocationView(2, ((0,), (0,)))
    with pytest.raises(ValueError):
        ScomAllocationView(2, ((0,), (5,)))
    with pytest.raises(ValueError):
        ScomAllocationView(2, ((0,),))


def test_derive_structure_no_split():
    view, bones = derive_structure(Allocation((0, 1, 1)), 3)
    assert view.classes == ((0,), (1, 2))
    assert view.split is None
    assert bones.elements == (6, 1)
    assert bones.as_set() == {1, 6}
    assert bones.non_bottlenecks() == [0, 2, 3, 4, 5, 7]


def test_derive_structure_two_singletons():
    view, bones = derive_structure(Allocation((0, 1)), 2)
    assert view.classes == ((0,), (1,))
    assert view.split is None
    assert bones.elements == (2, 1)


def test_derive_structure_splits_oversized():
    view, bones = derive_structure(Allocation((0, 0, 0, 0)), 4)
    assert view.split == SplitRecord(0, (0, 1), (2, 3))
    assert view.classes == ((0, 1), (2, 3))
    assert bones.elements == (12, 3)


def test_derive_structure_wrong_size():
    with pytest.raises(ValueError):
        derive_structure(Allocation((0, 0, 0)), 4)


def test_bottleneck_zeros_match_class():
    rng = random.Random(0x5C00)
    for _ in range(50):
        q = rng.randint(2, 8)
        alloc = Allocation(tuple(rng.randrange(q) for _ in range(q)))
        view, bones = derive_structure(alloc, q)
        assert len(set(bones.elements)) == len(view.classes)
        for cls, b in zip(view.classes, bones.elements):
            zeros = {k for k in range(q) if not (b >> k) & 1}
            assert zeros == set(cls)


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------

def test_gen_tail_frozen_sa():
    structure = derive_structure(Allocation((0, 1, 1)), 3)
    tail = gen_tail(structure, 3, "sa")
    assert tail[:3] == [Subset((6,)), Subset((1,)), Subset((1,))]
    filler = tail[3:]
    assert filler == [Subset((e,))
                      for e in (0, 2, 3, 4, 5, 7) for _ in range(3)]


def test_gen_tail_frozen_sb():
    structure = derive_structure(Allocation((0, 1, 1)), 3)
    tail = gen_tail(structure, 3, "sb")
    assert tail[:2] == [Subset((1, 6)), Subset((1,))]
    assert tail[2:] == [Subset((e,))
                        for e in (0, 2, 3, 4, 5, 7) for _ in range(3)]


def test_gen_tail_accepts_uppercase_variant():
    structure = derive_structure(Allocation((0, 1)), 2)
    assert gen_tail(structure, 2, "SA") == gen_tail(structure, 2, "sa")


def test_gen_tail_rejects_wrong_q():
    structure = derive_structure(Allocation((0, 1)), 2)
    with pytest.raises(ValueError):
        gen_tail(structure, 3, "sa")
    with pytest.raises(ValueError):
        gen_tail(structure, 2, "sc")


def test_tail_scarcity_laws():
    rng = random.Random(0x7A11)
    for _ in range(40):
        q = rng.randint(2, 7)
        alloc = Allocation(tuple(rng.randrange(q) for _ in range(q)))
        structure = derive_structure(alloc, q)
        view, bones = structure
        opening = gen_scom(q)
        for variant in ("sa", "sb"):
            tail = gen_tail(structure, q, variant)
            seq = opening + tail
            table = frequencies(seq, Universe(1 << q))
            # the declared fmin of a full game sequence is exactly q ...
            assert table.fmin == q
            # ... and the bottlenecks are the scarce elements sitting at it
            tally = Counter(e for s in seq for e in s)
            for cls, b in zip(view.classes, bones.elements):
                assert tally[b] == q
            # every bottleneck copy is rationed before the singleton filler
            n_rationed = len(tail) - q * len(bones.non_bottlenecks())
            for s in tail[n_rationed:]:
                assert len(s) == 1 and s.members[0] not in bones.as_set()


def test_cross_class_pair_covers_all_bottlenecks():
    rng = random.Random(0x9A1)
    for _ in range(40):
        q = rng.randint(2, 8)
        alloc = Allocation(tuple(rng.randrange(q) for _ in range(q)))
        view, bones = derive_structure(alloc, q)
        opening = gen_scom(q)
        unions = [set().union(*(opening[p].members for p in cls))
                  for cls in view.classes]
        for i in range(len(unions)):
            for j in range(i + 1, len(unions)):
                assert bones.as_set() <= unions[i] | unions[j]


# ---------------------------------------------------------------------------
# structural bounds
# ---------------------------------------------------------------------------

def test_bound_sa_frozen():
    assert bound_sa((1, 2), 3) == 2
    assert bound_sa((1, 1, 1, 1), 4) == 1
    assert bound_sa((2, 2), 4) == 2
    assert bound_sa((3, 3, 3, 2, 2, 1), 14) == 6


def test_bound_sb_frozen():
    assert bound_sb((1, 2), 3) == 2
    assert bound_sb((1, 1, 1, 1), 4) == 1
    assert bound_sb((2, 2), 4) == 2
    assert bound_sb((4, 3, 2, 1), 10) == 4


def test_bound_validation():
    for fn in (bound_sa, bound_sb):
        with pytest.raises(ValueError):
            fn((1, 2), 4)
        with pytest.raises(ValueError):
            fn((0, 3), 3)


def test_bound_sb_matches_matching_oracle():
    for q in range(1, 10):
        for sizes in all_partitions(q):
            assert bound_sb(sizes, q) == matching_oracle(sizes), sizes


def test_bound_sb_never_beats_bound_sa():
    for q in range(1, 13):
        for sizes in all_partitions(q):
            assert 1 <= bound_sb(sizes, q) <= bound_sa(sizes, q) <= q


def test_max_bound_frozen():
    assert max_bound(14, "sa") == (6, (3, 3, 3, 2, 2, 1))
    assert max_bound(10, "sb") == (4, (4, 3, 2, 1))
    assert max_bound(16, "sb")[0] == 5
    assert max_bound(1, "sb") == (1, (1,))
    assert max_bound(3, "SA") == max_bound(3, "sa")


def test_max_bound_sb_closed_form():
    # the best nested-tail structure is the staircase 1+2+...+k <= q
    for q in range(1, MAX_BOUND_Q + 1):
        expect = (math.isqrt(8 * q + 1) - 1) // 2
        assert max_bound(q, "sb")[0] == expect


def test_max_bound_validation():
    with pytest.raises(ValueError):
        max_bound(0, "sa")
    with pytest.raises(ValueError):
        max_bound(MAX_BOUND_Q + 1, "sa")
    with pytest.raises(ValueError):
        max_bound(5, "sx")


# ---------------------------------------------------------------------------
# full games
# ---------------------------------------------------------------------------

def test_play_game_greedy_frozen():
    res = play_game(GreedyCover(), 4, "sb")
    assert res.t_online == 1
    assert res.bound == 2
    assert res.split is True
    assert res.offline == 2
    assert res.ratio_lower == 2.0
    t = res.transcript
    assert t.q == 4 and t.variant == "sb"
    assert t.declared_fmin == 4
    assert t.allocation.partition_of[:4] == (0, 0, 0, 0)
    assert t.view.split == SplitRecord(0, (0, 1), (2, 3))
    assert t.bottlenecks.elements == (12, 3)
    assert t.sinf_start == 6
    assert len(t.sequence) == 6 + 4 * 14


def test_play_game_scripted_own_partitions():
    res = play_game(Scripted([0, 1, 2, 3]), 4, "sa")
    assert res.t_online == 1
    assert res.bound == 1
    assert res.split is False
    assert res.offline == 2
    assert res.transcript.sinf_start == 5


def test_play_game_polyon():
    res = play_game(PolyOn(), 8, "sa")
    assert res.offline == 4
    assert res.t_online <= res.bound + (1 if res.split else 0)
    assert res.ratio_lower == res.offline / max(res.t_online, 1)


def test_play_game_offline_covers_verify():
    res = play_game(GreedyCover(), 6, "sa")
    t = res.transcript
    offline_alloc_covers = res.offline
    assert offline_alloc_covers == 3
    # re-derive the offline score from the transcript to make sure the game
    # reported a genuine rearrangement of the same sequence
    assert count_covers(t.allocation, t.sequence, t.universe) == res.t_online


def test_play_game_rejects_tiny_q():
    with pytest.raises(ValueError):
        play_game(GreedyCover(), 1, "sa")


def test_transcript_round_trip():
    res = play_game(GreedyCover(), 4, "sb")
    text = transcript_to_text(res.transcript)
    lines = text.splitlines()
    assert lines[0] == "q 4"
    assert lines[1] == "variant sb"
    assert lines[2] == "fmin 4"
    assert lines[3] == "classes 0,1|2,3"
    assert lines[4] == "bottlenecks 12,3"
    assert lines[5] == "split 0:0,1/2,3"
    assert lines[6] == "sinf_start 6"
    assert lines[7].startswith("allocation 0 0 0 0 ")
    body = text.split("instance\n", 1)[1]
    inst = parse_instance(body)
    assert inst.universe == res.transcript.universe
    assert tuple(inst.subsets) == res.transcript.sequence
    assert inst.fmin == 4


def test_transcript_no_split_serialization():
    res = play_game(Scripted([0, 1, 2, 3]), 4, "sa")
    lines = transcript_to_text(res.transcript).splitlines()
    assert lines[3] == "classes 0|1|2|3"
    assert lines[5] == "split none"


def test_offline_groups_are_real_covers():
    for variant in ("sa", "sb"):
        res = play_game(Scripted([0, 0, 1, 2]), 5, variant)
        assert res.offline == 2
        # the law comes from pairing: rebuild the groups and check each one
        from dscp.offline import pairing_offline

        alloc = pairing_offline(res.transcript)
        groups = alloc.groups()
        seq = res.transcript.sequence
        full_groups = [
            [seq[i] for i in members]
            for members in groups.values()
            if is_set_cover((seq[i] for i in members),
                            res.transcript.universe)
        ]
        assert len(full_groups) >= 2
