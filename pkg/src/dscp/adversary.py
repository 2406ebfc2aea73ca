"""Adversarial stream constructions and the online-vs-adversary game.

The adversary works over the universe {0,1}^q (element ids read as q-bit
strings, n = 2^q).  It opens with q "bit subsets": subset j holds every
element whose bit j is one.  Whatever partition structure the online
algorithm builds over those q subsets determines, per partition, a
*bottleneck* element (zeros exactly on that partition's bit positions) that
the partition can never contain.  The adversary then doles out the
bottleneck elements in a tail that is exactly scarce enough that only a few
partitions can ever be completed, while an offline rearrangement of the very
same sequence yields floor(q/2) disjoint covers.
"""

from __future__ import annotations

import operator
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .core import (
    Allocation,
    Subset,
    Universe,
    count_covers,
)
from .offline import pairing_offline
from .online import OnlineAlgorithm

MAX_BOUND_Q = 40

VARIANTS = ("sa", "sb")


def _norm_variant(variant: str) -> str:
    v = variant.lower()
    if v not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    return v


@dataclass(frozen=True)
class BitUniverse:
    """Universe {0,1}^q with elements read as bit strings."""

    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be at least 1")

    @property
    def n(self) -> int:
        return 1 << self.q

    @property
    def universe(self) -> Universe:
        return Universe(self.n)

    def bit(self, element: int, k: int) -> int:
        return (element >> k) & 1


def gen_scom(q: int) -> list[Subset]:
    """The q opening subsets: subset j = elements with bit j set.

    Each has size 2^(q-1); element 0 appears in none of them, so the opening
    sequence alone has minimum frequency zero.
    """
    n = 1 << q
    return [Subset(tuple(i for i in range(n) if (i >> j) & 1))
            for j in range(q)]


def gen_theorem2(n: int, m: int, variant: int) -> list[Subset]:
    """Two arrival orders sharing a prefix that punish fmin-oblivious play.

    Both variants open with {0,1}, {0,2}, ..., {0,n-1}.  Variant 1 then
    sends copies of {0}: the only cover packs all n-1 openers into one
    partition, and the optimum is 1.  Variant 2 instead continues with the
    complements U minus {0,j} and copies of {1}: pairing each opener with
    its complement yields n-1 covers.  A deterministic strategy behaves
    identically on the shared prefix, so it concedes a ratio of n-1 on one
    of the two streams.
    """
    if variant not in (1, 2):
        raise ValueError("variant must be 1 or 2")
    if n < 2:
        raise ValueError("n must be at least 2")
    opening = [Subset((0, j)) for j in range(1, n)]
    if variant == 1:
        if m < n - 1:
            raise ValueError(f"m must be at least n-1 = {n - 1}")
        return opening + [Subset((0,))] * (m - (n - 1))
    if m < 2 * n - 2:
        raise ValueError(f"m must be at least 2n-2 = {2 * n - 2}")
    complements = [Subset.of(set(range(n)) - {0, j}) for j in range(1, n)]
    return opening + complements + [Subset((1,))] * (m - (2 * n - 2))


@dataclass(frozen=True)
class SplitRecord:
    """A partition too large for cross-partition pairing, halved virtually.

    ``partition`` is the algorithm's original id; ``left``/``right`` are the
    two halves of its bit positions.  The tail is generated as if the halves
    were separate partitions; the merged real partition can complete one
    extra cover, hence the +1 allowance on the online bound.
    """

    partition: int
    left: tuple[int, ...]
    right: tuple[int, ...]


@dataclass(frozen=True)
class ScomAllocationView:
    """Post-split structure of an opening allocation: per class the bit
    positions it holds.  Classes are disjoint and union to {0,..,q-1}."""

    q: int
    classes: tuple[tuple[int, ...], ...]
    split: SplitRecord | None = None

    def __post_init__(self):
        seen: set[int] = set()
        for cls in self.classes:
            if not cls:
                raise ValueError("empty class")
            for p in cls:
                if not 0 <= p < self.q or p in seen:
                    raise ValueError("classes must partition the positions")
                seen.add(p)
        if len(seen) != self.q:
            raise ValueError("classes must partition the positions")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.classes)

    @property
    def max_size(self) -> int:
        return max(self.sizes)

    def class_counts(self) -> dict[int, int]:
        """Map size -> number of classes with that size."""
        return dict(Counter(self.sizes))


@dataclass(frozen=True)
class BottleneckSet:
    """Bottleneck element per class, aligned with the view's class order.

    The bottleneck of a class with positions B is the element whose zeros
    are exactly B: it avoids every subset of the class and belongs to every
    other opening subset, so the class's partition can never supply it."""

    q: int
    elements: tuple[int, ...]

    def as_set(self) -> set[int]:
        return set(self.elements)

    def non_bottlenecks(self) -> list[int]:
        mine = self.as_set()
        return [e for e in range(1 << self.q) if e not in mine]


def derive_structure(alloc: Allocation,
                     q: int) -> tuple[ScomAllocationView, BottleneckSet]:
    """Read the opening allocation, split an oversized partition, and name
    the bottleneck elements.

    A partition holding more than ceil(q/2) positions would make
    cross-partition pairing impossible, so its positions are virtually
    halved first (at most one partition can be that large).  Bottlenecks are
    computed per post-split class.
    """
    if alloc.num_subsets != q:
        raise ValueError(f"allocation covers {alloc.num_subsets} subsets, "
                         f"expected {q}")
    groups = alloc.groups()
    classes: list[tuple[int, ...]] = []
    split: SplitRecord | None = None
    for pid, positions in groups.items():
        d = len(positions)
        if d > (q + 1) // 2:
            if split is not None:
                raise ValueError("two oversized partitions cannot coexist")
            left = tuple(positions[: d // 2])
            right = tuple(positions[d // 2:])
            split = SplitRecord(pid, left, right)
            classes.append(left)
            classes.append(right)
        else:
            classes.append(tuple(positions))
    view = ScomAllocationView(q, tuple(classes), split)
    full = (1 << q) - 1
    bones = tuple(full ^ sum(1 << p for p in cls) for cls in view.classes)
    if len(set(bones)) != len(bones):
        raise AssertionError("bottlenecks must be distinct")
    return view, BottleneckSet(q, bones)


def _tail_parts(view: ScomAllocationView, bottlenecks: BottleneckSet,
                variant: str) -> tuple[list[Subset], list[Subset]]:
    variant = _norm_variant(variant)
    q = view.q
    by_size: dict[int, list[int]] = {}
    for cls, b in zip(view.classes, bottlenecks.elements):
        by_size.setdefault(len(cls), []).append(b)
    top = view.max_size

    rationed: list[Subset] = []
    if variant == "sa":
        # size-d classes get exactly d copies of their joint bottleneck set
        for d in range(1, top + 1):
            if d in by_size:
                rationed.extend([Subset.of(by_size[d])] * d)
    else:
        # nested sets: the k-th subset carries bottlenecks of classes with
        # size >= k, so a size-d class sees its bottleneck d times
        for k in range(1, top + 1):
            pool = [b for d, bs in by_size.items() if d >= k for b in bs]
            rationed.append(Subset.of(pool))

    # ration check: every bottleneck appears exactly its class size times
    tally = Counter(b for s in rationed for b in s.members
                    if b in bottlenecks.as_set())
    for cls, b in zip(view.classes, bottlenecks.elements):
        if tally.get(b, 0) != len(cls):
            raise AssertionError(
                f"bottleneck {b} rationed {tally.get(b, 0)} times, "
                f"expected {len(cls)}")

    # q copies of every non-bottleneck singleton: enough for floor(q/2)
    # offline covers and for every partition the algorithm may complete,
    # and together with the opening subsets it pushes every non-bottleneck
    # element to frequency >= q while bottlenecks sit at exactly q.
    filler = []
    for e in bottlenecks.non_bottlenecks():
        filler.extend([Subset((e,))] * q)
    return rationed, filler


def gen_tail(structure: tuple[ScomAllocationView, BottleneckSet],
             q: int, variant: str) -> list[Subset]:
    """The adversary's reply to an opening allocation: rationed bottleneck
    subsets followed by the non-bottleneck singleton filler.

    ``structure`` is the pair returned by :func:`derive_structure`.
    """
    view, bottlenecks = structure
    if view.q != q:
        raise ValueError(f"structure is for q={view.q}, not {q}")
    rationed, filler = _tail_parts(view, bottlenecks, variant)
    return rationed + filler


def bound_sa(sizes: Sequence[int], q: int) -> int:
    """Max covers an online algorithm can finish against the ``sa`` tail:
    sum over class sizes d of min(d, number of classes with that size)."""
    _check_sizes(sizes, q)
    counts = Counter(sizes)
    return sum(min(d, k) for d, k in counts.items())


def bound_sb(sizes: Sequence[int], q: int) -> int:
    """Max covers against the ``sb`` tail.

    Greedy per ascending class size d: grant A_d = min(count_d, d - granted
    so far).  The cumulative grant through size d can never exceed d because
    only the first d nested tail subsets carry a size-d class's bottleneck.
    """
    _check_sizes(sizes, q)
    counts = Counter(sizes)
    granted = 0
    for d in sorted(counts):
        granted += max(0, min(counts[d], d - granted))
    return granted


def _check_sizes(sizes: Sequence[int], q: int) -> None:
    if any(d < 1 for d in sizes):
        raise ValueError("class sizes must be positive")
    if sum(sizes) != q:
        raise ValueError(f"class sizes sum to {sum(sizes)}, expected {q}")


def _partitions(total: int):
    """Integer partitions of ``total``, parts non-increasing."""

    def rec(remaining: int, cap: int):
        if remaining == 0:
            yield ()
            return
        for part in range(min(cap, remaining), 0, -1):
            for rest in rec(remaining - part, part):
                yield (part,) + rest

    yield from rec(total, total)


def max_bound(q: int, variant: str) -> tuple[int, tuple[int, ...]]:
    """Best opening structure for the online player: the maximum of the
    variant bound over all integer partitions of q, with a witness."""
    variant = _norm_variant(variant)
    if not 1 <= q <= MAX_BOUND_Q:
        raise ValueError(f"q must be in 1..{MAX_BOUND_Q}")
    fn = bound_sa if variant == "sa" else bound_sb
    best = -1
    witness: tuple[int, ...] = ()
    for sizes in _partitions(q):
        value = fn(sizes, q)
        if value > best:
            best = value
            witness = sizes
    return best, witness


@dataclass(frozen=True)
class AdversaryTranscript:
    """Everything observed in one game: the full emitted sequence, the
    algorithm's allocation over it, and the derived structure."""

    q: int
    variant: str
    universe: Universe
    sequence: tuple[Subset, ...]
    allocation: Allocation
    view: ScomAllocationView
    bottlenecks: BottleneckSet
    sinf_start: int
    declared_fmin: int


@dataclass(frozen=True)
class GameResult:
    """Scores of one adversarial game.

    ``t_online`` is what the algorithm finished, ``bound`` the structural
    ceiling for its opening allocation, ``offline`` the pairing
    rearrangement's cover count, and ``ratio_lower`` their quotient (a lower
    bound on the algorithm's competitive ratio for this stream)."""

    t_online: int
    bound: int
    split: bool
    offline: int
    ratio_lower: float
    transcript: AdversaryTranscript


def play_game(algo: OnlineAlgorithm, q: int, variant: str) -> GameResult:
    """Run one full game: opening subsets, adaptive tail, scoring.

    The declared fmin is q (the true minimum frequency of the full emitted
    sequence, whatever the algorithm does).  Two laws are enforced on the
    result: the online cover count never beats the structural bound (+1 if
    a split occurred), and the pairing rearrangement always reaches
    floor(q/2) covers.
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    variant = _norm_variant(variant)
    bu = BitUniverse(q)
    universe = bu.universe
    opening = gen_scom(q)
    algo.init(universe, q)
    log = [operator.index(algo.assign(s)) for s in opening]
    view, bottlenecks = derive_structure(Allocation(tuple(log)), q)
    rationed, filler = _tail_parts(view, bottlenecks, variant)
    for s in rationed:
        log.append(operator.index(algo.assign(s)))
    for s in filler:
        log.append(operator.index(algo.assign(s)))
    algo.finish()
    sequence = tuple(opening + rationed + filler)
    alloc = Allocation(tuple(log))
    t_online = count_covers(alloc, sequence, universe)

    bound = (bound_sa if variant == "sa" else bound_sb)(view.sizes, q)
    allowance = 1 if view.split is not None else 0
    if t_online > bound + allowance:
        raise AssertionError(
            f"online produced {t_online} covers, structural bound is "
            f"{bound}+{allowance}")

    transcript = AdversaryTranscript(
        q=q, variant=variant, universe=universe, sequence=sequence,
        allocation=alloc, view=view, bottlenecks=bottlenecks,
        sinf_start=q + len(rationed), declared_fmin=q)
    offline_alloc = pairing_offline(transcript)
    offline = count_covers(offline_alloc, sequence, universe)
    if offline < q // 2:
        raise AssertionError(
            f"pairing produced {offline} covers, expected >= {q // 2}")
    ratio_lower = offline / max(t_online, 1)
    return GameResult(t_online, bound, view.split is not None, offline,
                      ratio_lower, transcript)


def transcript_to_text(t: AdversaryTranscript) -> str:
    """Serialize a transcript: key-value header, then the instance body."""
    from .core import format_instance

    lines = [
        f"q {t.q}",
        f"variant {t.variant}",
        f"fmin {t.declared_fmin}",
        "classes " + "|".join(
            ",".join(str(p) for p in cls) for cls in t.view.classes),
        "bottlenecks " + ",".join(str(b) for b in t.bottlenecks.elements),
    ]
    if t.view.split is None:
        lines.append("split none")
    else:
        s = t.view.split
        lines.append("split {}:{}/{}".format(
            s.partition,
            ",".join(str(p) for p in s.left),
            ",".join(str(p) for p in s.right)))
    lines.append(f"sinf_start {t.sinf_start}")
    lines.append("allocation " + " ".join(
        str(p) for p in t.allocation.partition_of))
    lines.append("instance")
    header = "\n".join(lines) + "\n"
    return header + format_instance(t.universe, t.sequence, t.declared_fmin)
