"""Domain types and base operations for disjoint set cover instances.

An instance is a universe of integer elements ``{0, .., n-1}`` together with
an ordered sequence of subsets.  The order matters: online algorithms see the
subsets one at a time and the same subsets in a different order are a
different instance.  A solution partitions the sequence (by index, not by
value) so that as many partitions as possible cover the whole universe.

The dual view used by the coloring algorithms swaps roles: one vertex per
subset, one hyperedge per element, where edge ``i`` connects the indices of
the subsets containing element ``i``.  Coloring vertices with ``c`` colors so
that every edge sees every color is the same thing as splitting the sequence
into ``c`` disjoint set covers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class MalformedInstanceError(ValueError):
    """An instance references elements outside its universe or cannot be
    parsed from text."""


@dataclass(frozen=True)
class Universe:
    """The element set {0, ..., n-1}."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("universe needs at least one element")

    @property
    def elements(self) -> range:
        return range(self.n)

    def __contains__(self, element: int) -> bool:
        return 0 <= element < self.n


@dataclass(frozen=True)
class Subset:
    """An immutable subset of the universe.

    ``members`` is sorted and duplicate free; build from arbitrary iterables
    with :meth:`Subset.of`.
    """

    members: tuple[int, ...] = ()

    @classmethod
    def of(cls, ids: Iterable[int]) -> "Subset":
        return cls(tuple(sorted(set(ids))))

    def __contains__(self, element: int) -> bool:
        return element in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __bool__(self) -> bool:
        return bool(self.members)


# An instance's subsets in arrival order.  Concatenation of sequences is
# plain list concatenation.
SubsetSequence = Sequence[Subset]


@dataclass(frozen=True)
class Instance:
    """A parsed instance: universe, arrival-ordered subsets and, optionally,
    the minimum element frequency declared in the source file."""

    universe: Universe
    subsets: tuple[Subset, ...]
    fmin: int | None = None


@dataclass(frozen=True)
class FrequencyTable:
    """Per-element occurrence counts over a subset sequence."""

    counts: tuple[int, ...]

    @property
    def fmin(self) -> int:
        return min(self.counts)


@dataclass(frozen=True)
class Allocation:
    """Partition ids per subset index.  Ids are arbitrary non-negative ints;
    gaps are fine (unused ids simply name empty partitions)."""

    partition_of: tuple[int, ...] = ()

    def __post_init__(self):
        for pid in self.partition_of:
            if pid < 0:
                raise ValueError("partition ids must be non-negative")

    @property
    def num_subsets(self) -> int:
        return len(self.partition_of)

    def groups(self) -> dict[int, list[int]]:
        """Map partition id -> subset indices, ids ascending."""
        out: dict[int, list[int]] = {}
        for j, pid in enumerate(self.partition_of):
            out.setdefault(pid, []).append(j)
        return dict(sorted(out.items()))

    def sizes(self) -> dict[int, int]:
        """Map partition id -> number of subsets in it."""
        return {pid: len(idx) for pid, idx in self.groups().items()}


@dataclass(frozen=True)
class HypergraphView:
    """Dual hypergraph of an instance: vertex j = subset j, edge i = indices
    of the subsets containing element i.  Edge lists are sorted ascending,
    so ``len(edges[i])`` equals the frequency of element i."""

    vertex_count: int
    edges: tuple[tuple[int, ...], ...]

    def edge_sizes(self) -> tuple[int, ...]:
        return tuple(len(e) for e in self.edges)


@dataclass(frozen=True)
class Coloring:
    """A color per vertex, colors drawn from {0, .., num_colors-1}."""

    color_of: tuple[int, ...]
    num_colors: int

    def __post_init__(self):
        if self.num_colors < 1:
            raise ValueError("need at least one color")
        for c in self.color_of:
            if not 0 <= c < self.num_colors:
                raise ValueError(f"color {c} out of range")


def frequencies(subsets: SubsetSequence, universe: Universe) -> FrequencyTable:
    """Count how often each element occurs across the sequence."""
    counts = [0] * universe.n
    for s in subsets:
        for i in s:
            if not 0 <= i < universe.n:
                raise MalformedInstanceError(
                    f"element {i} outside universe of size {universe.n}")
            counts[i] += 1
    return FrequencyTable(tuple(counts))


def is_set_cover(subsets: Iterable[Subset], universe: Universe) -> bool:
    """True iff the union of the given subsets is the whole universe."""
    seen: set[int] = set()
    for s in subsets:
        seen.update(s.members)
    if seen and (min(seen) < 0 or max(seen) >= universe.n):
        raise MalformedInstanceError("subset element outside universe")
    return len(seen) == universe.n


def count_covers(alloc: Allocation, subsets: SubsetSequence,
                 universe: Universe) -> int:
    """Number of partitions of ``alloc`` whose union covers the universe."""
    if alloc.num_subsets != len(subsets):
        raise ValueError("allocation and sequence length differ")
    unions: dict[int, set[int]] = {}
    for j, pid in enumerate(alloc.partition_of):
        unions.setdefault(pid, set()).update(subsets[j].members)
    covers = 0
    for got in unions.values():
        if got and (min(got) < 0 or max(got) >= universe.n):
            raise MalformedInstanceError("subset element outside universe")
        if len(got) == universe.n:
            covers += 1
    return covers


def build_hypergraph(subsets: SubsetSequence,
                     universe: Universe) -> HypergraphView:
    """Build the dual hypergraph (vertex per subset, edge per element)."""
    edges: list[list[int]] = [[] for _ in range(universe.n)]
    for j, s in enumerate(subsets):
        for i in s:
            if not 0 <= i < universe.n:
                raise MalformedInstanceError(
                    f"element {i} outside universe of size {universe.n}")
            edges[i].append(j)
    return HypergraphView(len(subsets), tuple(tuple(e) for e in edges))


class ShrinkState:
    """Streaming occurrence cap: an element is kept while it has been seen
    fewer than ``limit`` times, and dropped from every occurrence after the
    limit-th one.  Decisions depend only on the prefix seen so far."""

    def __init__(self, limit: int):
        if limit < 0:
            raise ValueError("limit must be non-negative")
        self.limit = limit
        self._seen: dict[int, int] = {}

    def push(self, subset: Subset) -> Subset:
        kept = []
        seen = self._seen
        limit = self.limit
        for i in subset.members:
            c = seen.get(i, 0)
            if c < limit:
                kept.append(i)
            seen[i] = c + 1
        return Subset(tuple(kept))

    def count(self, element: int) -> int:
        return self._seen.get(element, 0)

    def short_elements(self, universe: Universe) -> list[int]:
        """Elements that never reached the cap; non-empty means the declared
        minimum frequency overstated the stream."""
        return [i for i in universe.elements if self._seen.get(i, 0) < self.limit]


def shrink_stream(subsets: SubsetSequence, fmin: int) -> list[Subset]:
    """Cap every element at its first ``fmin`` occurrences.

    The result has the same length as the input (subsets may come out empty)
    and every element that occurred at least ``fmin`` times occurs exactly
    ``fmin`` times afterwards.
    """
    if fmin < 1:
        raise ValueError("fmin must be at least 1")
    state = ShrinkState(fmin)
    return [state.push(s) for s in subsets]


def validate_polychromatic(h: HypergraphView,
                           coloring: Coloring) -> tuple[int, set[int]]:
    """Count invalid colors: a color is invalid iff some edge contains no
    vertex of that color.  Returns (count, set of invalid colors)."""
    if len(coloring.color_of) != h.vertex_count:
        raise ValueError("coloring length differs from vertex count")
    all_colors = frozenset(range(coloring.num_colors))
    invalid: set[int] = set()
    color_of = coloring.color_of
    for edge in h.edges:
        present = {color_of[v] for v in edge}
        if len(present) < coloring.num_colors:
            invalid.update(all_colors - present)
            if len(invalid) == coloring.num_colors:
                break
    return len(invalid), invalid


# ---------------------------------------------------------------------------
# Instance text format.
#
#   n <N>          header, required first
#   fmin <K>       optional declared minimum frequency
#   <id> <id> ...  one line per subset, arrival order; a blank line is an
#                  empty subset; lines starting with '#' are comments
# ---------------------------------------------------------------------------

def parse_instance(text: str) -> Instance:
    """Parse the line-oriented instance format.  Raises
    MalformedInstanceError on any structural problem."""
    n: int | None = None
    fmin: int | None = None
    subsets: list[Subset] = []
    body_started = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if n is None:
            if not line:
                raise MalformedInstanceError(
                    f"line {lineno}: expected 'n <N>' header")
            parts = line.split()
            if len(parts) != 2 or parts[0] != "n":
                raise MalformedInstanceError(
                    f"line {lineno}: expected 'n <N>' header, got {line!r}")
            n = _parse_int(parts[1], lineno)
            if n < 1:
                raise MalformedInstanceError(f"line {lineno}: n must be >= 1")
            continue
        if not body_started and line.startswith("fmin"):
            parts = line.split()
            if len(parts) != 2:
                raise MalformedInstanceError(
                    f"line {lineno}: expected 'fmin <K>', got {line!r}")
            fmin = _parse_int(parts[1], lineno)
            if fmin < 0:
                raise MalformedInstanceError(
                    f"line {lineno}: fmin must be >= 0")
            body_started = True
            continue
        body_started = True
        if not line:
            subsets.append(Subset())
            continue
        ids = [_parse_int(tok, lineno) for tok in line.split()]
        for i in ids:
            if not 0 <= i < n:
                raise MalformedInstanceError(
                    f"line {lineno}: element {i} outside universe of size {n}")
        subsets.append(Subset.of(ids))
    if n is None:
        raise MalformedInstanceError("missing 'n <N>' header")
    return Instance(Universe(n), tuple(subsets), fmin)


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedInstanceError(
            f"line {lineno}: expected integer, got {token!r}") from None


def format_instance(universe: Universe, subsets: SubsetSequence,
                    fmin: int | None = None) -> str:
    """Serialize an instance back to the text format."""
    lines = [f"n {universe.n}"]
    if fmin is not None:
        lines.append(f"fmin {fmin}")
    for s in subsets:
        lines.append(" ".join(str(i) for i in s.members))
    return "\n".join(lines) + "\n"
