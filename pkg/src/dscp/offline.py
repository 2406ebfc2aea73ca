"""Offline solvers and the shared recoloring engine.

Contains the exact branch-and-bound solver for small instances, the
two-phase recoloring algorithm ``polyoff`` (random coloring followed by a
derandomizing recolor pass), and the pairing construction that certifies the
offline side of adversarial game transcripts.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

import numpy as np

from .core import (
    Allocation,
    Coloring,
    SubsetSequence,
    Universe,
    frequencies,
)

if TYPE_CHECKING:  # pragma: no cover
    from .adversary import AdversaryTranscript


class LimitExceededError(ValueError):
    """Instance too large for the exact solver."""


class TranscriptError(ValueError):
    """A game transcript is internally inconsistent."""


def default_num_colors(n: int, fmin: int) -> int:
    """Default color budget max(1, floor(fmin / ln(n ln n))).

    This is the largest budget for which the expected invalid-color count
    n*c*(1-1/c)**fmin of a uniformly random coloring stays below c/ln(n),
    so almost every color class becomes a cover.
    """
    if n < 2:
        return max(1, fmin)
    return max(1, math.floor(fmin / math.log(n * math.log(n))))


class TrackerProbe:
    """Optional observer for ExpectationTracker steps.

    Records every recolor step and, every ``recompute_every`` steps,
    cross-checks the incrementally maintained expectation against a
    from-scratch recomputation.
    """

    def __init__(self, recompute_every: int = 0):
        self.recompute_every = recompute_every
        self.steps = 0
        self.checks = 0
        self.max_rel_err = 0.0
        self.max_increase = 0.0

    def after_recolor(self, tracker: "ExpectationTracker",
                      before: float, after: float) -> None:
        self.steps += 1
        self.max_increase = max(self.max_increase, after - before)
        if self.recompute_every and self.steps % self.recompute_every == 0:
            scratch = tracker.recompute()
            err = abs(after - scratch) / max(1.0, abs(after), abs(scratch))
            self.max_rel_err = max(self.max_rel_err, err)
            self.checks += 1


class ExpectationTracker:
    """Expected invalid-color count under one-vertex-at-a-time recoloring.

    Edge ``e`` has a fixed total size ``s_e`` (its vertex count, or the
    assumed count in streaming use), ``r_e`` vertices recolored so far and a
    set of colors present among them.  Vertices not yet recolored are
    treated as independently uniform over the colors, so color ``c`` is
    missing from ``e`` with probability 0 if some recolored vertex of ``e``
    has color ``c`` and (1 - 1/num_colors)**(s_e - r_e) otherwise.  The
    tracked expectation is the sum of those probabilities over all edges and
    colors; recoloring each vertex with the argmin color never increases it.
    """

    def __init__(self, num_colors: int, edge_sizes: Sequence[int],
                 probe: TrackerProbe | None = None):
        if num_colors < 1:
            raise ValueError("need at least one color")
        self.num_colors = num_colors
        self._sizes = np.asarray(edge_sizes, dtype=np.int64)
        if self._sizes.ndim != 1 or (self._sizes < 0).any():
            raise ValueError("edge sizes must be non-negative")
        m = int(self._sizes.max(initial=0))
        beta = 1.0 - 1.0 / num_colors
        # beta ** k for k = 0..max size; beta == 0.0 gives [1, 0, 0, ...]
        self._pow = np.power(beta, np.arange(m + 1, dtype=np.float64))
        self._recolored = np.zeros(len(self._sizes), dtype=np.int64)
        self._present = np.zeros((len(self._sizes), num_colors), dtype=bool)
        self._pcount = np.zeros(len(self._sizes), dtype=np.int64)
        self._done: set[int] = set()
        self.steps = 0
        self.probe = probe
        self._expectation = self.recompute()

    @property
    def num_edges(self) -> int:
        return len(self._sizes)

    @property
    def expectation(self) -> float:
        return self._expectation

    def recompute(self) -> float:
        """Expectation from per-edge state, ignoring the running total."""
        u = self._sizes - self._recolored
        return float(((self.num_colors - self._pcount) * self._pow[u]).sum())

    def colors_present(self, edge: int) -> set[int]:
        return {int(c) for c in np.flatnonzero(self._present[edge])}

    def recolor(self, vertex: int, incident_edges: Sequence[int]) -> int:
        """Recolor ``vertex`` with the expectation-minimizing color, apply
        the update and return the color.  Ties pick the lowest color id."""
        if vertex in self._done:
            raise ValueError(f"vertex {vertex} recolored twice")
        self._done.add(vertex)
        before = self._expectation
        idx = np.asarray(incident_edges, dtype=np.intp)
        if idx.size == 0:
            color = 0
        else:
            u = self._sizes[idx] - self._recolored[idx]
            if (u < 1).any():
                raise ValueError("edge recolored beyond its size")
            w = self._pow[u - 1]
            # Choosing color c changes the expectation by a c-independent
            # amount minus the total weight of incident edges still missing
            # c; minimizing it means maximizing that saving, i.e. minimizing
            # the weight of edges where c is already present.
            penalty = w @ self._present[idx].astype(np.float64)
            color = int(np.argmin(penalty))
            old_terms = (self.num_colors - self._pcount[idx]) * self._pow[u]
            self._recolored[idx] += 1
            newly = ~self._present[idx, color]
            self._present[idx, color] = True
            self._pcount[idx] += newly
            new_terms = (self.num_colors - self._pcount[idx]) * w
            self._expectation = before + float(new_terms.sum() - old_terms.sum())
            # The argmin choice cannot increase the expectation; leave a hair
            # of slack for floating point ties.
            if self._expectation > before + 1e-12 * max(1.0, before):
                raise AssertionError(
                    f"expectation increased {before} -> {self._expectation}")
        self.steps += 1
        if self.probe is not None:
            self.probe.after_recolor(self, before, self._expectation)
        return color


def recolor_argmin(tracker: ExpectationTracker, vertex: int,
                   incident_edges: Sequence[int]) -> int:
    """Recolor ``vertex`` (incident to the given edges) with the color that
    minimizes the tracker's expectation after the step."""
    return tracker.recolor(vertex, incident_edges)


def polyoff(subsets: SubsetSequence, universe: Universe,
            num_colors: int | None = None, seed: int = 0,
            probe: TrackerProbe | None = None) -> Coloring:
    """Two-phase coloring of the dual hypergraph.

    Phase one colors every subset uniformly at random with ``seed``.  Phase
    two walks the subsets in index order and recolors each with the argmin
    rule, conditioning only on recolored vertices; the phase-one colors act
    as the random prior and every one of them is overwritten, so the output
    is deterministic for a given instance.  At least
    num_colors - floor(E0) colors come out valid, where E0 is the tracker
    expectation before any recoloring.
    """
    freq = frequencies(subsets, universe)
    if num_colors is None:
        num_colors = default_num_colors(universe.n, freq.fmin)
    if num_colors < 1:
        raise ValueError("need at least one color")
    rng = random.Random(seed)
    colors = [rng.randrange(num_colors) for _ in subsets]
    tracker = ExpectationTracker(num_colors, freq.counts, probe=probe)
    for j, s in enumerate(subsets):
        colors[j] = tracker.recolor(j, s.members)
    return Coloring(tuple(colors), num_colors)


@dataclass(frozen=True)
class ExactResult:
    """Optimal cover count plus an allocation achieving it."""

    opt: int
    witness: Allocation


def exact_max_disjoint_covers(subsets: SubsetSequence, universe: Universe, *,
                              max_subsets: int = 14,
                              max_elements: int = 14) -> ExactResult:
    """Branch-and-bound over subset-to-group assignments.

    Subsets are placed in index order into an existing open group, a brand
    new group (always the next unused id, which breaks group-relabeling
    symmetry) or a garbage pile.  A group is closed and counted the moment
    it covers the universe.  Nodes are pruned when the completed count plus
    min over elements of (open groups containing it + remaining occurrences)
    cannot beat the best known solution.
    """
    m, n = len(subsets), universe.n
    if m > max_subsets:
        raise LimitExceededError(
            f"{m} subsets exceeds exact-solver limit {max_subsets}")
    if n > max_elements:
        raise LimitExceededError(
            f"{n} elements exceeds exact-solver limit {max_elements}")
    freq = frequencies(subsets, universe)
    if m == 0:
        return ExactResult(0, Allocation(()))

    full = (1 << n) - 1
    masks = [sum(1 << i for i in s.members) for s in subsets]
    future = list(freq.counts)

    GARBAGE = -1
    assign = [GARBAGE] * m
    open_ids: list[int] = []
    open_masks: list[int] = []
    best = 0
    best_assign = assign.copy()
    state = {"completed": 0, "next_id": 0}

    def upper_bound() -> int:
        ub = None
        for i in range(n):
            avail = future[i]
            for gm in open_masks:
                if gm >> i & 1:
                    avail += 1
            if ub is None or avail < ub:
                ub = avail
                if avail == 0:
                    break
        return state["completed"] + (ub or 0)

    def dfs(j: int) -> None:
        nonlocal best, best_assign
        if j == m:
            if state["completed"] > best:
                best = state["completed"]
                best_assign = assign.copy()
            return
        if upper_bound() <= best:
            return
        s = masks[j]
        for i in subsets[j].members:
            future[i] -= 1

        def place(gid: int, closes: bool, slot: int | None) -> None:
            assign[j] = gid
            if closes:
                state["completed"] += 1
                if slot is not None:
                    kept_id = open_ids.pop(slot)
                    kept_mask = open_masks.pop(slot)
                    dfs(j + 1)
                    open_ids.insert(slot, kept_id)
                    open_masks.insert(slot, kept_mask)
                else:
                    dfs(j + 1)
                state["completed"] -= 1
            else:
                dfs(j + 1)

        # existing groups; identical unions are interchangeable, try one
        tried: set[int] = set()
        for slot in range(len(open_masks)):
            gm = open_masks[slot]
            if gm in tried:
                continue
            tried.add(gm)
            merged = gm | s
            if merged == full:
                place(open_ids[slot], True, slot)
            else:
                open_masks[slot] = merged
                place(open_ids[slot], False, None)
                open_masks[slot] = gm
        # new group
        gid = state["next_id"]
        state["next_id"] += 1
        if s == full:
            place(gid, True, None)
        else:
            open_ids.append(gid)
            open_masks.append(s)
            place(gid, False, None)
            open_ids.pop()
            open_masks.pop()
        state["next_id"] -= 1
        # garbage
        assign[j] = GARBAGE
        dfs(j + 1)

        for i in subsets[j].members:
            future[i] += 1

    dfs(0)

    spare = max((g for g in best_assign if g != GARBAGE), default=-1) + 1
    final = tuple(spare if g == GARBAGE else g for g in best_assign)
    return ExactResult(best, Allocation(final))


def pairing_offline(transcript: "AdversaryTranscript") -> Allocation:
    """Build floor(q/2) disjoint covers from a game transcript.

    Repeatedly pops one opening subset from each of the two largest
    remaining partition classes; any two opening subsets from different
    classes jointly contain every bottleneck element, and the rest of the
    universe is filled with tail singletons.  Everything left over joins the
    first pair's partition, so the result has exactly floor(q/2) partitions,
    each verified to be a cover.
    """
    q = transcript.q
    n = transcript.universe.n
    seq = transcript.sequence
    classes = [list(c) for c in transcript.view.classes]

    heap = [(-len(c), c[0], c) for c in classes if c]
    heapq.heapify(heap)
    pairs: list[tuple[int, int]] = []
    while len(heap) >= 2:
        na, _, a = heapq.heappop(heap)
        nb, _, b = heapq.heappop(heap)
        x, y = a.pop(0), b.pop(0)
        pairs.append((x, y))
        if a:
            heapq.heappush(heap, (na + 1, a[0], a))
        if b:
            heapq.heappush(heap, (nb + 1, b[0], b))
    if len(pairs) < q // 2:
        raise TranscriptError(
            f"only {len(pairs)} cross-class pairs for q={q}")
    pairs = pairs[: q // 2]

    # singleton inventory from the tail
    available: dict[int, list[int]] = {}
    for j in range(transcript.sinf_start, len(seq)):
        s = seq[j]
        if len(s) == 1:
            available.setdefault(s.members[0], []).append(j)

    bottlenecks = set(transcript.bottlenecks.elements)
    partition_of = [0] * len(seq)
    for pid, (x, y) in enumerate(pairs):
        partition_of[x] = pid
        partition_of[y] = pid
        got = 0
        for e in range(n):
            if (e >> x) & 1 or (e >> y) & 1:
                got += 1
                continue
            # element invisible to both openers; bottlenecks never are
            if e in bottlenecks:
                raise TranscriptError(
                    f"bottleneck {e} missing from pair ({x}, {y})")
            stock = available.get(e)
            if not stock:
                raise TranscriptError(
                    f"ran out of {{{e}}} singletons while pairing")
            partition_of[stock.pop()] = pid
            got += 1
        if got != n:
            raise TranscriptError("pair failed to cover the universe")
    return Allocation(tuple(partition_of))
