"""Pure-Python twin of the compiled search kernels.

Semantics here and in ``_kernels.pyx`` must match exactly; the dispatch
module picks whichever is importable. Both kernels are deliberately free
of package imports so they stay self-contained.

The two entry points:

* ``min_assignment``: the adversary's side of the share game, a minimum
  over all bundle-to-agent permutations.
* ``search_max_partition``: the agent's side, an exhaustive maximum over
  placements of interchangeable decision types into labeled bundles.
"""

from __future__ import annotations

BACKEND = "python"


def min_assignment(bundle_sums: list[list[int]]) -> int:
    """Minimum over permutations sigma of sum_j bundle_sums[j][sigma(j)].

    ``bundle_sums[j][a]`` is the value the reference agent collects when
    agent a decides bundle j. Branch-and-bound over partial assignments;
    all entries must be nonnegative for the pruning to be sound.
    """
    n = len(bundle_sums)
    used = 0
    best = 0
    for j in range(n):  # greedy assignment seeds the bound
        pick, pick_v = -1, -1
        for a in range(n):
            if not (used >> a) & 1 and (pick < 0 or bundle_sums[j][a] < pick_v):
                pick, pick_v = a, bundle_sums[j][a]
        used |= 1 << pick
        best += pick_v

    def descend(j: int, used: int, acc: int) -> None:
        nonlocal best
        if acc >= best:
            return
        if j == n:
            best = acc
            return
        row = bundle_sums[j]
        order = sorted((a for a in range(n) if not (used >> a) & 1), key=row.__getitem__)
        for a in order:
            descend(j + 1, used | (1 << a), acc + row[a])

    descend(0, 0, 0)
    return best


def search_max_partition(
    counts: tuple[int, ...],
    masks: tuple[int, ...],
    n: int,
    cap: int,
    node_budget: int,
) -> tuple[int, tuple[tuple[int, ...], ...] | None, int, bool]:
    """Exact maximum, over all placements of the given decision types into
    n labeled bundles, of the permutation-minimum value.

    ``counts[t]`` decisions of type t are interchangeable; ``masks[t]`` is
    the agent bitmask of the reference agent's side (bit a set means agent
    a collects the decision when it goes the reference agent's way, which
    is the same event as agreeing with the reference agent). Placements
    are enumerated isomorph-free: bundles with identical placement history
    are interchangeable, so counts are forced nonincreasing inside each
    interchangeability class.

    ``cap`` is a certified upper bound on the value; reaching it stops the
    search. ``node_budget`` bounds the number of per-type compositions
    applied. Returns ``(best, composition, nodes, completed)`` where
    ``composition[t][j]`` says how many type-t decisions the best
    placement puts in bundle j, and ``completed`` is False when the
    budget ran out (callers must then discard ``best``).
    """
    T = len(counts)
    if T == 0:
        return 0, (), 0, True
    B = [[0] * n for _ in range(n)]
    agree_bit = [[(masks[t] >> a) & 1 for a in range(n)] for t in range(T)]
    suffix = [0] * (T + 1)
    for t in range(T - 1, -1, -1):
        suffix[t] = suffix[t + 1] + counts[t]

    comp = [[0] * n for _ in range(T)]
    best = -1
    best_comp: tuple[tuple[int, ...], ...] | None = None
    nodes = 0
    out_of_budget = False

    def place(t: int, classes: tuple[int, ...]) -> bool:
        """Returns True when the search should unwind (cap hit or budget out)."""
        nonlocal best, best_comp, nodes, out_of_budget
        if t == T:
            value = min_assignment(B)
            if value > best:
                best = value
                best_comp = tuple(tuple(row) for row in comp)
            return best >= cap

        def fill(j: int, remaining: int) -> bool:
            nonlocal nodes, out_of_budget
            if j == n:
                if remaining:
                    return False
                nodes += 1
                if nodes > node_budget:
                    out_of_budget = True
                    return True
                row = comp[t]
                bits = agree_bit[t]
                for b in range(n):
                    c = row[b]
                    if c:
                        Bb = B[b]
                        for a in range(n):
                            if bits[a]:
                                Bb[a] += c
                # each undecided column can add at most 1 to every permutation sum
                if min_assignment(B) + suffix[t + 1] > best:
                    refined: dict[tuple[int, int], int] = {}
                    new_classes = []
                    for b in range(n):
                        key = (classes[b], row[b])
                        new_classes.append(refined.setdefault(key, len(refined)))
                    if place(t + 1, tuple(new_classes)):
                        return True
                for b in range(n):
                    c = row[b]
                    if c:
                        Bb = B[b]
                        for a in range(n):
                            if bits[a]:
                                Bb[a] -= c
                return False
            hi = remaining
            if j > 0 and classes[j] == classes[j - 1]:
                hi = min(hi, comp[t][j - 1])
            for c in range(hi, -1, -1):
                comp[t][j] = c
                if fill(j + 1, remaining - c):
                    return True
            comp[t][j] = 0
            return False

        return fill(0, counts[t])

    place(0, tuple([0] * n))
    if out_of_budget:
        return best, None, nodes, False
    return best, best_comp, nodes, True
