"""Partitions and plane partitions: enumeration, interlacing, slices, hooks.

Partitions are stored as weakly decreasing tuples of positive integers
(the empty tuple is the empty partition).  Plane partitions are finite
ragged arrays; entries beyond the stored extents are implicitly zero.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Tuple


class Partition:
    """An integer partition, identified with its Young diagram."""

    __slots__ = ("parts", "_hash")

    def __init__(self, parts: Iterable[int] = ()):
        parts = tuple(int(x) for x in parts if x != 0)
        for i, x in enumerate(parts):
            if x <= 0:
                raise ValueError("parts must be positive")
            if i and parts[i - 1] < x:
                raise ValueError("parts must be weakly decreasing")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "_hash", hash(parts))

    def __setattr__(self, *a):
        raise AttributeError("Partition is immutable")

    @property
    def degree(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def part(self, i: int) -> int:
        """Row length lambda_i with 1-based index; zero past the last row."""
        return self.parts[i - 1] if 1 <= i <= len(self.parts) else 0

    def conjugate(self) -> "Partition":
        if not self.parts:
            return self
        cols = [0] * self.parts[0]
        for row in self.parts:
            for j in range(row):
                cols[j] += 1
        return Partition(cols)

    def contains(self, other: "Partition") -> bool:
        return all(self.part(i + 1) >= x for i, x in enumerate(other.parts))

    def interlaces(self, other: "Partition") -> bool:
        """self >= other in the interlacing order: s1 >= o1 >= s2 >= o2 >= ..."""
        n = max(len(self.parts), len(other.parts))
        for i in range(1, n + 1):
            if self.part(i) < other.part(i):
                return False
            if other.part(i) < self.part(i + 1):
                return False
        return True

    def hooks(self) -> List[int]:
        """Hook lengths, one per box, in row-major order."""
        conj = self.conjugate()
        out = []
        for i, row in enumerate(self.parts, start=1):
            for j in range(1, row + 1):
                arm = row - j
                leg = conj.parts[j - 1] - i
                out.append(arm + leg + 1)
        return out

    def n_stat(self) -> int:
        """n(lambda) = sum (i-1) lambda_i."""
        return sum((i - 1) * x for i, x in enumerate(self.parts, start=1))

    def weight_valuation(self) -> int:
        """Lowest u-exponent of the principal specialization: sum of squared
        column heights (equals 2 n(lambda) + |lambda|)."""
        return sum(c * c for c in self.conjugate().parts)

    def remove_box(self, row: int, count: int = 1) -> "Partition":
        parts = list(self.parts)
        parts[row - 1] -= count
        return Partition(parts)

    def subdiagrams(self) -> Tuple["Partition", ...]:
        """All partitions contained in this one, sorted."""
        out = {Partition()}
        def rec(i: int, prev: int, acc: List[int]):
            for v in range(1, min(self.part(i + 1), prev) + 1):
                acc.append(v)
                out.add(Partition(acc))
                rec(i + 1, v, acc)
                acc.pop()
        rec(0, self.part(1) if self.parts else 0, [])
        return tuple(sorted(out))

    def horizontal_predecessors(self) -> Iterator["Partition"]:
        """All mu with self > mu in the interlacing order (mu_i in [self_{i+1}, self_i])."""
        ranges = []
        for i in range(1, len(self.parts) + 1):
            ranges.append(range(self.part(i + 1), self.part(i) + 1))
        if not ranges:
            yield self
            return
        def rec(i: int, acc: List[int]):
            if i == len(ranges):
                yield Partition(acc)
                return
            for v in ranges[i]:
                acc.append(v)
                yield from rec(i + 1, acc)
                acc.pop()
        yield from rec(0, [])

    def horizontal_successors(self, max_degree: int) -> Iterator["Partition"]:
        """All mu > self in the interlacing order with |mu| <= max_degree."""
        budget = max_degree - self.degree
        if budget < 0:
            return
        rows = len(self.parts)
        def rec(i: int, rem: int, acc: List[int]):
            # row i+1 of mu lies in [self_{i+1}, min(self_i or inf, bound from rem)]
            if i > rows:
                yield Partition(acc)
                return
            lo = self.part(i + 1)
            hi = self.part(i) if i >= 1 else lo + rem
            hi = min(hi, lo + rem)
            for v in range(lo, hi + 1):
                acc.append(v)
                yield from rec(i + 1, rem - (v - lo), acc)
                acc.pop()
        yield from rec(0, budget, [])

    def __eq__(self, other):
        return isinstance(other, Partition) and self.parts == other.parts

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return (self.degree, self.parts) < (other.degree, other.parts)

    def __le__(self, other):
        return (self.degree, self.parts) <= (other.degree, other.parts)

    def __repr__(self):
        return f"Partition{self.parts}"

    def to_json(self) -> list:
        return list(self.parts)


EMPTY = Partition()


def interlaces(lam: Partition, mu: Partition) -> bool:
    return lam.interlaces(mu)


def hooks_and_n(lam: Partition) -> Tuple[List[int], int]:
    return sorted(lam.hooks(), reverse=True), lam.n_stat()


@lru_cache(maxsize=None)
def partitions_of(n: int) -> Tuple[Partition, ...]:
    """All partitions of n, lexicographically sorted."""
    if n < 0:
        return ()
    out: List[Tuple[int, ...]] = []
    def rec(rem: int, maxpart: int, acc: List[int]):
        if rem == 0:
            out.append(tuple(acc))
            return
        for v in range(min(rem, maxpart), 0, -1):
            acc.append(v)
            rec(rem - v, v, acc)
            acc.pop()
    rec(n, n if n else 0, [])
    if n == 0:
        out = [()]
    return tuple(Partition(p) for p in sorted(out))


def enumerate_partitions(n_max: int) -> List[List[Partition]]:
    """Partitions of degree <= n_max, grouped by degree."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    return [list(partitions_of(n)) for n in range(n_max + 1)]


@lru_cache(maxsize=None)
def partitions_up_to(degree: int) -> Tuple[Partition, ...]:
    """All partitions with degree <= the bound, sorted by (degree, lex)."""
    out: List[Partition] = []
    for n in range(degree + 1):
        out.extend(partitions_of(n))
    return tuple(out)


class PlanePartition:
    """A plane partition / 3D Young diagram as a ragged row array."""

    __slots__ = ("rows", "_hash")

    def __init__(self, rows: Iterable[Iterable[int]] = ()):
        clean = []
        for row in rows:
            r = tuple(int(x) for x in row if x != 0)
            for i, x in enumerate(r):
                if x <= 0:
                    raise ValueError("entries must be nonnegative")
                if i and r[i - 1] < x:
                    raise ValueError("rows must weakly decrease")
            if r:
                clean.append(r)
            else:
                break  # a zero row forces everything below to be zero too
        rows = tuple(clean)
        for i in range(1, len(rows)):
            above = rows[i - 1]
            for j, x in enumerate(rows[i]):
                if j >= len(above) or above[j] < x:
                    raise ValueError("columns must weakly decrease")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "_hash", hash(rows))

    def __setattr__(self, *a):
        raise AttributeError("PlanePartition is immutable")

    @property
    def volume(self) -> int:
        return sum(sum(r) for r in self.rows)

    def entry(self, i: int, j: int) -> int:
        """pi_{ij} with 1-based indices; zero beyond the stored extents."""
        if 1 <= i <= len(self.rows) and 1 <= j <= len(self.rows[i - 1]):
            return self.rows[i - 1][j - 1]
        return 0

    def diagonal_slice(self, m: int) -> Partition:
        vals = []
        i = 1 if m >= 0 else 1 - m
        j = 1 + m if m >= 0 else 1
        while True:
            v = self.entry(i, j)
            if v == 0:
                break
            vals.append(v)
            i += 1
            j += 1
        return Partition(vals)

    def diagonal_slices(self) -> Dict[int, Partition]:
        """Nonzero diagonal slices keyed by their offset."""
        if not self.rows:
            return {}
        lo = -(len(self.rows) - 1)
        hi = len(self.rows[0]) - 1
        out = {}
        for m in range(lo, hi + 1):
            s = self.diagonal_slice(m)
            if s.parts:
                out[m] = s
        return out

    @classmethod
    def from_slices(cls, slices: Dict[int, Partition]) -> "PlanePartition":
        """Rebuild the array from its diagonal slices."""
        if not slices:
            return cls()
        lo = min(slices)
        hi = max(slices)
        n_rows = max(1 - lo, max(s.length - min(m, 0) for m, s in slices.items()))
        grid: List[List[int]] = []
        for i in range(1, n_rows + 1):
            row = []
            j = 1
            while True:
                m = j - i
                s = slices.get(m)
                k = i if m >= 0 else j  # position along the diagonal
                v = s.part(k) if s is not None else 0
                if v == 0:
                    break
                row.append(v)
                j += 1
            grid.append(row)
        return cls(grid)

    def __eq__(self, other):
        return isinstance(other, PlanePartition) and self.rows == other.rows

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return (self.volume, self.rows) < (other.volume, other.rows)

    def __repr__(self):
        return f"PlanePartition{self.rows}"

    def to_json(self) -> list:
        return [list(r) for r in self.rows]


def diagonal_slices(pp: PlanePartition) -> Dict[int, Partition]:
    return pp.diagonal_slices()


def _rows_below(top: Tuple[int, ...], budget: int) -> Iterator[Tuple[int, ...]]:
    """Rows dominated entrywise by top, weakly decreasing, volume <= budget."""
    def rec(j: int, prev: int, rem: int, acc: List[int]):
        yield tuple(acc)
        if j >= len(top):
            return
        for v in range(1, min(top[j], prev, rem) + 1):
            acc.append(v)
            yield from rec(j + 1, v, rem - v, acc)
            acc.pop()
    # first entry can be anything <= min(top[0], budget)
    yield from rec(0, budget, budget, [])


def enumerate_plane_partitions(n_max: int) -> List[List[PlanePartition]]:
    """Plane partitions of volume <= n_max, grouped by volume."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    groups: List[List[PlanePartition]] = [[] for _ in range(n_max + 1)]
    def extend(rows: List[Tuple[int, ...]], used: int):
        groups[used].append(PlanePartition(rows))
        top = rows[-1] if rows else None
        budget = n_max - used
        if budget <= 0:
            return
        if top is None:
            # first row: any partition with 1 <= volume <= budget
            for n in range(1, budget + 1):
                for lam in partitions_of(n):
                    extend([lam.parts], used + n)
        else:
            for row in _rows_below(top, budget):
                if row:
                    extend(rows + [row], used + sum(row))
    extend([], 0)
    for g in groups:
        g.sort(key=lambda p: p.rows)
    return groups
