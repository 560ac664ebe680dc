"""Principal specialization of Schur functions, two independent ways.

``principal_schur_hook`` expands the closed product form: a power of q times
the inverse product of (1 - q**hook) over the boxes of the diagram.

``principal_schur_tableau`` sums the combinatorial weight q**(entry - 1/2)
over all boxes of all semi-standard tableaux of the given shape.  The sum
is organised as a chain of horizontal strips (shape with entries <= m grows
by one strip per entry value), which enumerates exactly the tableau sum.
An entry m contributes u**(2m-1), so entries above ceil((order+1)/2) only
touch coefficients beyond the window and are not enumerated.
"""

from __future__ import annotations

from typing import Dict, Iterator, List

from .partitions import Partition
from .qalg import QSeries, inv_one_minus_u_pow


def principal_schur_hook(lam: Partition, order: int) -> QSeries:
    """Hook-product form of s_lambda(q^rho), exact mod u**(order+1)."""
    if order < 0:
        raise ValueError("order must be >= 0")
    val = lam.weight_valuation()  # = 2 n(lambda) + |lambda|
    rel = order  # expand the unit part to the full order, then shift
    out = QSeries.one(rel)
    for h in lam.hooks():
        out = out * inv_one_minus_u_pow(2 * h, rel)
    return out.shift(val).truncate(order + val)


def _subdiagrams(lam: Partition) -> List[Partition]:
    """All partitions contained in lam."""
    return list(lam.subdiagrams())


def _horizontal_strip_pairs(shapes: List[Partition]) -> Dict[Partition, List[Partition]]:
    """For each shape, the shapes nu <= mu with mu/nu a horizontal strip."""
    index = set(shapes)
    out: Dict[Partition, List[Partition]] = {}
    for mu in shapes:
        preds = [nu for nu in mu.horizontal_predecessors() if nu in index]
        out[mu] = preds
    return out


def principal_schur_tableau(lam: Partition, order: int) -> QSeries:
    """Tableau-sum form of s_lambda(q^rho), exact mod u**(order+1)."""
    if order < 0:
        raise ValueError("order must be >= 0")
    if not lam.parts:
        return QSeries.one(order)
    max_entry = (order + 2) // 2  # u-weight of a single entry beyond this exceeds the window
    max_entry = max(max_entry, lam.length)  # a column needs that many distinct entries
    shapes = _subdiagrams(lam)
    strips = _horizontal_strip_pairs(shapes)
    # dist[mu] = sum over SSYT of shape mu with entries <= m of their weight
    dist: Dict[Partition, QSeries] = {Partition(): QSeries.one(order)}
    for m in range(1, max_entry + 1):
        w = 2 * m - 1  # u-exponent per box containing m
        new: Dict[Partition, QSeries] = {}
        for mu in shapes:
            acc = None
            for nu in strips[mu]:
                prev = dist.get(nu)
                if prev is None:
                    continue
                boxes = mu.degree - nu.degree
                term = prev if boxes == 0 else prev.shift(w * boxes).truncate(order)
                acc = term if acc is None else acc + term
            if acc is not None and not acc.is_zero:
                new[mu] = acc
        dist = new
        if lam not in dist and m >= lam.length:
            # nothing of the target shape reachable and never will be
            break
    return dist.get(lam, QSeries.zero(order)).truncate(order)
