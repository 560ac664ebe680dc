"""Melting-crystal partition functions, by independent routes.

The undeformed generating functions come as infinite products, as sums of
squared principal Schur values, and (for small volumes) by direct
enumeration.  The deformed partition function carries external potentials
phi_k with coupling constants t_k, an optional grading variable Q, and is
computed both as a combinatorial Schur sum and through the fermionic
expectation value.

Tail certificates
-----------------
Every truncated sum over partitions comes with a proved lower bound on the
u-valuation of everything it dropped.  A dropped shape with d boxes and l
rows contributes at least

    2 (l^2 - l + d)            from the two Schur weights, minus
    2 r K max(0, l - 1 - p)    from a coupling monomial of degree r,

and minimizing over l and d > cutoff gives the certificate.  Result
windows are clipped below the certificate, never assumed.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional

from .fock import (FockVector, Window, apply_g_bra, apply_g_ket,
                   phi_eigenvalue, vacuum_bra)
from .partitions import (EMPTY, Partition, enumerate_partitions,
                         enumerate_plane_partitions, partitions_up_to)
from .qalg import QSeries, TPoly, inv_one_minus_u_pow
from .schur import principal_schur_hook


def phi(k: int, lam: Partition, charge: int, order: Optional[int] = None) -> QSeries:
    """External potential as the cancelled finite sum plus geometric tail.

    Exact Laurent polynomial in u; this route is independent of the mode-sum
    diagonal used by the fock module and the two are cross-checked.
    """
    if k < 1:
        raise ValueError("the potential index starts at 1")
    coeffs = {}
    def bump(q_exp: int, c: int):
        e = 2 * q_exp
        coeffs[e] = coeffs.get(e, 0) + c
    for i in range(1, lam.length + 1):
        bump(k * (charge + lam.part(i) - i + 1), 1)
        bump(k * (charge - i + 1), -1)
    # q^k (1 - q^{pk}) / (1 - q^k): a finite geometric sum for either sign
    if charge > 0:
        for j in range(1, charge + 1):
            bump(k * j, 1)
    elif charge < 0:
        for j in range(charge + 1, 1):
            bump(k * j, -1)
    out = QSeries.from_coeff_map(coeffs)
    return out if order is None else out.truncate(order)


def z2d(order: int) -> QSeries:
    """Generating function of partition numbers as the inverse Euler product."""
    out = QSeries.one(order)
    n = 1
    while 2 * n <= order:
        out = out * inv_one_minus_u_pow(2 * n, order)
        n += 1
    return out


def z2d_enumeration(order: int) -> QSeries:
    """Same series assembled from brute-force enumeration (the oracle)."""
    n_max = order // 2
    counts = {2 * n: len(g) for n, g in enumerate(enumerate_partitions(n_max))}
    return QSeries.from_coeff_map(counts, order if order <= 2 * n_max + 1 else 2 * n_max + 1)


def z3d(order: int, route: str = "product") -> QSeries:
    """MacMahon generating function of plane partitions.

    route="product": prod (1 - q^n)^(-n).
    route="schur_sum": sum over shapes of the squared principal Schur value.
    route="direct": brute-force plane-partition enumeration (volume <= order//2,
    bounded for runtime; the certified window shrinks accordingly).
    """
    if route == "product":
        out = QSeries.one(order)
        n = 1
        while 2 * n <= order:
            f = inv_one_minus_u_pow(2 * n, order)
            for _ in range(n):
                out = out * f
            n += 1
        return out
    if route == "schur_sum":
        cut = order // 2  # dropped shapes have squared weight >= 2(cut+1) > order
        out = QSeries.zero(order)
        for lam in partitions_up_to(cut):
            s = principal_schur_hook(lam, order)
            out = out + (s * s).truncate(order)
        return out
    if route == "direct":
        n_max = order // 2
        if n_max > 12:
            raise ValueError("direct enumeration is limited to volume 12")
        counts = {2 * n: len(g) for n, g in enumerate(enumerate_plane_partitions(n_max))}
        return QSeries.from_coeff_map(counts, min(order, 2 * n_max + 1))
    raise ValueError("route must be product, schur_sum, or direct")


# ---------------------------------------------------------------------------
# Windows for the deformed sums
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def diag_tail_valuation(cutoff: int, charge: int, couplings: int, t_degree: int) -> int:
    """Minimal u-valuation of any dropped term of the diagonal Schur sum."""
    best = None
    l_max = cutoff + 2 * t_degree * couplings + 4
    for l in range(1, l_max + 1):
        d = max(l, cutoff + 1)
        val = 2 * (l * l - l + d) - 2 * t_degree * couplings * max(0, l - 1 - charge)
        best = val if best is None else min(best, val)
    return best


@lru_cache(maxsize=None)
def cutoff_for_diag(order: int, charge: int, couplings: int, t_degree: int) -> int:
    """Smallest shape cutoff whose dropped tail lies beyond the u-window."""
    d = 0
    while diag_tail_valuation(d, charge, couplings, t_degree) <= order:
        d += 1
    return d


def chain_order_cap(order: int, cutoff: int, charge: int, couplings: int,
                    t_degree: int) -> int:
    """u-order to carry through the dressing chains of the fermionic route.

    A chain coefficient at shape lambda later meets the diagonal potential
    factor (valuation >= -2 t_degree K max(0, l-1-p)) and the opposite
    dressing column (valuation = sum of squared column heights), so it only
    matters below order + drop(lambda) - weight(lambda); the cap is the max
    of that over the window, and is shared by every state for monotonicity.
    """
    cap = order
    for lam in partitions_up_to(cutoff):
        drop = 2 * t_degree * couplings * max(0, lam.length - 1 - charge)
        cap = max(cap, order + drop - lam.weight_valuation())
    return cap


# ---------------------------------------------------------------------------
# Deformed partition function: combinatorial route
# ---------------------------------------------------------------------------


def zp(charge: int, couplings: int, t_degree: int, order: int,
       with_q: bool = False, cutoff: Optional[int] = None) -> TPoly:
    """Schur-sum form of the deformed partition function.

    Without Q the shape cutoff is certified by the diagonal tail bound and
    coefficient windows are clipped accordingly; with Q each power of Q is
    a finite sum and is exact (the Q window equals the cutoff).
    """
    if cutoff is None:
        cutoff = cutoff_for_diag(order, charge, couplings, t_degree)
    q_trunc = cutoff if with_q else None
    acc = TPoly.zero(couplings, t_degree, q_trunc=q_trunc)
    for lam in partitions_up_to(cutoff):
        # the potential factors can dip to negative u-valuation, so the
        # squared weight must be carried beyond the target window
        drop = 2 * t_degree * couplings * max(0, lam.length - 1 - charge)
        s = principal_schur_hook(lam, order + drop)
        weight = (s * s).truncate(order + drop)
        if weight.is_zero:
            continue
        pot = TPoly.zero(couplings, t_degree, q_trunc=q_trunc)
        for k in range(1, couplings + 1):
            pk = phi(k, lam, charge)
            if not pk.is_zero:
                pot = pot + TPoly.coupling(k, pk, couplings, t_degree, q_trunc=q_trunc)
        term = pot.exp().scale(weight)
        if with_q:
            term = term * TPoly.q_monomial(lam.degree, QSeries.one(), couplings,
                                           t_degree, q_trunc=q_trunc)
        acc = acc + term
    acc = acc.truncate_series(order)
    if not with_q:
        acc = acc.clip_series_by_degree(
            lambda r: min(order, diag_tail_valuation(cutoff, charge, couplings, r) - 1))
    return acc


# ---------------------------------------------------------------------------
# Deformed partition function: fermionic route
# ---------------------------------------------------------------------------


def zp_fermionic(charge: int, couplings: int, t_degree: int, order: int,
                 with_q: bool = False, cutoff: Optional[int] = None) -> TPoly:
    """Expectation-value form: dress the vacuum on both sides, weight the
    middle with the coupling exponential (and the Q grading), contract.

    Built entirely from the transfer-matrix factorization and the mode-sum
    diagonal; shares no arithmetic with the combinatorial route.
    """
    if cutoff is None:
        cutoff = cutoff_for_diag(order, charge, couplings, t_degree)
    cap = chain_order_cap(order, cutoff, charge, couplings, t_degree)
    win = Window(charge, cutoff, cap)
    row = apply_g_bra(1, vacuum_bra(win), cap)
    col = apply_g_ket(-1, FockVector(charge, {EMPTY: QSeries.one()}, cutoff, order=cap), cap)
    q_trunc = cutoff if with_q else None
    acc = TPoly.zero(couplings, t_degree, q_trunc=q_trunc)
    for lam, rv in row.entries.items():
        cv = col.coeff(lam)
        if cv.is_zero:
            continue
        weight = rv * cv
        pot = TPoly.zero(couplings, t_degree, q_trunc=q_trunc)
        for k in range(1, couplings + 1):
            pk = phi_eigenvalue(k, lam, charge)
            if not pk.is_zero:
                pot = pot + TPoly.coupling(k, pk, couplings, t_degree, q_trunc=q_trunc)
        term = pot.exp().scale(weight)
        if with_q:
            term = term * TPoly.q_monomial(lam.degree, QSeries.one(), couplings,
                                           t_degree, q_trunc=q_trunc)
        acc = acc + term
    acc = acc.truncate_series(order)
    if not with_q:
        acc = acc.clip_series_by_degree(
            lambda r: min(order, diag_tail_valuation(cutoff, charge, couplings, r) - 1))
    return acc
