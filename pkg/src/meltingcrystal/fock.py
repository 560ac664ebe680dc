"""Charged free-fermion Fock space, truncated to a degree window.

States, encoding
----------------
A basis state at charge p is labelled by a partition lambda; its occupied
mode set is {lambda_i - i + p : i >= 1}, which stabilizes to p - i deep
down.  All operators in scope preserve charge, so a computation fixes the
charge once and vectors/matrices are keyed by the partition alone.

Signs
-----
psi_m creates a particle at mode -m-1 and psi*_m removes the particle at
mode m-1; both pick up (-1)**(number of occupied modes above the touched
one).  With this rule the explicit product construction of |lambda; p>
from the charge-p vacuum comes out with coefficient +1 and the basis is
orthonormal (verified in the test suite, not assumed).

Windows
-------
Operators are materialized on Window(charge, cutoff, order): partitions of
degree <= cutoff, series coefficients certified to u**order.  Applications
that scatter weight above the cutoff mark the result as dropped; callers
that allow drops must supply a tail certificate (see crystal/toda) before
reading coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Tuple, Union

from .partitions import EMPTY, Partition
from .qalg import INF, QSeries, TPoly, WindowError, _min_trunc, inv_one_minus_u_pow

Coeff = Union[QSeries, TPoly]


@dataclass(frozen=True)
class Window:
    charge: int
    cutoff: int
    order: int

    def states(self) -> Tuple[Partition, ...]:
        from .partitions import partitions_up_to
        return partitions_up_to(self.cutoff)


class BasisState(NamedTuple):
    charge: int
    shape: Partition

    @property
    def degree(self) -> int:
        return self.shape.degree


def basis_inner(bra: BasisState, ket: BasisState) -> int:
    """Orthonormality pairing: 1 iff charge and shape both agree."""
    return 1 if bra == ket else 0


# ---------------------------------------------------------------------------
# Maya (occupied-mode) bookkeeping
# ---------------------------------------------------------------------------


def occupied_modes(lam: Partition, charge: int, depth: int) -> List[int]:
    """The first `depth` occupied modes, strictly decreasing."""
    return [lam.part(i) - i + charge for i in range(1, depth + 1)]


def _partition_from_modes(modes: List[int], charge: int) -> Partition:
    """Invert lambda_i = mode_i + i - charge; modes must be strictly decreasing
    and extend deep enough that the tail has already reached lambda_i = 0."""
    parts = []
    for i, n in enumerate(modes, start=1):
        x = n + i - charge
        if x < 0:
            raise ValueError("mode list does not describe a partition at this charge")
        parts.append(x)
    while parts and parts[-1] == 0:
        parts.pop()
    return Partition(parts)


@lru_cache(maxsize=None)
def mode_moves(lam: Partition, charge: int, m: int) -> Tuple[Tuple[int, Partition, int], ...]:
    """One-particle moves s -> s - m: tuples (s, new_shape, sign).

    These are the matrix elements of sum_s c^+_{s-m} c_s; the weight in a
    specific bilinear is a function of s supplied by the caller.
    """
    if m == 0:
        return ()
    depth = lam.length + abs(m) + 2
    modes = occupied_modes(lam, charge, depth)
    mset = set(modes)
    sea_top = modes[-1]  # every mode <= sea_top - 1 ... actually <= modes[-1]-1 is occupied too
    out = []
    for idx, s in enumerate(modes):
        t = s - m
        if t in mset:
            continue
        if t < sea_top:
            continue  # deep-sea target, occupied
        # sign: remove at s, then insert t
        sign = -1 if (idx % 2) else 1
        rest = modes[:idx] + modes[idx + 1:]
        pos = 0
        while pos < len(rest) and rest[pos] > t:
            pos += 1
        if pos % 2:
            sign = -sign
        new_modes = rest[:pos] + [t] + rest[pos:]
        out.append((s, _partition_from_modes(new_modes, charge), sign))
    return tuple(out)


@lru_cache(maxsize=None)
def mode_diffs(lam: Partition, charge: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """(added, removed) modes of |lambda; p> relative to the charge-0 vacuum."""
    depth = lam.length + abs(charge) + 2
    floor = min(charge - depth, -depth)
    mine = set()
    i = 1
    while True:
        n = lam.part(i) - i + charge
        if n < floor:
            break
        mine.add(n)
        i += 1
    vac = set(range(floor, 0))  # modes floor..-1 of the charge-0 vacuum
    added = tuple(sorted(mine - vac))
    removed = tuple(sorted(vac - mine))
    return added, removed


def phi_eigenvalue(k: int, lam: Partition, charge: int) -> QSeries:
    """Diagonal value of the k-th hamiltonian on |lambda; p> via the mode sum."""
    added, removed = mode_diffs(lam, charge)
    coeffs: Dict[int, int] = {}
    for n in added:
        e = 2 * k * (n + 1)
        coeffs[e] = coeffs.get(e, 0) + 1
    for n in removed:
        e = 2 * k * (n + 1)
        coeffs[e] = coeffs.get(e, 0) - 1
    return QSeries.from_coeff_map(coeffs)


@lru_cache(maxsize=None)
def w_eigenvalue(lam: Partition, charge: int) -> int:
    """Diagonal value of the weighted bilinear with weight n**2 (u-exponent of
    the half-power conjugator)."""
    added, removed = mode_diffs(lam, charge)
    return sum((n + 1) ** 2 for n in added) - sum((n + 1) ** 2 for n in removed)


@lru_cache(maxsize=None)
def l0_eigenvalue(lam: Partition, charge: int) -> int:
    added, removed = mode_diffs(lam, charge)
    return sum(n + 1 for n in added) - sum(n + 1 for n in removed)


@lru_cache(maxsize=None)
def k_eigenvalue(lam: Partition, charge: int) -> int:
    """Half-integer-shifted weight (n - 1/2)**2, normalized against the
    charge-p vacuum so the value is an even integer at every charge."""
    def raw(shape: Partition) -> Fraction:
        added, removed = mode_diffs(shape, charge)
        tot = Fraction(0)
        for n in added:
            tot += Fraction(2 * (n + 1) - 1, 2) ** 2
        for n in removed:
            tot -= Fraction(2 * (n + 1) - 1, 2) ** 2
        return tot
    val = raw(lam) - raw(EMPTY)
    assert val.denominator == 1
    return int(val)


# ---------------------------------------------------------------------------
# Fermion mode actions on vectors
# ---------------------------------------------------------------------------


class FockVector:
    """Finite linear combination of basis states at a fixed charge.

    ``order`` is the u-window of the vector as a whole: a state absent from
    ``entries`` has coefficient zero mod u**(order+1) (exactly zero when the
    order is None).
    """

    __slots__ = ("charge", "entries", "cutoff", "dropped", "order")

    def __init__(self, charge: int, entries: Dict[Partition, Coeff], cutoff: int,
                 dropped: bool = False, order: Optional[int] = None):
        self.charge = charge
        self.cutoff = cutoff
        self.dropped = dropped
        self.order = order
        self.entries = {lam: c for lam, c in entries.items()
                        if lam.degree <= cutoff and not c.is_zero}

    @classmethod
    def basis(cls, state: BasisState, cutoff: int, order: Optional[int] = None) -> "FockVector":
        one = QSeries.one(order)
        return cls(state.charge, {state.shape: one}, cutoff, order=order)

    def coeff(self, lam: Partition) -> Coeff:
        return self.entries.get(lam, QSeries.zero(self.order))

    def add(self, other: "FockVector") -> "FockVector":
        if other.charge != self.charge:
            raise ValueError("cannot add vectors of different charge")
        cut = min(self.cutoff, other.cutoff)
        entries = dict(self.entries)
        for lam, c in other.entries.items():
            entries[lam] = entries[lam] + c if lam in entries else c
        return FockVector(self.charge, entries, cut, self.dropped or other.dropped,
                          _min_trunc(self.order, other.order))

    def scale(self, c) -> "FockVector":
        return FockVector(self.charge, {lam: v * c for lam, v in self.entries.items()},
                          self.cutoff, self.dropped, self.order)

    @property
    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        if not isinstance(other, FockVector):
            return NotImplemented
        if self.charge != other.charge:
            return False
        zero = QSeries.zero()
        keys = set(self.entries) | set(other.entries)
        return all(self.entries.get(k, zero) == other.entries.get(k, zero) for k in keys)

    __hash__ = None

    def __repr__(self):
        bits = [f"({c})|{lam.parts};{self.charge}>" for lam, c in sorted(self.entries.items())]
        return " + ".join(bits) if bits else f"0 (charge {self.charge})"


def apply_fermion(kind: str, m: int, vec: FockVector) -> FockVector:
    """Apply psi_m (kind="psi") or psi*_m (kind="psi_star") to a ket vector.

    psi raises the charge by one, psi* lowers it.  States pushed past the
    degree cutoff are dropped and flagged on the result.
    """
    if kind not in ("psi", "psi_star"):
        raise ValueError("kind must be 'psi' or 'psi_star'")
    create = kind == "psi"
    new_charge = vec.charge + (1 if create else -1)
    target_mode = (-m - 1) if create else (m - 1)
    entries: Dict[Partition, Coeff] = {}
    dropped = vec.dropped
    for lam, c in vec.entries.items():
        depth = lam.length + abs(vec.charge - target_mode) + 3
        modes = occupied_modes(lam, vec.charge, depth)
        mset = set(modes)
        in_sea = target_mode < modes[-1]
        if create:
            if target_mode in mset or in_sea:
                continue
            pos = 0
            while pos < len(modes) and modes[pos] > target_mode:
                pos += 1
            sign = -1 if pos % 2 else 1
            new_modes = modes[:pos] + [target_mode] + modes[pos:]
        else:
            if target_mode not in mset and not in_sea:
                continue
            pos = modes.index(target_mode)
            sign = -1 if pos % 2 else 1
            new_modes = modes[:pos] + modes[pos + 1:]
        new_lam = _partition_from_modes(new_modes, new_charge)
        if new_lam.degree > vec.cutoff:
            dropped = True
            continue
        add = c.scale(sign) if isinstance(c, QSeries) else c * sign
        entries[new_lam] = entries[new_lam] + add if new_lam in entries else add
    return FockVector(new_charge, entries, vec.cutoff, dropped, vec.order)


def state_from_construction(lam: Partition, charge: int, cutoff: int) -> FockVector:
    """Build |lambda; p> from |p> by the explicit fermion product: psi factors
    for the shifted row modes, psi* factors clearing the top of the sea."""
    n = lam.length
    vec = FockVector.basis(BasisState(charge, EMPTY), cutoff)
    for i in range(1, n + 1):  # rightmost factor acts first
        vec = apply_fermion("psi_star", (charge - i) + 1, vec)
    for i in range(n, 0, -1):
        vec = apply_fermion("psi", -(charge + lam.part(i) - i) - 1, vec)
    return vec


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


class FockOperator:
    """Sparse charge-preserving operator on a degree window.

    Entries are stored by row: rows[mu][nu] = <mu| Op |nu>.  Coefficients
    are QSeries (or TPoly for the coupling-dressed diagonals).
    """

    __slots__ = ("window", "rows", "charge_shift", "_cols")

    def __init__(self, window: Window, rows: Dict[Partition, Dict[Partition, Coeff]],
                 charge_shift: int = 0):
        self.window = window
        self.charge_shift = charge_shift
        self.rows = {r: {c: v for c, v in cols.items() if not v.is_zero}
                     for r, cols in rows.items()}
        self.rows = {r: cols for r, cols in self.rows.items() if cols}
        self._cols = None

    # -- structure ---------------------------------------------------------

    def entries(self):
        for r, cols in self.rows.items():
            for c, v in cols.items():
                yield r, c, v

    def entry(self, row: Partition, col: Partition) -> Coeff:
        return self.rows.get(row, {}).get(col, QSeries.zero())

    def by_col(self) -> Dict[Partition, Dict[Partition, Coeff]]:
        if self._cols is None:
            cols: Dict[Partition, Dict[Partition, Coeff]] = {}
            for r, rowmap in self.rows.items():
                for c, v in rowmap.items():
                    cols.setdefault(c, {})[r] = v
            self._cols = cols
        return self._cols

    def val_profile(self) -> Dict[int, int]:
        """Per degree shift (row - col), the minimal u-valuation of entries."""
        prof: Dict[int, int] = {}
        for r, c, v in self.entries():
            val = v.valuation if isinstance(v, QSeries) else min(
                (s.valuation for s in v.terms.values()), default=INF)
            if val == INF:
                continue
            d = r.degree - c.degree
            prof[d] = min(prof.get(d, val), val)
        return prof

    # -- algebra -----------------------------------------------------------

    def __add__(self, other) -> "FockOperator":
        rows = {r: dict(cols) for r, cols in self.rows.items()}
        for r, c, v in other.entries():
            row = rows.setdefault(r, {})
            row[c] = row[c] + v if c in row else v
        return FockOperator(self.window, rows)

    def __sub__(self, other) -> "FockOperator":
        return self + other.scale(-1)

    def scale(self, c) -> "FockOperator":
        return FockOperator(self.window,
                            {r: {col: v * c for col, v in cols.items()}
                             for r, cols in self.rows.items()})

    def __matmul__(self, other) -> "FockOperator":
        rows: Dict[Partition, Dict[Partition, Coeff]] = {}
        for r, arow in self.rows.items():
            acc: Dict[Partition, Coeff] = {}
            for x, av in arow.items():
                brow = other.rows.get(x)
                if not brow:
                    continue
                for c, bv in brow.items():
                    prod = av * bv
                    acc[c] = acc[c] + prod if c in acc else prod
            if acc:
                rows[r] = acc
        return FockOperator(self.window, rows)

    def commutator(self, other: "FockOperator") -> "FockOperator":
        return (self @ other) - (other @ self)

    def apply_ket(self, vec: FockVector) -> FockVector:
        cols = self.by_col()
        entries: Dict[Partition, Coeff] = {}
        for c, vc in vec.entries.items():
            colmap = cols.get(c)
            if not colmap:
                continue
            for r, ov in colmap.items():
                prod = ov * vc
                entries[r] = entries[r] + prod if r in entries else prod
        return FockVector(vec.charge, entries, min(vec.cutoff, self.window.cutoff),
                          vec.dropped, _min_trunc(vec.order, self.window.order))

    def apply_bra(self, vec: FockVector) -> FockVector:
        entries: Dict[Partition, Coeff] = {}
        for r, vr in vec.entries.items():
            rowmap = self.rows.get(r)
            if not rowmap:
                continue
            for c, ov in rowmap.items():
                prod = vr * ov
                entries[c] = entries[c] + prod if c in entries else prod
        return FockVector(vec.charge, entries, min(vec.cutoff, self.window.cutoff),
                          vec.dropped, _min_trunc(vec.order, self.window.order))

    def truncate_series(self, order: int) -> "FockOperator":
        def clip(v):
            return v.truncate(order) if isinstance(v, QSeries) else v.truncate_series(order)
        return FockOperator(self.window,
                            {r: {c: clip(v) for c, v in cols.items()}
                             for r, cols in self.rows.items()})

    def to_json(self) -> dict:
        triples = []
        for r, c, v in sorted(self.entries(), key=lambda t: (t[0], t[1])):
            val = v.to_json() if isinstance(v, QSeries) else v.to_json()
            triples.append({"row": r.to_json(), "col": c.to_json(), "coeff": val})
        return {"charge": self.window.charge, "cutoff": self.window.cutoff,
                "order": self.window.order, "charge_shift": self.charge_shift,
                "entries": triples}


def identity_op(win: Window, order: Optional[int] = None) -> FockOperator:
    one = QSeries.one(order)
    return FockOperator(win, {lam: {lam: one} for lam in win.states()})


def diagonal_op(win: Window, value: Callable[[Partition], Coeff]) -> FockOperator:
    rows = {}
    for lam in win.states():
        v = value(lam)
        if not v.is_zero:
            rows[lam] = {lam: v}
    return FockOperator(win, rows)


def torus_op(k: int, m: int, win: Window) -> FockOperator:
    """The bilinear with weight q**(k n) and mode shift m, normalized against
    the charge-0 vacuum; k = 0 gives the current modes, m = 0 the hamiltonians."""
    if k < 0:
        raise ValueError("only the nonnegative-k half of the algebra is in scope")
    if m == 0:
        if k == 0:
            p = win.charge
            return diagonal_op(win, lambda lam: QSeries.const(p)) if p else \
                FockOperator(win, {})
        return diagonal_op(win, lambda lam: phi_eigenvalue(k, lam, win.charge))
    rows: Dict[Partition, Dict[Partition, Coeff]] = {}
    for lam in win.states():
        for s, new_lam, sign in mode_moves(lam, win.charge, m):
            if new_lam.degree > win.cutoff:
                continue
            exp = 2 * k * (s + 1) - k * m  # u-exponent of q^{k(s+1)} * q^{-km/2}
            coeff = QSeries.u_power(exp, sign)
            row = rows.setdefault(new_lam, {})
            row[lam] = row[lam] + coeff if lam in row else coeff
    return FockOperator(win, rows)


def current_op(m: int, win: Window) -> FockOperator:
    return torus_op(0, m, win)


def hamiltonian_op(k: int, win: Window) -> FockOperator:
    return torus_op(k, 0, win)


def w_conjugator_op(win: Window, sign: int = 1) -> FockOperator:
    """Diagonal q**(+-W/2); entries are exact u-monomials."""
    return diagonal_op(win, lambda lam: QSeries.u_power(sign * w_eigenvalue(lam, win.charge)))


def k_conjugator_op(win: Window, sign: int = 1) -> FockOperator:
    """Diagonal q**(+-K/2) with the half-shifted weight, vacuum-normalized."""
    return diagonal_op(win, lambda lam: QSeries.u_power(sign * k_eigenvalue(lam, win.charge)))


def l0_op(win: Window) -> FockOperator:
    return diagonal_op(win, lambda lam: QSeries.const(l0_eigenvalue(lam, win.charge)))


def q_l0_op(win: Window, nt: int, t_trunc: int, q_trunc: Optional[int] = None) -> FockOperator:
    """Diagonal Q**L0 reduced to Q**|lambda| at fixed charge.

    The charge-sector constant Q**(p(p+1)/2) is dropped so that the grading
    matches the instanton sum termwise; the same normalization is used on
    both sides of every identity involving Q.
    """
    if q_trunc is None:
        q_trunc = win.cutoff
    one = QSeries.one()
    return diagonal_op(win, lambda lam: TPoly.q_monomial(lam.degree, one, nt, t_trunc,
                                                         q_trunc=q_trunc))


def exp_h_op(win: Window, n_couplings: int, t_trunc: int,
             q_trunc: Optional[int] = None) -> FockOperator:
    """Diagonal exp(sum_k t_k Phi_k(lambda, p)) as a coupling polynomial."""
    def value(lam: Partition) -> TPoly:
        acc = TPoly.zero(n_couplings, t_trunc, q_trunc=q_trunc)
        for k in range(1, n_couplings + 1):
            phi = phi_eigenvalue(k, lam, win.charge)
            if not phi.is_zero:
                acc = acc + TPoly.coupling(k, phi, n_couplings, t_trunc, q_trunc=q_trunc)
        return acc.exp()
    return diagonal_op(win, value)


def build_bilinear(kind: str, win: Window, *, k: int = 0, m: int = 0,
                   nt: int = 0, t_trunc: int = 0) -> FockOperator:
    """Dispatcher keyed by the operator family name."""
    if kind == "J":
        return current_op(m, win)
    if kind == "H":
        return hamiltonian_op(k, win)
    if kind == "V":
        return torus_op(k, m, win)
    if kind == "W":
        return diagonal_op(win, lambda lam: QSeries.const(w_eigenvalue(lam, win.charge)))
    if kind == "L0":
        return l0_op(win)
    if kind == "K":
        return diagonal_op(win, lambda lam: QSeries.const(k_eigenvalue(lam, win.charge)))
    if kind == "QL0":
        return q_l0_op(win, nt, t_trunc)
    raise ValueError(f"unknown bilinear kind {kind!r}")


# ---------------------------------------------------------------------------
# Matrix exponentials and vertex operators
# ---------------------------------------------------------------------------


def exp_op(a: FockOperator, order: Optional[int] = None) -> FockOperator:
    """exp of an operator all of whose entries move degree in one direction.

    Degree-graded nilpotence on the window makes the series finite; the
    number of terms is bounded by the cutoff.
    """
    shifts = {r.degree - c.degree for r, c, _ in a.entries()}
    if shifts and (min(shifts) < 0 < max(shifts) or 0 in shifts):
        raise ValueError("exp_op needs a strictly graded (one-direction) operator")
    win = a.window
    out = identity_op(win, order)
    term = identity_op(win, order)
    for n in range(1, win.cutoff + 1):
        term = (term @ a).scale(Fraction(1, n))
        if order is not None:
            term = term.truncate_series(order)
        if not term.rows:
            break
        out = out + term
    return out


def _gamma_exponent_coeff(sign: int, m: int, k: int, order: int) -> QSeries:
    """Coefficient of the k-th current mode in the vertex-operator exponent."""
    exp = -k * (2 * m + 1) if sign > 0 else k * (2 * m + 1)
    return QSeries.u_power(exp, Fraction(1, k)).truncate(order + max(exp, 0))


def gamma_exponent_op(sign: int, m: int, win: Window) -> FockOperator:
    """The current-mode combination whose exponential is Gamma_{+-}(m)."""
    if sign > 0 and m > -1:
        raise ValueError("the raising transfer matrix needs m <= -1")
    if sign < 0 and m < 0:
        raise ValueError("the lowering transfer matrix needs m >= 0")
    acc: Optional[FockOperator] = None
    for k in range(1, win.cutoff + 1):
        jk = current_op(k if sign > 0 else -k, win)
        term = jk.scale(_gamma_exponent_coeff(sign, m, k, win.order))
        acc = term if acc is None else acc + term
    return acc if acc is not None else FockOperator(win, {})


def gamma_op(sign: int, m: int, win: Window, route: str = "interlace") -> FockOperator:
    """Transfer matrix between adjacent diagonal slices.

    route="interlace" writes the known action on basis states directly;
    route="exp" exponentiates the current-mode combination; route="both"
    builds the two and raises unless they agree entrywise.
    """
    if route == "exp":
        return exp_op(gamma_exponent_op(sign, m, win), win.order).truncate_series(win.order)
    if route == "both":
        a = gamma_op(sign, m, win, "interlace")
        b = gamma_op(sign, m, win, "exp")
        keys = set()
        for r, c, _ in a.entries():
            keys.add((r, c))
        for r, c, _ in b.entries():
            keys.add((r, c))
        for r, c in keys:
            if a.entry(r, c) != b.entry(r, c):
                raise AssertionError(f"transfer-matrix routes disagree at ({r}, {c})")
        return a
    if route != "interlace":
        raise ValueError("route must be interlace, exp, or both")
    if sign > 0 and m > -1:
        raise ValueError("the raising transfer matrix needs m <= -1")
    if sign < 0 and m < 0:
        raise ValueError("the lowering transfer matrix needs m >= 0")
    w = (2 * m + 1) if sign < 0 else -(2 * m + 1)  # positive u-weight per box
    rows: Dict[Partition, Dict[Partition, Coeff]] = {}
    for lam in win.states():
        # pairs (mu > lam): for the lowering matrix mu is the row, for the
        # raising matrix mu is the column
        for mu, dd in _successors(lam, win.cutoff):
            coeff = QSeries.u_power(w * dd).truncate(win.order)
            if sign < 0:
                rows.setdefault(mu, {})[lam] = coeff
            else:
                rows.setdefault(lam, {})[mu] = coeff
    return FockOperator(win, rows)


@lru_cache(maxsize=None)
def _successors(lam: Partition, cutoff: int) -> Tuple[Tuple[Partition, int], ...]:
    return tuple((mu, mu.degree - lam.degree)
                 for mu in lam.horizontal_successors(cutoff))


@lru_cache(maxsize=None)
def _predecessors(lam: Partition) -> Tuple[Tuple[Partition, int], ...]:
    return tuple((nu, lam.degree - nu.degree) for nu in lam.horizontal_predecessors())


def gamma_factor_count(sign: int, order: int) -> int:
    """How many transfer matrices are needed so the omitted tail of the
    factorized product only touches coefficients beyond u**order."""
    if sign < 0:
        m = 0
        while 2 * m + 3 <= order:
            m += 1
        return m + 1  # factors m = 0..m
    m = 1
    while 2 * m + 1 <= order:
        m += 1
    return m  # factors m = -1..-m


def g_exponent_op(sign: int, win: Window, scale: int = 1) -> FockOperator:
    """sum_k q^{k/2}/(k(1-q^k)) J_{+-k}, the exponent of the dressing operator."""
    acc: Optional[FockOperator] = None
    for k in range(1, win.cutoff + 1):
        coeff = inv_one_minus_u_pow(2 * k, win.order).shift(k).scale(Fraction(scale, k))
        jk = current_op(k if sign > 0 else -k, win)
        term = jk.scale(coeff)
        acc = term if acc is None else acc + term
    return acc if acc is not None else FockOperator(win, {})


def g_op(sign: int, win: Window, route: str = "exp") -> FockOperator:
    """Dressing operator G_+ (sign > 0) or G_- (sign < 0) on the window."""
    if route == "exp":
        return exp_op(g_exponent_op(sign, win), win.order).truncate_series(win.order)
    if route == "gamma":
        count = gamma_factor_count(sign, win.order)
        out = identity_op(win, win.order)
        for i in range(count):
            m = -(i + 1) if sign > 0 else i
            out = out @ gamma_op(sign, m, win, "interlace")
        return out.truncate_series(win.order)
    raise ValueError("route must be exp or gamma")


def g_inverse_op(sign: int, win: Window) -> FockOperator:
    """Inverse dressing operator, from the negated exponent."""
    return exp_op(g_exponent_op(sign, win, scale=-1), win.order).truncate_series(win.order)


# ---------------------------------------------------------------------------
# Fast chain application of the factorized dressing operators
# ---------------------------------------------------------------------------

# Accumulator representation during chains: {shape: [min_exp, coeff list, trunc]}
# with trunc possibly the float INF sentinel.  Entries beyond the u-order cap
# are discarded as they can never enter a certified coefficient.

_Acc = list


def _vec_to_acc(vec: FockVector) -> Dict[Partition, _Acc]:
    out = {}
    for lam, c in vec.entries.items():
        if not isinstance(c, QSeries):
            raise TypeError("chain application expects plain series coefficients")
        out[lam] = [c.min_exp, list(c.coeffs), INF if c.trunc is None else c.trunc]
    return out


def _acc_to_vec(acc: Dict[Partition, _Acc], charge: int, cutoff: int, order: int,
                dropped: bool, vec_order: Optional[int]) -> FockVector:
    entries = {}
    for lam, (mn, coeffs, tr) in acc.items():
        t = order if tr == INF else min(int(tr), order)
        entries[lam] = QSeries(mn, coeffs, t)
    return FockVector(charge, entries, cutoff, dropped, _min_trunc(vec_order, order))


def _acc_scatter(src: Dict[Partition, _Acc], pairs_of: Callable, weight: int,
                 order: int) -> Dict[Partition, _Acc]:
    """out[dst] += u**(weight * boxes) * src[s] over pairs (dst, boxes) of s."""
    out: Dict[Partition, _Acc] = {}
    for s, (smin, scoef, strunc) in src.items():
        for dst, boxes in pairs_of(s):
            shift = weight * boxes
            nmin = smin + shift
            if nmin > order:
                continue
            ntr = strunc if strunc == INF else strunc + shift
            entry = out.get(dst)
            if entry is None:
                hi = min(len(scoef), order - nmin + 1)
                out[dst] = [nmin, scoef[:hi], ntr]
                continue
            emin, ecoef, etr = entry
            lo = min(emin, nmin)
            if lo < emin:
                ecoef[:0] = [0] * (emin - lo)
                entry[0] = emin = lo
            need = nmin - emin + min(len(scoef), order - nmin + 1)
            if need > len(ecoef):
                ecoef.extend([0] * (need - len(ecoef)))
            base = nmin - emin
            for i in range(min(len(scoef), order - nmin + 1)):
                c = scoef[i]
                if c:
                    ecoef[base + i] += c
            if ntr < etr:
                entry[2] = ntr
    return out


def _chain_dressing(vec: FockVector, sign: int, direction: str, order: int) -> FockVector:
    """Apply the full dressing operator to a vector through its transfer-matrix
    factorization.  direction is "ket" or "bra".

    Raising applications (ket of G_-, bra of G_+) scatter weight above the
    cutoff; the tail is dropped and flagged, to be certified by the caller.
    Lowering applications are exact on the window.
    """
    cutoff = vec.cutoff
    acc = _vec_to_acc(vec)
    count = gamma_factor_count(sign, order)
    raising = (sign < 0) == (direction == "ket")
    dropped = vec.dropped or (raising and bool(acc))
    for i in range(count):
        m = -(i + 1) if sign > 0 else i
        w = (2 * m + 1) if sign < 0 else -(2 * m + 1)
        if raising:
            acc = _acc_scatter(acc, lambda s: _successors(s, cutoff), w, order)
        else:
            acc = _acc_scatter(acc, _predecessors, w, order)
    return _acc_to_vec(acc, vec.charge, cutoff, order, dropped, vec.order)


def apply_g_ket(sign: int, vec: FockVector, order: int) -> FockVector:
    return _chain_dressing(vec, sign, "ket", order)


def apply_g_bra(sign: int, vec: FockVector, order: int) -> FockVector:
    return _chain_dressing(vec, sign, "bra", order)


def apply_diagonal(vec: FockVector, value: Callable[[Partition], Coeff]) -> FockVector:
    entries = {lam: c * value(lam) for lam, c in vec.entries.items()}
    return FockVector(vec.charge, entries, vec.cutoff, vec.dropped, vec.order)


# ---------------------------------------------------------------------------
# Expectation values
# ---------------------------------------------------------------------------


def vacuum_bra(win: Window) -> FockVector:
    return FockVector(win.charge, {EMPTY: QSeries.one()}, win.cutoff, order=win.order)


def expectation(win: Window, operators: Iterable[FockOperator],
                tail_clip: Optional[int] = None) -> Coeff:
    """<p| O_1 ... O_n |p> by sparse row propagation.

    Every operator must live on a window at least as large as `win`.  If the
    propagation never leaves the window the result is exact to the minimum
    of the entry windows; otherwise a tail certificate (``tail_clip``: the
    minimal u-valuation of everything dropped) is required and the result
    window is clipped below it.
    """
    row = vacuum_bra(win)
    for op in operators:
        row = op.apply_bra(row)
    if row.dropped and tail_clip is None:
        raise WindowError("expectation dropped tail weight without a certificate")
    out = row.coeff(EMPTY)
    if tail_clip is not None:
        clip = tail_clip - 1
        out = out.truncate(clip) if isinstance(out, QSeries) else out.truncate_series(clip)
    if isinstance(out, QSeries) and out.trunc is not None and out.trunc < 0:
        raise WindowError("window too small to certify any coefficient")
    return out
