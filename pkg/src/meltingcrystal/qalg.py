"""Exact coefficient rings for all computations in this package.

Two value types live here:

* ``QSeries`` -- a truncated Laurent series in ``u = q**(1/2)`` with exact
  rational coefficients.  Working in the square root of q keeps every
  exponent integral: principal specializations carry weights like
  ``q**(m + 1/2)`` and the torus bilinears carry ``q**(-k*m/2)``, all of
  which are integer powers of u.

* ``TPoly`` -- a polynomial in coupling constants ``t_1..t_K`` (plus an
  optional second block ``tbar_1..tbar_K`` and a grading variable ``Q``),
  truncated in total coupling degree, with QSeries coefficients.

Truncation metadata travels with every value.  ``trunc = N`` means "all
coefficients of u**e with e <= N are exactly the stored ones"; ``trunc =
None`` means the value is known exactly (monomials, finite Laurent
polynomials).  Arithmetic propagates the window conservatively, so equality
comparisons are only ever made on coefficients both operands certify.

No floating point anywhere.  Coefficients are Python ints or
``fractions.Fraction``; they mix freely and stay exact.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Union

Rat = Union[int, Fraction]

INF = float("inf")  # internal sentinel for "exact"; never stored in results


class WindowError(ValueError):
    """A computation cannot certify any coefficient on the requested window."""


def _as_rat(c) -> Rat:
    if isinstance(c, (int, Fraction)):
        return c
    raise TypeError(f"exact rational required, got {type(c).__name__}")


def rat_str(c: Rat) -> str:
    return str(Fraction(c))


def rat_from_str(s: str) -> Rat:
    f = Fraction(s)
    return int(f) if f.denominator == 1 else f


def _min_trunc(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class QSeries:
    """Truncated Laurent series in u with exact rational coefficients.

    Canonical form: ``coeffs`` is a tuple whose first and last entries are
    nonzero (or empty for the zero series), ``min_exp`` is the exponent of
    the first stored coefficient, and nothing is stored past ``trunc``.
    Instances are immutable; all operations return new values.
    """

    __slots__ = ("min_exp", "coeffs", "trunc")

    def __init__(self, min_exp: int, coeffs: Iterable[Rat], trunc: Optional[int] = None):
        coeffs = [_as_rat(c) for c in coeffs]
        # strip leading zeros
        lead = 0
        while lead < len(coeffs) and coeffs[lead] == 0:
            lead += 1
        min_exp += lead
        coeffs = coeffs[lead:]
        # drop anything beyond the certified window
        if trunc is not None and coeffs:
            keep = trunc - min_exp + 1
            if keep <= 0:
                coeffs = []
            elif keep < len(coeffs):
                coeffs = coeffs[:keep]
        # strip trailing zeros
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs:
            min_exp = 0
        object.__setattr__(self, "min_exp", min_exp)
        object.__setattr__(self, "coeffs", tuple(coeffs))
        object.__setattr__(self, "trunc", trunc)

    def __setattr__(self, *a):  # immutability guard
        raise AttributeError("QSeries is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, trunc: Optional[int] = None) -> "QSeries":
        return cls(0, (), trunc)

    @classmethod
    def const(cls, c: Rat, trunc: Optional[int] = None) -> "QSeries":
        return cls(0, (c,), trunc)

    @classmethod
    def one(cls, trunc: Optional[int] = None) -> "QSeries":
        return cls(0, (1,), trunc)

    @classmethod
    def u_power(cls, exp: int, c: Rat = 1, trunc: Optional[int] = None) -> "QSeries":
        return cls(exp, (c,), trunc)

    @classmethod
    def q_power(cls, exp: int, c: Rat = 1, trunc: Optional[int] = None) -> "QSeries":
        """c * q**exp as a series in u (u-exponent 2*exp)."""
        return cls(2 * exp, (c,), trunc)

    @classmethod
    def from_coeff_map(cls, coeffs: Mapping[int, Rat], trunc: Optional[int] = None) -> "QSeries":
        if not coeffs:
            return cls.zero(trunc)
        lo = min(coeffs)
        hi = max(coeffs)
        arr = [coeffs.get(e, 0) for e in range(lo, hi + 1)]
        return cls(lo, arr, trunc)

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        """True when nothing is stored (zero on the certified window)."""
        return not self.coeffs

    @property
    def valuation(self):
        """Exponent of the first stored coefficient.

        For a stored zero this is trunc + 1 (the first exponent at which the
        series could be nonzero), or +inf for the exact zero.
        """
        if self.coeffs:
            return self.min_exp
        return INF if self.trunc is None else self.trunc + 1

    def coeff(self, exp: int) -> Rat:
        """Coefficient of u**exp.  Raises WindowError beyond the window."""
        if self.trunc is not None and exp > self.trunc:
            raise WindowError(f"coefficient of u^{exp} not certified (trunc={self.trunc})")
        i = exp - self.min_exp
        if not self.coeffs or i < 0 or i >= len(self.coeffs):
            return 0
        return self.coeffs[i]

    def items(self):
        for i, c in enumerate(self.coeffs):
            if c != 0:
                yield self.min_exp + i, c

    # -- window handling ---------------------------------------------------

    def truncate(self, trunc: Optional[int]) -> "QSeries":
        new = _min_trunc(self.trunc, trunc)
        if new == self.trunc:
            return self
        return QSeries(self.min_exp, self.coeffs, new)

    def require_trunc(self, order: int) -> "QSeries":
        if self.trunc is not None and self.trunc < order:
            raise WindowError(f"series certified only to u^{self.trunc}, need u^{order}")
        return self.truncate(order)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> "QSeries":
        if isinstance(other, (int, Fraction)):
            other = QSeries.const(other)
        if not isinstance(other, QSeries):
            return NotImplemented
        trunc = _min_trunc(self.trunc, other.trunc)
        if self.is_zero:
            return other.truncate(trunc)
        if other.is_zero:
            return self.truncate(trunc)
        lo = min(self.min_exp, other.min_exp)
        hi = max(self.min_exp + len(self.coeffs), other.min_exp + len(other.coeffs))
        arr = [0] * (hi - lo)
        for i, c in enumerate(self.coeffs):
            arr[self.min_exp - lo + i] = c
        for i, c in enumerate(other.coeffs):
            arr[other.min_exp - lo + i] += c
        return QSeries(lo, arr, trunc)

    __radd__ = __add__

    def __neg__(self) -> "QSeries":
        return QSeries(self.min_exp, tuple(-c for c in self.coeffs), self.trunc)

    def __sub__(self, other) -> "QSeries":
        if isinstance(other, (int, Fraction)):
            other = QSeries.const(other)
        if not isinstance(other, QSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "QSeries":
        return (-self) + other

    def scale(self, c: Rat) -> "QSeries":
        if c == 0:
            return QSeries.zero(self.trunc)
        return QSeries(self.min_exp, tuple(c * x for x in self.coeffs), self.trunc)

    def shift(self, exp: int) -> "QSeries":
        """Exact multiplication by u**exp."""
        t = None if self.trunc is None else self.trunc + exp
        return QSeries(self.min_exp + exp, self.coeffs, t)

    def __mul__(self, other) -> "QSeries":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, QSeries):
            return NotImplemented
        # window: largest exponent at which every contributing pair is known,
        # i.e. min(Ta + val(b), Tb + val(a)) adjusted for Laurent shifts
        ta = INF if self.trunc is None else self.trunc + other.valuation
        tb = INF if other.trunc is None else other.trunc + self.valuation
        t = min(ta, tb)
        trunc = None if t == INF else int(t)
        if self.is_zero or other.is_zero:
            return QSeries.zero(trunc)
        a, b = self.coeffs, other.coeffs
        if len(a) > len(b):
            a, b = b, a
        n, m = len(a), len(b)
        arr = [0] * (n + m - 1)
        for i, ca in enumerate(a):
            if ca == 0:
                continue
            if ca == 1:
                for j, cb in enumerate(b):
                    arr[i + j] += cb
            else:
                for j, cb in enumerate(b):
                    arr[i + j] += ca * cb
        return QSeries(self.min_exp + other.min_exp, arr, trunc)

    __rmul__ = __mul__

    def pow(self, n: int) -> "QSeries":
        if n < 0:
            return self.inverse().pow(-n)
        out = QSeries.one(self.trunc)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def inverse(self, order: Optional[int] = None) -> "QSeries":
        """Multiplicative inverse on the window.

        The leading stored coefficient must be nonzero (unit times a power
        of u).  For exact inputs an explicit ``order`` is required since the
        inverse is generally an infinite series.
        """
        if self.is_zero:
            raise WindowError("cannot invert the zero series")
        v = self.min_exp
        rel = None if self.trunc is None else self.trunc - v
        if order is not None:
            rel = order if rel is None else min(rel, order)
        if rel is None:
            raise WindowError("inverse of an exact series needs an explicit expansion order")
        c0 = self.coeffs[0]
        inv0 = Fraction(1, 1) / c0
        if inv0.denominator == 1:
            inv0 = int(inv0)
        # unit part recursion: b_n = -inv0 * sum_{i>=1} a_i b_{n-i}
        a = list(self.coeffs[: rel + 1]) + [0] * max(0, rel + 1 - len(self.coeffs))
        b = [inv0] + [0] * rel
        for n in range(1, rel + 1):
            s = 0
            for i in range(1, min(n, len(a) - 1) + 1):
                if a[i]:
                    s += a[i] * b[n - i]
            if s:
                b[n] = -inv0 * s
        return QSeries(-v, b, rel - v)

    def exp(self, order: Optional[int] = None) -> "QSeries":
        """exp of a series with strictly positive valuation."""
        if self.is_zero:
            t = self.trunc if order is None else _min_trunc(self.trunc, order)
            return QSeries.one(t)
        v = self.min_exp
        if v <= 0:
            raise WindowError("exp needs strictly positive u-valuation")
        trunc = _min_trunc(self.trunc, order)
        if trunc is None:
            raise WindowError("exp of an exact series needs an explicit expansion order")
        x = self.truncate(trunc)
        out = QSeries.one(trunc)
        term = QSeries.one(trunc)
        n = 0
        while (n + 1) * v <= trunc:
            n += 1
            term = (term * x).scale(Fraction(1, n))
            out = out + term
        return out

    # -- comparison --------------------------------------------------------

    def __eq__(self, other) -> bool:
        """Coefficient-wise equality on the shared certified window."""
        if isinstance(other, (int, Fraction)):
            other = QSeries.const(other)
        if not isinstance(other, QSeries):
            return NotImplemented
        t = _min_trunc(self.trunc, other.trunc)
        a, b = self, other
        if t is not None:
            a, b = self.truncate(t), other.truncate(t)
        return a.min_exp == b.min_exp and a.coeffs == b.coeffs

    __hash__ = None  # window equality is not hash-compatible

    def first_difference(self, other) -> Optional[int]:
        """Lowest exponent (within the shared window) where the two differ."""
        t = _min_trunc(self.trunc, other.trunc)
        a = self if t is None else self.truncate(t)
        b = other if t is None else other.truncate(t)
        lo = min(a.min_exp, b.min_exp)
        hi = max(a.min_exp + len(a.coeffs), b.min_exp + len(b.coeffs))
        for e in range(lo, hi):
            ca = a.coeffs[e - a.min_exp] if 0 <= e - a.min_exp < len(a.coeffs) else 0
            cb = b.coeffs[e - b.min_exp] if 0 <= e - b.min_exp < len(b.coeffs) else 0
            if ca != cb:
                return e
        return None

    # -- presentation ------------------------------------------------------

    def __repr__(self):
        return f"QSeries({self})"

    def __str__(self):
        if self.is_zero:
            body = "0"
        else:
            parts = []
            for e, c in self.items():
                if e == 0:
                    parts.append(rat_str(c))
                else:
                    mono = "u" if e == 1 else f"u^{e}"
                    if c == 1:
                        parts.append(mono)
                    elif c == -1:
                        parts.append(f"-{mono}")
                    else:
                        parts.append(f"{rat_str(c)}*{mono}")
            body = " + ".join(parts).replace("+ -", "- ")
        tail = "" if self.trunc is None else f" + O(u^{self.trunc + 1})"
        return body + tail

    def to_json(self) -> dict:
        if self.trunc is None:
            raise WindowError("serialize exact series via .truncate(order) first")
        return {
            "min_exp": self.min_exp if self.coeffs else 0,
            "trunc": self.trunc,
            "coeffs": [rat_str(c) for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, d: dict) -> "QSeries":
        return cls(d["min_exp"], [rat_from_str(s) for s in d["coeffs"]], d["trunc"])


# -- series helpers used throughout the package ----------------------------


@lru_cache(maxsize=None)
def inv_one_minus_u_pow(exp: int, order: int) -> QSeries:
    """(1 - u**exp)**(-1) = 1 + u**exp + u**(2 exp) + ... up to the order."""
    if exp <= 0:
        raise ValueError("need a positive exponent")
    coeffs = {e: 1 for e in range(0, order + 1, exp)}
    return QSeries.from_coeff_map(coeffs, order)


@lru_cache(maxsize=None)
def qk_over_one_minus_qk(k: int, order: int) -> QSeries:
    """q**k / (1 - q**k) = u**(2k) + u**(4k) + ... ; the central terms."""
    coeffs = {e: 1 for e in range(2 * k, order + 1, 2 * k)}
    return QSeries.from_coeff_map(coeffs, order)


def series_mul(a: QSeries, b: QSeries) -> QSeries:
    return a * b


def series_inv(a: QSeries, order: Optional[int] = None) -> QSeries:
    return a.inverse(order)


def series_exp(a: QSeries, order: Optional[int] = None) -> QSeries:
    return a.exp(order)


# ---------------------------------------------------------------------------
# TPoly
# ---------------------------------------------------------------------------

TKey = tuple  # ((t exponents), (tbar exponents), Q exponent)


class TPoly:
    """Polynomial in couplings t (and optionally tbar) and Q over QSeries.

    ``t_trunc`` bounds the total degree across both coupling blocks;
    ``q_trunc`` bounds the Q exponent (None = exact in Q).  Zero
    coefficients are never stored.
    """

    __slots__ = ("nt", "nbar", "t_trunc", "q_trunc", "terms")

    def __init__(self, nt: int, t_trunc: int, terms: Optional[Mapping[TKey, QSeries]] = None,
                 nbar: int = 0, q_trunc: Optional[int] = None):
        if t_trunc < 0:
            raise ValueError("t_trunc must be >= 0")
        object.__setattr__(self, "nt", nt)
        object.__setattr__(self, "nbar", nbar)
        object.__setattr__(self, "t_trunc", t_trunc)
        object.__setattr__(self, "q_trunc", q_trunc)
        clean = {}
        if terms:
            for key, coeff in terms.items():
                et, ebar, eq = key
                if len(et) != nt or len(ebar) != nbar:
                    raise ValueError("exponent tuple length mismatch")
                if sum(et) + sum(ebar) > t_trunc:
                    continue
                if q_trunc is not None and eq > q_trunc:
                    continue
                if not coeff.is_zero:
                    clean[(tuple(et), tuple(ebar), eq)] = coeff
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("TPoly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, nt: int, t_trunc: int, nbar: int = 0, q_trunc: Optional[int] = None) -> "TPoly":
        return cls(nt, t_trunc, {}, nbar, q_trunc)

    @classmethod
    def const(cls, c, nt: int, t_trunc: int, nbar: int = 0, q_trunc: Optional[int] = None) -> "TPoly":
        if isinstance(c, (int, Fraction)):
            c = QSeries.const(c)
        key = ((0,) * nt, (0,) * nbar, 0)
        return cls(nt, t_trunc, {key: c}, nbar, q_trunc)

    @classmethod
    def coupling(cls, idx: int, coeff: QSeries, nt: int, t_trunc: int, nbar: int = 0,
                 bar: bool = False, q_trunc: Optional[int] = None) -> "TPoly":
        """coeff * t_idx (1-based index; bar selects the second block)."""
        if bar:
            ebar = tuple(1 if i == idx - 1 else 0 for i in range(nbar))
            key = ((0,) * nt, ebar, 0)
        else:
            et = tuple(1 if i == idx - 1 else 0 for i in range(nt))
            key = (et, (0,) * nbar, 0)
        return cls(nt, t_trunc, {key: coeff}, nbar, q_trunc)

    @classmethod
    def q_monomial(cls, eq: int, coeff: QSeries, nt: int, t_trunc: int, nbar: int = 0,
                   q_trunc: Optional[int] = None) -> "TPoly":
        return cls(nt, t_trunc, {((0,) * nt, (0,) * nbar, eq): coeff}, nbar, q_trunc)

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, t_exps=(), tbar_exps=(), q_exp: int = 0) -> QSeries:
        et = tuple(t_exps) + (0,) * (self.nt - len(tuple(t_exps)))
        eb = tuple(tbar_exps) + (0,) * (self.nbar - len(tuple(tbar_exps)))
        if sum(et) + sum(eb) > self.t_trunc:
            raise WindowError("coupling degree beyond the certified t-window")
        if self.q_trunc is not None and q_exp > self.q_trunc:
            raise WindowError("Q exponent beyond the certified Q-window")
        return self.terms.get((et, eb, q_exp), QSeries.zero())

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0][0]) + sum(kv[0][1]),
                                                          kv[0][2], kv[0][0], kv[0][1]))

    def _compat(self, other: "TPoly"):
        if self.nt != other.nt or self.nbar != other.nbar:
            raise ValueError("coupling block mismatch")
        return (min(self.t_trunc, other.t_trunc), _min_trunc(self.q_trunc, other.q_trunc))

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> "TPoly":
        if isinstance(other, (int, Fraction, QSeries)):
            other = TPoly.const(other, self.nt, self.t_trunc, self.nbar, self.q_trunc)
        if not isinstance(other, TPoly):
            return NotImplemented
        t_tr, q_tr = self._compat(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms[key] + c if key in terms else c
        return TPoly(self.nt, t_tr, terms, self.nbar, q_tr)

    __radd__ = __add__

    def __neg__(self) -> "TPoly":
        return TPoly(self.nt, self.t_trunc,
                     {k: -c for k, c in self.terms.items()}, self.nbar, self.q_trunc)

    def __sub__(self, other) -> "TPoly":
        if isinstance(other, (int, Fraction, QSeries)):
            other = TPoly.const(other, self.nt, self.t_trunc, self.nbar, self.q_trunc)
        return self + (-other)

    def scale(self, c) -> "TPoly":
        """Multiply every coefficient by a scalar or QSeries."""
        return TPoly(self.nt, self.t_trunc,
                     {k: coeff * c for k, coeff in self.terms.items()},
                     self.nbar, self.q_trunc)

    def __mul__(self, other) -> "TPoly":
        if isinstance(other, (int, Fraction, QSeries)):
            return self.scale(other)
        if not isinstance(other, TPoly):
            return NotImplemented
        t_tr, q_tr = self._compat(other)
        terms: dict = {}
        for (et1, eb1, eq1), c1 in self.terms.items():
            d1 = sum(et1) + sum(eb1)
            for (et2, eb2, eq2), c2 in other.terms.items():
                if d1 + sum(et2) + sum(eb2) > t_tr:
                    continue
                eq = eq1 + eq2
                if q_tr is not None and eq > q_tr:
                    continue
                key = (tuple(x + y for x, y in zip(et1, et2)),
                       tuple(x + y for x, y in zip(eb1, eb2)), eq)
                prod = c1 * c2
                terms[key] = terms[key] + prod if key in terms else prod
        return TPoly(self.nt, t_tr, terms, self.nbar, q_tr)

    __rmul__ = __mul__

    def exp(self) -> "TPoly":
        """exp of a polynomial with no coupling-free term."""
        for (et, eb, _), c in self.terms.items():
            if sum(et) + sum(eb) == 0 and not c.is_zero:
                raise WindowError("tpoly exp needs strictly positive coupling valuation")
        out = TPoly.const(1, self.nt, self.t_trunc, self.nbar, self.q_trunc)
        term = out
        for n in range(1, self.t_trunc + 1):
            term = (term * self).scale(Fraction(1, n))
            if term.is_zero:
                break
            out = out + term
        return out

    def truncate_series(self, order: int) -> "TPoly":
        return TPoly(self.nt, self.t_trunc,
                     {k: c.truncate(order) for k, c in self.terms.items()},
                     self.nbar, self.q_trunc)

    def clip_series_by_degree(self, bound_fn) -> "TPoly":
        """Clip each coefficient's window to bound_fn(total coupling degree).

        Used by tail certificates: a sum truncated at a state cutoff is only
        exact below the valuation of what was dropped, and that valuation
        depends on the coupling degree of the term.
        """
        terms = {}
        for key, c in self.terms.items():
            et, eb, _ = key
            terms[key] = c.truncate(bound_fn(sum(et) + sum(eb)))
        return TPoly(self.nt, self.t_trunc, terms, self.nbar, self.q_trunc)

    # -- substitutions -----------------------------------------------------

    def scale_couplings(self, t_factors, tbar_factors=()) -> "TPoly":
        """t_k -> f_k * t_k (and tbar likewise); factors are exact rationals."""
        terms = {}
        for (et, eb, eq), c in self.terms.items():
            f = 1
            for e, fac in zip(et, t_factors):
                if e:
                    f *= Fraction(fac) ** e
            for e, fac in zip(eb, tbar_factors):
                if e:
                    f *= Fraction(fac) ** e
            if f != 1:
                c = c * (int(f) if f.denominator == 1 else f)
            key = (et, eb, eq)
            terms[key] = terms[key] + c if key in terms else c
        return TPoly(self.nt, self.t_trunc, terms, self.nbar, self.q_trunc)

    def merge_tbar(self, factors) -> "TPoly":
        """Substitute tbar_k -> f_k * t_k, collapsing to a single block."""
        if self.nbar != self.nt:
            raise ValueError("block merge needs matching block sizes")
        terms: dict = {}
        for (et, eb, eq), c in self.terms.items():
            f = 1
            for e, fac in zip(eb, factors):
                if e:
                    f *= Fraction(fac) ** e
            if f != 1:
                c = c * (int(f) if f.denominator == 1 else f)
            key = (tuple(a + b for a, b in zip(et, eb)), (), eq)
            terms[key] = terms[key] + c if key in terms else c
        return TPoly(self.nt, self.t_trunc, terms, 0, self.q_trunc)

    def expand_t_minus_tbar(self) -> "TPoly":
        """One-block P(s) -> two-block P(t - tbar) by binomial expansion."""
        if self.nbar != 0:
            raise ValueError("expand_t_minus_tbar needs a one-block polynomial")
        from math import comb
        terms: dict = {}
        for (et, _eb, eq), c in self.terms.items():
            # expand prod_k (t_k - tbar_k)^{e_k}
            combos = [((), (), 1)]
            for k, e in enumerate(et):
                new = []
                for (at, ab, coef) in combos:
                    for j in range(e + 1):
                        sign = (-1) ** j
                        new.append((at + (e - j,), ab + (j,), coef * comb(e, j) * sign))
                combos = new
            for (at, ab, coef) in combos:
                key = (at, ab, eq)
                add = c * coef
                terms[key] = terms[key] + add if key in terms else add
        return TPoly(self.nt, self.t_trunc, terms, self.nt, self.q_trunc)

    # -- comparison --------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, TPoly):
            return NotImplemented
        if self.nt != other.nt or self.nbar != other.nbar:
            return False
        t_tr, q_tr = self._compat(other)
        keys = set()
        for k in list(self.terms) + list(other.terms):
            et, eb, eq = k
            if sum(et) + sum(eb) > t_tr:
                continue
            if q_tr is not None and eq > q_tr:
                continue
            keys.add(k)
        zero = QSeries.zero()
        for k in keys:
            if self.terms.get(k, zero) != other.terms.get(k, zero):
                return False
        return True

    __hash__ = None

    def first_difference(self, other):
        """(key, exponent) of the lowest-degree differing coefficient, or None."""
        t_tr, q_tr = self._compat(other)
        keys = set()
        for k in list(self.terms) + list(other.terms):
            et, eb, eq = k
            if sum(et) + sum(eb) > t_tr:
                continue
            if q_tr is not None and eq > q_tr:
                continue
            keys.add(k)
        zero = QSeries.zero()
        for k in sorted(keys, key=lambda kk: (sum(kk[0]) + sum(kk[1]), kk[2], kk[0], kk[1])):
            e = self.terms.get(k, zero).first_difference(other.terms.get(k, zero))
            if e is not None:
                return k, e
        return None

    # -- presentation ------------------------------------------------------

    def __repr__(self):
        if self.is_zero:
            return "TPoly(0)"
        bits = []
        for (et, eb, eq), c in self.sorted_terms():
            mono = []
            for i, e in enumerate(et):
                if e:
                    mono.append(f"t{i+1}" + (f"^{e}" if e > 1 else ""))
            for i, e in enumerate(eb):
                if e:
                    mono.append(f"tbar{i+1}" + (f"^{e}" if e > 1 else ""))
            if eq:
                mono.append("Q" + (f"^{eq}" if eq > 1 else ""))
            label = "*".join(mono) if mono else "1"
            bits.append(f"({c})*{label}")
        return "TPoly[" + " + ".join(bits) + "]"

    def to_json(self) -> dict:
        out = {
            "n_couplings": self.nt,
            "t_trunc": self.t_trunc,
            "terms": [],
        }
        if self.nbar:
            out["n_couplings_bar"] = self.nbar
        if self.q_trunc is not None:
            out["q_trunc"] = self.q_trunc
        for (et, eb, eq), c in self.sorted_terms():
            term = {"t_exps": list(et), "q_exp": eq, "coeff": c.to_json()}
            if self.nbar:
                term["tbar_exps"] = list(eb)
            out["terms"].append(term)
        return out

    @classmethod
    def from_json(cls, d: dict) -> "TPoly":
        nt = d["n_couplings"]
        nbar = d.get("n_couplings_bar", 0)
        terms = {}
        for term in d["terms"]:
            key = (tuple(term["t_exps"]), tuple(term.get("tbar_exps", ())) or (0,) * nbar if nbar else (),
                   term["q_exp"])
            et = tuple(term["t_exps"])
            eb = tuple(term.get("tbar_exps", (0,) * nbar)) if nbar else ()
            terms[(et, eb, term["q_exp"])] = QSeries.from_json(term["coeff"])
        return cls(nt, d["t_trunc"], terms, nbar, d.get("q_trunc"))


def tpoly_exp(a: TPoly) -> TPoly:
    return a.exp()
