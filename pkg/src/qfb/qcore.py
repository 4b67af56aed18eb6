"""q-arithmetic core: q-shifted factorials, the Thomae q-integral on [0,1],
and the L_q^2[0,1] inner product.

The q-integral of f over [0,1] is the lattice sum (1-q) * sum_k f(q^k) q^k,
so a function only matters on the geometric lattice {q^k}.  LatticeFunction
captures exactly that support with an explicit truncation; analytic
integrands are handled by an open-ended lattice sum with a recorded
geometric tail bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

from mpmath import mp, mpf

from .precision import DivergenceError, PrecisionContext, PrecisionError

Numeric = str | float | int | mpf


class BaseMismatchError(ValueError):
    """Two lattice quantities were combined over different bases."""


def _as_mp(x: Numeric) -> mpf:
    """Convert to mpf at the ambient precision (strings re-parsed exactly)."""
    if isinstance(x, str):
        return mp.mpf(x)
    return mp.mpf(x)


@dataclass(frozen=True)
class QParams:
    """Base q in (0,1) and order nu > -1, shared by all evaluations."""

    q: Numeric
    nu: Numeric

    def __post_init__(self):
        with mp.workdps(50):
            qv = _as_mp(self.q)
            nuv = _as_mp(self.nu)
            if not (0 < qv < 1):
                raise ValueError(f"q must satisfy 0 < q < 1, got {self.q}")
            if not nuv > -1:
                raise ValueError(f"nu must satisfy nu > -1, got {self.nu}")

    def q_mp(self) -> mpf:
        return _as_mp(self.q)

    def nu_mp(self) -> mpf:
        return _as_mp(self.nu)

    def base_mp(self) -> mpf:
        """The squared base q^2 used throughout the zero/expansion theory."""
        return _as_mp(self.q) ** 2


@dataclass(frozen=True)
class LatticeFunction:
    """A function known on the q-lattice {q^j : j = 0..N-1}; zero beyond N."""

    values: tuple
    base: Numeric

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("LatticeFunction needs at least one sample")
        with mp.workdps(50):
            b = _as_mp(self.base)
            if not (0 < b < 1):
                raise ValueError(f"base must be in (0,1), got {self.base}")
        object.__setattr__(self, "values", tuple(self.values))

    @property
    def truncation(self) -> int:
        return len(self.values)

    def value(self, j: int) -> mpf:
        if 0 <= j < len(self.values):
            return _as_mp(self.values[j])
        return mpf(0)

    def base_mp(self) -> mpf:
        return _as_mp(self.base)

    @classmethod
    def from_callable(cls, f: Callable, base: Numeric, n: int,
                      digits: int = 120) -> "LatticeFunction":
        with mp.workdps(digits):
            b = _as_mp(base)
            vals = tuple(mp.nstr(mp.mpf(f(b ** j)), digits)
                         for j in range(n))
        return cls(values=vals, base=base)

    def to_json(self, digits: int = 50) -> str:
        with mp.workdps(digits + 10):
            payload = {
                "q": mp.nstr(self.base_mp(), digits),
                "N": self.truncation,
                "values": [mp.nstr(self.value(j), digits)
                           for j in range(self.truncation)],
            }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "LatticeFunction":
        payload = json.loads(text)
        values = tuple(payload["values"])
        if payload.get("N") is not None and payload["N"] != len(values):
            raise ValueError("declared N does not match number of samples")
        return cls(values=values, base=payload["q"])


def same_base(a: LatticeFunction | Numeric, b: LatticeFunction | Numeric,
              rel: float = 1e-30) -> bool:
    with mp.workdps(50):
        av = a.base_mp() if isinstance(a, LatticeFunction) else _as_mp(a)
        bv = b.base_mp() if isinstance(b, LatticeFunction) else _as_mp(b)
        return abs(av - bv) <= rel * abs(av)


def qpochhammer_finite(a: Numeric, q: Numeric, n: int,
                       ctx: PrecisionContext | None = None) -> mpf:
    """(a;q)_n = prod_{i=0}^{n-1} (1 - a q^i); empty product is exactly 1."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    dps = ctx.digits if ctx is not None else mp.dps
    with mp.workdps(dps):
        av = _as_mp(a)
        qv = _as_mp(q)
        prod = mpf(1)
        aq = av
        for _ in range(n):
            prod *= (1 - aq)
            aq *= qv
        return prod


_POCH_CACHE: dict = {}


def qpochhammer_infinite(a: Numeric, q: Numeric,
                         ctx: PrecisionContext) -> mpf:
    """(a;q)_inf, truncated when |a q^n| falls below series_tol.

    The dropped tail satisfies |log prod_{i>=n}(1-a q^i)| <= ~|a| q^n/(1-q),
    so the truncation criterion bounds the relative error by series_tol/(1-q).
    """
    with ctx.workdps(10):
        av = _as_mp(a)
        qv = _as_mp(q)
        if not abs(qv) < 1:
            raise DivergenceError(f"(a;q)_inf diverges for |q| >= 1, q={q}")
        key = (av._mpf_, qv._mpf_, mp.prec)
        hit = _POCH_CACHE.get(key)
        if hit is not None:
            return hit
        tol = mpf(ctx.series_tol)
        prod = mpf(1)
        aq = av
        n = 0
        while abs(aq) >= tol:
            prod *= (1 - aq)
            aq *= qv
            n += 1
            if n > ctx.max_terms:
                raise PrecisionError("q-Pochhammer product cap exhausted")
        _POCH_CACHE[key] = prod
        return prod


def qpochhammer_multi(a_list: Sequence[Numeric], q: Numeric,
                      ctx: PrecisionContext) -> mpf:
    """(a_1, ..., a_r; q)_inf as the product of the single-argument symbols."""
    with ctx.workdps(10):
        prod = mpf(1)
        for a in a_list:
            prod *= qpochhammer_infinite(a, q, ctx)
        return prod


@dataclass
class IntegralInfo:
    value: mpf
    terms_used: int
    tail_bound: mpf


def _lattice_integral(f: Callable, q: mpf, ctx: PrecisionContext,
                      min_terms: int = 8) -> IntegralInfo:
    """(1-q) sum_k f(q^k) q^k for an analytic integrand f.

    Truncates after three consecutive terms below series_tol times the
    accumulated magnitude scale; the reported tail bound is the geometric
    extrapolation of the last term.
    """
    tol = mpf(ctx.series_tol)
    total = mpf(0)
    max_mag = mpf(0)
    small_streak = 0
    k = 0
    t = mpf(1)
    last = mpf(0)
    while True:
        term = f(t) * t
        total += term
        mag = abs(term)
        max_mag = max(max_mag, mag, abs(total))
        if k >= min_terms and mag <= tol * max(max_mag, mpf(1)):
            small_streak += 1
            if small_streak >= 3:
                last = mag
                break
        else:
            small_streak = 0
        k += 1
        if k > ctx.max_terms:
            raise PrecisionError("q-integral lattice cap exhausted")
        t *= q
    tail = last * q / (1 - q)
    return IntegralInfo((1 - q) * total, k + 1, tail)


def qintegral_01(f: LatticeFunction | Callable, ctx: PrecisionContext,
                 q: Numeric | None = None) -> mpf:
    """Thomae q-integral of f over [0,1].

    A LatticeFunction is integrated exactly as a finite sum.  A callable is
    treated as an analytic integrand and summed over the open-ended lattice
    with the truncation policy of the context; the base q must be supplied.
    """
    if isinstance(f, LatticeFunction):
        if q is not None and not same_base(f, q):
            raise BaseMismatchError(
                f"lattice base {f.base} != integration base {q}")
        with ctx.workdps(10):
            qv = f.base_mp()
            total = mpf(0)
            t = mpf(1)
            for j in range(f.truncation):
                total += f.value(j) * t
                t *= qv
            return (1 - qv) * total
    if q is None:
        raise ValueError("analytic integrands require the base q")
    with ctx.workdps(10):
        return _lattice_integral(f, _as_mp(q), ctx).value


def inner_product(f: LatticeFunction, g: LatticeFunction,
                  ctx: PrecisionContext) -> mpf:
    """<f, g> = integral of f*g over [0,1] (real-valued, so no conjugation).

    The shorter lattice is zero-padded to the longer one.
    """
    if not same_base(f, g):
        raise BaseMismatchError(f"bases differ: {f.base} vs {g.base}")
    with ctx.workdps(10):
        qv = f.base_mp()
        total = mpf(0)
        t = mpf(1)
        for j in range(max(f.truncation, g.truncation)):
            total += f.value(j) * g.value(j) * t
            t *= qv
        return (1 - qv) * total


def norm_lq2(f: LatticeFunction, ctx: PrecisionContext) -> mpf:
    """L_q^2[0,1] norm, sqrt(<f, f>)."""
    with ctx.workdps(10):
        return mp.sqrt(inner_product(f, f, ctx))
