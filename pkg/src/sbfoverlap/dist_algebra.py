"""Distribution-valued closed forms for I^[n]_{l l'}(r, r').

An expression is a finite sum of terms

    region * q * pi^p * r^a * r'^b * [2F1 kernel]

where the region is one of H(r' - r), H(r - r') or d^m/dr^m delta(r - r').
The raising operator

    D = -[d^2/dr^2 + (2/r) d/dr - l(l+1)/r^2]

maps the expression for k^n to the one for k^(n+2). Heaviside factors are
differentiated distributionally, so each jump across the diagonal produces
a delta term. Delta coefficients are restricted to the diagonal on the
spot, using

    c(r, r') delta^(m)(r - r') = sum_j C(m, j) [d_r'^j c](r, r) delta^(m-j)(r - r'),

which holds as an identity between distributions in both variables.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import integrate

from .errors import DiagonalPoint, TermLimitExceeded
from .oracle import TestFunction
from .specfun import SqrtPiRational, hyp2f1, hyp2f1_at_one

MAX_TERMS = 10_000


class RegionKind(IntEnum):
    PRIME_GREATER = 0  # H(r' - r)
    GREATER = 1        # H(r - r')
    DELTA = 2          # d^m/dr^m delta(r - r')


@dataclass(frozen=True)
class Region:
    kind: RegionKind
    m: int = 0

    def __post_init__(self):
        if self.kind is not RegionKind.DELTA and self.m:
            raise ValueError("only delta regions carry a derivative order")

    @property
    def is_delta(self):
        return self.kind is RegionKind.DELTA

    def sort_key(self):
        return (int(self.kind), self.m)

    def to_json(self):
        if self.kind is RegionKind.PRIME_GREATER:
            return "H(r'>r)"
        if self.kind is RegionKind.GREATER:
            return "H(r>r')"
        return {"delta_deriv": self.m}

    @classmethod
    def from_json(cls, obj):
        if obj == "H(r'>r)":
            return cls(RegionKind.PRIME_GREATER)
        if obj == "H(r>r')":
            return cls(RegionKind.GREATER)
        return cls(RegionKind.DELTA, int(obj["delta_deriv"]))


PRIME_GREATER = Region(RegionKind.PRIME_GREATER)
GREATER = Region(RegionKind.GREATER)


def delta(m: int = 0) -> Region:
    return Region(RegionKind.DELTA, m)


@dataclass(frozen=True)
class ExactCoeff:
    """q * pi**pi_power with q an exact rational."""

    q: Fraction
    pi_power: int = 0

    def __post_init__(self):
        object.__setattr__(self, "q", Fraction(self.q))

    def __mul__(self, other):
        if isinstance(other, ExactCoeff):
            return ExactCoeff(self.q * other.q, self.pi_power + other.pi_power)
        return ExactCoeff(self.q * Fraction(other), self.pi_power)

    __rmul__ = __mul__

    def __neg__(self):
        return ExactCoeff(-self.q, self.pi_power)

    def __float__(self):
        return float(self.q) * math.pi**self.pi_power

    @property
    def is_zero(self):
        return self.q == 0

    @classmethod
    def from_sqrtpi(cls, v: SqrtPiRational):
        return cls(v.q, v.pi_power if v.q else 0)

    def to_json(self):
        return {"num": self.q.numerator, "den": self.q.denominator, "pi_pow": self.pi_power}

    @classmethod
    def from_json(cls, obj):
        return cls(Fraction(obj["num"], obj["den"]), int(obj["pi_pow"]))

    def __str__(self):
        q = self.q
        s = str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
        if self.pi_power == 0:
            return s
        p = "π" if self.pi_power == 1 else f"π^{self.pi_power}"
        return p if q == 1 else f"{s}·{p}"


class Orientation(IntEnum):
    PRIMED = 0    # argument (r/r')^2, lives on r < r'
    UNPRIMED = 1  # argument (r'/r)^2, lives on r > r'


@dataclass(frozen=True)
class HyperDescriptor:
    """2F1 kernel in offset form; parameters depend on (l, l', base n).

    primed:   a = (l+l'+n+x)/2, b = (l-l'+n+y)/2, c = l + z/2, z = (r/r')^2
    unprimed: a = (l+l'+n+x)/2, b = (l'-l+n+y)/2, c = l' + z/2, z = (r'/r)^2
    """

    orientation: Orientation
    x: int
    y: int
    z: int

    def params(self, ell, ellp, n):
        a = Fraction(ell + ellp + n + self.x, 2)
        if self.orientation is Orientation.PRIMED:
            b = Fraction(ell - ellp + n + self.y, 2)
            c = ell + Fraction(self.z, 2)
        else:
            b = Fraction(ellp - ell + n + self.y, 2)
            c = ellp + Fraction(self.z, 2)
        return a, b, c

    def shifted(self):
        return HyperDescriptor(self.orientation, self.x + 2, self.y + 2, self.z + 2)

    def argument(self, r, rp):
        if self.orientation is Orientation.PRIMED:
            return (r / rp) ** 2
        return (rp / r) ** 2

    def sort_key(self):
        return (1, int(self.orientation), self.x, self.y, self.z)

    def to_json(self):
        return {"orientation": "primed" if self.orientation is Orientation.PRIMED else "unprimed",
                "x": self.x, "y": self.y, "z": self.z}

    @classmethod
    def from_json(cls, obj):
        if obj is None:
            return None
        o = Orientation.PRIMED if obj["orientation"] == "primed" else Orientation.UNPRIMED
        return cls(o, int(obj["x"]), int(obj["y"]), int(obj["z"]))


@dataclass(frozen=True)
class GammaTag:
    """Which base c_Gamma coefficient a Heaviside term descends from.

    The numeric value is already folded into the exact coefficient; the tag
    is kept for provenance and for cross-checks.
    """

    kind: str  # "cgamma_rp_greater" | "cgamma_r_greater"
    n: int

    def to_json(self):
        return {"kind": self.kind, "n": self.n}

    @classmethod
    def from_json(cls, obj):
        return None if obj is None else cls(obj["kind"], int(obj["n"]))


@dataclass(frozen=True)
class Term:
    region: Region
    coeff: ExactCoeff
    pow_r: int
    pow_rp: int
    hyper: HyperDescriptor | None = None
    gamma_tag: GammaTag | None = None

    def merge_key(self):
        return (self.region.sort_key(), self.pow_r, self.pow_rp,
                self.hyper.sort_key() if self.hyper else (0,),
                (self.gamma_tag.kind, self.gamma_tag.n) if self.gamma_tag else ("",),
                self.coeff.pi_power)

    def to_json(self):
        return {
            "region": self.region.to_json(),
            "coeff": self.coeff.to_json(),
            "gamma": self.gamma_tag.to_json() if self.gamma_tag else None,
            "pow_r": self.pow_r,
            "pow_rp": self.pow_rp,
            "hyper": self.hyper.to_json() if self.hyper else None,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(Region.from_json(obj["region"]), ExactCoeff.from_json(obj["coeff"]),
                   int(obj["pow_r"]), int(obj["pow_rp"]),
                   HyperDescriptor.from_json(obj.get("hyper")),
                   GammaTag.from_json(obj.get("gamma")))


@dataclass(frozen=True)
class DistExpr:
    ell: int
    ellp: int
    base_n: int
    current_n: int
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if (self.current_n - self.base_n) % 2 or self.current_n < self.base_n:
            raise ValueError("current_n - base_n must be even and non-negative")

    @property
    def even_parity(self):
        return (self.ell + self.ellp + self.base_n) % 2 == 0

    def regular_terms(self):
        return [t for t in self.terms if not t.region.is_delta]

    def delta_terms(self):
        return [t for t in self.terms if t.region.is_delta]

    def with_terms(self, terms, current_n=None):
        return DistExpr(self.ell, self.ellp, self.base_n,
                        self.current_n if current_n is None else current_n, tuple(terms))

    def scaled(self, factor):
        return self.with_terms([replace(t, coeff=t.coeff * factor) for t in self.terms])

    def __add__(self, other):
        if (self.ell, self.ellp, self.base_n, self.current_n) != (
                other.ell, other.ellp, other.base_n, other.current_n):
            raise ValueError("can only add expressions for the same integral")
        return canonicalize(self.with_terms(self.terms + other.terms))

    def to_json(self):
        return {"ell": self.ell, "ellp": self.ellp, "n": self.current_n,
                "terms": [t.to_json() for t in self.terms]}

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, obj):
        n = int(obj["n"])
        return cls(int(obj["ell"]), int(obj["ellp"]), n % 2, n,
                   tuple(Term.from_json(t) for t in obj["terms"]))


# ---------------------------------------------------------------------------
# differentiation of the smooth factor coeff * r^a * r'^b * F
# ---------------------------------------------------------------------------

def _d_factor(t: Term, ctx, wrt_rp: bool) -> list:
    ell, ellp, n = ctx
    out = []
    p = t.pow_rp if wrt_rp else t.pow_r
    if p:
        if wrt_rp:
            out.append(replace(t, coeff=t.coeff * p, pow_rp=t.pow_rp - 1))
        else:
            out.append(replace(t, coeff=t.coeff * p, pow_r=t.pow_r - 1))
    h = t.hyper
    if h is not None:
        a, b, c = h.params(ell, ellp, n)
        d = a * b / c
        if d:
            primed = h.orientation is Orientation.PRIMED
            if not wrt_rp:
                sign, dr, drp = (2, 1, -2) if primed else (-2, -3, 2)
            else:
                sign, dr, drp = (-2, 2, -3) if primed else (2, -2, 1)
            out.append(replace(t, coeff=t.coeff * (sign * d), pow_r=t.pow_r + dr,
                               pow_rp=t.pow_rp + drp, hyper=h.shifted()))
    return out


def _f_at_one(h: HyperDescriptor | None, ctx) -> ExactCoeff:
    if h is None:
        return ExactCoeff(Fraction(1))
    a, b, c = h.params(*ctx)
    return ExactCoeff.from_sqrtpi(hyp2f1_at_one(a, b, c))


def _delta_term(coeff, k, m):
    if m == 0:
        prp = k // 2
        return Term(delta(0), coeff, k - prp, prp)
    return Term(delta(m), coeff, k, 0)


def _restrict(t: Term, ctx) -> list:
    """Rewrite a delta term with diagonal-restricted, single-variable coefficients."""
    m = t.region.m
    if t.hyper is None and (t.pow_rp == 0 or m == 0):
        k = t.pow_r + t.pow_rp
        return [_delta_term(t.coeff, k, m)]
    out = []
    layer = [replace(t, region=GREATER, gamma_tag=None)]
    for j in range(m + 1):
        binom = math.comb(m, j)
        for u in layer:
            c = u.coeff * _f_at_one(u.hyper, ctx) * binom
            if not c.is_zero:
                out.append(_delta_term(c, u.pow_r + u.pow_rp, m - j))
        if j < m:
            layer = [v for u in layer for v in _d_factor(u, ctx, wrt_rp=True)]
    return out


def canonicalize(expr: DistExpr) -> DistExpr:
    """Restrict delta coefficients, merge like terms exactly, drop zeros, sort."""
    ctx = (expr.ell, expr.ellp, expr.base_n)
    acc: dict = {}
    order = []
    for t in expr.terms:
        if t.coeff.is_zero:
            continue
        pieces = _restrict(t, ctx) if t.region.is_delta else [t]
        for p in pieces:
            key = p.merge_key()
            if key in acc:
                acc[key] = replace(acc[key], coeff=ExactCoeff(acc[key].coeff.q + p.coeff.q,
                                                              p.coeff.pi_power))
            else:
                acc[key] = p
                order.append(key)
    terms = [acc[k] for k in sorted(acc) if not acc[k].coeff.is_zero]
    if len(terms) > MAX_TERMS:
        raise TermLimitExceeded(f"{len(terms)} terms for l={expr.ell}, l'={expr.ellp}, "
                                f"n={expr.current_n}")
    return expr.with_terms(terms)


def _d_r(expr: DistExpr, jump_weight: Fraction) -> DistExpr:
    ctx = (expr.ell, expr.ellp, expr.base_n)
    jumps = expr.even_parity and jump_weight != 0
    out = []
    for t in expr.terms:
        out.extend(_d_factor(t, ctx, wrt_rp=False))
        if t.region.is_delta:
            out.append(replace(t, region=delta(t.region.m + 1)))
        elif jumps:
            sign = -1 if t.region.kind is RegionKind.PRIME_GREATER else 1
            out.append(replace(t, region=delta(0), coeff=t.coeff * (sign * jump_weight),
                               gamma_tag=None))
    return canonicalize(expr.with_terms(out))


def _shift_r(terms: Iterable[Term], dp: int, factor) -> list:
    return [replace(t, pow_r=t.pow_r + dp, coeff=t.coeff * factor) for t in terms]


def apply_D(expr: DistExpr, jump_weight: Fraction | int = 1) -> DistExpr:
    """Raise k^n to k^(n+2) by applying -[d_r^2 + (2/r) d_r - l(l+1)/r^2].

    ``jump_weight`` scales the delta produced when a Heaviside factor is
    differentiated. The default of 1 is the ordinary distributional
    derivative; 1/2 reproduces a one-sided (handed) convention.

    Expressions of odd parity (l + l' + n odd) never acquire delta terms:
    their kernels carry principal-value type singularities on the diagonal
    instead, which stay encoded in the non-terminating 2F1 factors.
    """
    w = Fraction(jump_weight)
    e1 = _d_r(expr, w)
    e2 = _d_r(e1, w)
    ll = expr.ell * (expr.ell + 1)
    terms = (_shift_r(e2.terms, 0, -1) + _shift_r(e1.terms, -1, -2)
             + (_shift_r(expr.terms, -2, ll) if ll else []))
    return canonicalize(expr.with_terms(terms, current_n=expr.current_n + 2))


def d_rp(expr: DistExpr) -> DistExpr:
    """Pointwise r'-derivative of the regular part (valid off the diagonal)."""
    ctx = (expr.ell, expr.ellp, expr.base_n)
    out = [u for t in expr.regular_terms() for u in _d_factor(t, ctx, wrt_rp=True)]
    return canonicalize(expr.with_terms(out))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_regular(expr: DistExpr, r, rp):
    """Heaviside-supported part of the expression at (r, r'), r != r'."""
    r_a, rp_a = np.broadcast_arrays(np.asarray(r, float), np.asarray(rp, float))
    if np.any(r_a == rp_a):
        raise DiagonalPoint("the regular part is not defined on r == r'")
    if np.any(r_a <= 0) or np.any(rp_a <= 0):
        raise ValueError("radii must be positive")
    out = np.zeros(r_a.shape, dtype=float)
    ctx = (expr.ell, expr.ellp, expr.base_n)
    lt = rp_a > r_a
    for t in expr.regular_terms():
        mask = lt if t.region.kind is RegionKind.PRIME_GREATER else ~lt
        if not np.any(mask):
            continue
        rr, pp = r_a[mask], rp_a[mask]
        val = float(t.coeff) * rr**t.pow_r * pp**t.pow_rp
        if t.hyper is not None:
            a, b, c = t.hyper.params(*ctx)
            val = val * hyp2f1(a, b, c, t.hyper.argument(rr, pp))
        out[mask] += val
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SingularTerm:
    """coeff * r^pow_r * r'^pow_rp * d^m/dr^m delta(r - r')."""

    m: int
    coeff: ExactCoeff
    pow_r: int
    pow_rp: int

    def value(self, r, rp=None):
        rp = r if rp is None else rp
        return float(self.coeff) * np.asarray(r, float) ** self.pow_r * np.asarray(rp, float) ** self.pow_rp

    def render(self):
        parts = [str(self.coeff)]
        if self.pow_r:
            parts.append(f"r^{self.pow_r}")
        if self.pow_rp:
            parts.append(f"r'^{self.pow_rp}")
        d = "δ(r−r')" if self.m == 0 else f"δ^({self.m})(r−r')"
        return "·".join(parts) + "·" + d

    def to_json(self):
        return {"m": self.m, "coeff": self.coeff.to_json(), "pow_r": self.pow_r,
                "pow_rp": self.pow_rp, "render": self.render()}


def singular_part(expr: DistExpr) -> list:
    """Delta-supported content as (m, coefficient function) records."""
    return [SingularTerm(t.region.m, t.coeff, t.pow_r, t.pow_rp)
            for t in canonicalize(expr).delta_terms()]


def pole_order(expr: DistExpr) -> int:
    """Upper bound on the order of the diagonal pole in the regular part.

    Uses 2F1(a, b; c; z) ~ (1 - z)^(c - a - b) for c - a - b < 0; zero
    means bounded or logarithmic.
    """
    ctx = (expr.ell, expr.ellp, expr.base_n)
    order = 0
    for t in expr.regular_terms():
        if t.hyper is None:
            continue
        a, b, c = t.hyper.params(*ctx)
        if (a <= 0 and a.denominator == 1) or (b <= 0 and b.denominator == 1):
            continue
        s = c - a - b
        if s < 0:
            order = max(order, math.ceil(-s))
    return order


# ---------------------------------------------------------------------------
# smearing against Gaussian test functions
# ---------------------------------------------------------------------------

class GaussLaurent:
    """sum c_ij (x - x0)^i x^(-j) * exp(-(x - x0)^2 / (2 s^2)); closed under D."""

    def __init__(self, phi: TestFunction, coeffs: dict):
        self.phi = phi
        self.coeffs = {k: v for k, v in coeffs.items() if v != 0}

    @classmethod
    def over_r_squared(cls, phi: TestFunction):
        return cls(phi, {(0, 2): 1.0})

    def derivative(self):
        inv_s2 = 1.0 / self.phi.width**2
        out: dict = {}
        for (i, j), c in self.coeffs.items():
            if i:
                out[(i - 1, j)] = out.get((i - 1, j), 0.0) + i * c
            if j:
                out[(i, j + 1)] = out.get((i, j + 1), 0.0) - j * c
            out[(i + 1, j)] = out.get((i + 1, j), 0.0) - inv_s2 * c
        return GaussLaurent(self.phi, out)

    def _combine(self, *pairs):
        out: dict = {}
        for g, factor, dj in pairs:
            for (i, j), c in g.coeffs.items():
                out[(i, j + dj)] = out.get((i, j + dj), 0.0) + factor * c
        return GaussLaurent(self.phi, out)

    def apply_D(self, ell: int):
        d1 = self.derivative()
        d2 = d1.derivative()
        return self._combine((d2, -1.0, 0), (d1, -2.0, 1), (self, float(ell * (ell + 1)), 2))

    def __call__(self, x):
        x = np.asarray(x, float)
        t = x - self.phi.center
        total = np.zeros_like(x)
        for (i, j), c in self.coeffs.items():
            total = total + c * t**i * x ** (-j)
        return total * self.phi(x)


def _quad_split(f, lo, hi, r):
    opts = dict(limit=400, epsabs=0.0, epsrel=1e-12)
    if lo < r < hi:
        a = integrate.quad(f, lo, r, **opts)[0]
        b = integrate.quad(f, r, hi, **opts)[0]
        return a + b
    return integrate.quad(f, lo, hi, **opts)[0]


def _smear_regular(expr, weight, lo, hi, r):
    if not expr.regular_terms():
        return 0.0

    def f(rp):
        if rp == r:
            return 0.0
        return weight(rp) * eval_regular(expr, r, rp)

    return _quad_split(f, lo, hi, r)


def smear(expr: DistExpr, phi: TestFunction, r: float) -> float:
    """int dr' phi(r') I(r, r').

    Delta terms contribute c_m(r) * phi^(m)(r). The regular part is
    integrated with adaptive quadrature split at r' = r. Kernels with a
    diagonal pole are handled through the self-adjointness of D with
    respect to r'^2 dr': the operator is moved onto phi / r'^2 and the
    base-exponent kernel, at worst logarithmic, is integrated instead.
    """
    lo, hi = phi.support()
    total = 0.0
    for s in singular_part(expr):
        total += s.value(r) * float(phi.derivative(s.m, r))
    if pole_order(expr) == 0:
        return total + _smear_regular(expr, phi, lo, hi, r)
    from .double_sbf import closed_form  # deferred: double_sbf builds on this module

    base = closed_form(expr.ell, expr.ellp, expr.base_n)
    g = GaussLaurent.over_r_squared(phi)
    for _ in range((expr.current_n - expr.base_n) // 2):
        g = g.apply_D(expr.ellp)
    weight = lambda x: x * x * g(x)  # noqa: E731
    # odd parity only reaches here, so the base carries no delta terms
    return total + _smear_regular(base, weight, lo, hi, r)
