"""Triple spherical Bessel overlap integrals.

I^[n]_{l1 l2 l3}(r1, r2, r3) = int_0^inf k^n j_l1(k r1) j_l2(k r2) j_l3(k r3) dk

is reduced by expanding j_l1 j_l2 in the order-L Hankel basis: the inner
k^2 triple integral with an even order sum has an elementary closed form
supported on |r1 - r2| <= u <= r1 + r2, and what remains is a double
integral in u that the ladder closed forms supply. The final u-integral
runs over that finite window.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import legendre as npleg
from scipy import integrate

from .dist_algebra import d_rp, eval_regular, pole_order, singular_part
from .double_sbf import closed_form
from .errors import NonTriangularOrders, OddSumUnsupported
from .specfun import hyp3f2, wigner3j_zero, wigner6j

_QUAD = dict(limit=400, epsabs=0.0, epsrel=1e-12)


def _quad(f, a, b, epsrel):
    with warnings.catch_warnings():
        # roundoff warnings near the requested floor are expected and harmless
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, **{**_QUAD, "epsrel": epsrel})[0]


class LaurentPoly:
    """Finite sum of c_p u^p with integer p, possibly negative."""

    def __init__(self, coeffs: dict):
        self.coeffs = {int(p): float(c) for p, c in coeffs.items() if c != 0}

    def __call__(self, u):
        u = np.asarray(u, float)
        total = np.zeros_like(u)
        for p, c in self.coeffs.items():
            total = total + c * u**p
        return float(total) if total.ndim == 0 else total

    def __add__(self, other):
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0.0) + c
        return LaurentPoly(out)

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            out: dict = {}
            for p1, c1 in self.coeffs.items():
                for p2, c2 in other.coeffs.items():
                    out[p1 + p2] = out.get(p1 + p2, 0.0) + c1 * c2
            return LaurentPoly(out)
        return LaurentPoly({p: c * other for p, c in self.coeffs.items()})

    __rmul__ = __mul__

    def shift(self, k: int):
        return LaurentPoly({p + k: c for p, c in self.coeffs.items()})

    def deriv(self, m: int = 1):
        out = self
        for _ in range(m):
            out = LaurentPoly({p - 1: p * c for p, c in out.coeffs.items() if p})
        return out

    def apply_D(self, ell: int):
        """-Q'' - 2Q'/u + l(l+1) Q/u^2."""
        d1 = self.deriv()
        return d1.deriv() * -1.0 + d1.shift(-1) * -2.0 + self.shift(-2) * float(ell * (ell + 1))

    @classmethod
    def from_polynomial(cls, poly: Polynomial, shift: int = 0):
        return cls({i + shift: c for i, c in enumerate(poly.coef)})


def choose_L(ell1: int, ell2: int) -> int:
    """Smallest L in [|l1-l2|, l1+l2] with l1+l2+L even."""
    return abs(ell1 - ell2)


@lru_cache(maxsize=256)
def _mehrem_table(ell1: int, ell2: int, L: int):
    """Exact-then-float coefficients K[(calL, l)] of the even-sum k^2 formula."""
    if (ell1 + ell2 + L) % 2:
        raise OddSumUnsupported(f"l1+l2+L = {ell1 + ell2 + L} is odd")
    lead = wigner3j_zero(ell1, ell2, L)
    if lead.is_zero:
        raise NonTriangularOrders(f"(l1, l2, L) = ({ell1}, {ell2}, {L}) is not admissible")
    sign = -1 if ((ell1 + ell2 - L) // 2) % 2 else 1
    pref = sign * math.sqrt(2 * L + 1) / float(lead)
    table = {}
    for cl in range(L + 1):
        binom = math.sqrt(math.comb(2 * L, 2 * cl))
        for ell in range(0, ell1 + ell2 + L + 1):
            prod = (wigner3j_zero(ell1, L - cl, ell) * wigner3j_zero(ell2, cl, ell)
                    * wigner6j(ell1, ell2, L, cl, L - cl, ell))
            if prod.is_zero:
                continue
            table[(cl, ell)] = pref * binom * (2 * ell + 1) * float(prod)
    return table


def mehrem_poly(ell1: int, ell2: int, L: int, r1: float, r2: float) -> LaurentPoly:
    """Inside-window value of int k^2 j_l1(k r1) j_l2(k r2) j_L(k u) dk as a Laurent polynomial in u."""
    table = _mehrem_table(ell1, ell2, L)
    alpha = (r1 * r1 + r2 * r2) / (2 * r1 * r2)
    delta_u = Polynomial([alpha, 0.0, -1.0 / (2 * r1 * r2)])
    acc = Polynomial([0.0])
    for (cl, ell), kcoef in table.items():
        pcoef = npleg.leg2poly([0] * ell + [1])
        p_of_u = Polynomial([0.0])
        for c in pcoef[::-1]:
            p_of_u = p_of_u * delta_u + c
        acc = acc + kcoef * (r2 / r1) ** cl * p_of_u
    scale = math.pi / (4 * r1 * r2) * r1**L
    return LaurentPoly.from_polynomial(acc * scale, shift=-1 - L)


def window(r1: float, r2: float):
    return abs(r1 - r2), r1 + r2


def beta(r1: float, r2: float, u):
    """Window indicator with half weight at the two edges."""
    a, b = window(r1, r2)
    u = np.asarray(u, float)
    out = np.where((u > a) & (u < b), 1.0, 0.0)
    out = np.where((u == a) | (u == b), 0.5, out)
    return float(out) if out.ndim == 0 else out


def mehrem_even_k2(ell1: int, ell2: int, L: int, r1: float, r2: float, u):
    """int_0^inf k^2 j_l1(k r1) j_l2(k r2) j_L(k u) dk for l1 + l2 + L even."""
    poly = mehrem_poly(ell1, ell2, L, r1, r2)
    u = np.asarray(u, float)
    b = beta(r1, r2, u)
    val = np.where(b > 0, poly(np.where(b > 0, u, 1.0)), 0.0) * b
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class HyperPowerlawAntiderivative:
    """z -> z^alpha/alpha * 3F2(a, b, alpha; c, alpha+1; z), an antiderivative of z^(alpha-1) 2F1(a, b; c; z)."""

    alpha: Fraction
    a: Fraction
    b: Fraction
    c: Fraction

    def __call__(self, z):
        z = np.asarray(z, float)
        al = self.alpha
        val = z ** float(al) / float(al) * hyp3f2(self.a, self.b, al, self.c, al + 1, z)
        return float(val) if np.ndim(val) == 0 else val


def hyper_powerlaw_antiderivative(alpha, a, b, c) -> HyperPowerlawAntiderivative:
    alpha = Fraction(alpha)
    if alpha == 0:
        raise ValueError("alpha must be non-zero")
    return HyperPowerlawAntiderivative(alpha, Fraction(a), Fraction(b), Fraction(c))


@dataclass(frozen=True)
class TripleSpec:
    ell1: int
    ell2: int
    ell3: int
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("the triple reduction needs n >= 2")
        if min(self.ell1, self.ell2, self.ell3) < 0:
            raise ValueError("orders must be non-negative")


@dataclass
class TripleResult:
    value: float
    delta_supported: bool
    triangle_ok: bool
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        d = self.diagnostics
        return {"value": self.value, "triangle_ok": self.triangle_ok,
                "window": list(d.get("window", [])), "L": d.get("L"),
                "terms_regular": d.get("terms_regular", 0),
                "terms_singular": d.get("terms_singular", [])}


def _strictly_inside(a, b, r3):
    # edges computed as |r1 - r2| and r1 + r2 carry roundoff; a point within a
    # few ulps of an edge is on the edge, and deltas there do not contribute
    tol = 8 * float(np.finfo(float).eps) * b
    return bool(a + tol < r3 < b - tol)


def _kernel(expr, r3):
    def f(u):
        if u == r3:
            return 0.0
        return float(eval_regular(expr, r3, u))
    return f


def _pv_integral(f, a, b, r3, epsrel):
    """Principal value of int_a^b f with a simple pole at a < r3 < b."""
    h = min(r3 - a, b - r3)
    core = _quad(lambda t: f(r3 + t) + f(r3 - t), 0.0, h, epsrel)
    rest = 0.0
    if r3 - h > a:
        rest += _quad(f, a, r3 - h, epsrel)
    if r3 + h < b:
        rest += _quad(f, r3 + h, b, epsrel)
    return core + rest


def _plain_integral(f, a, b, r3, epsrel):
    if a < r3 < b:
        return _quad(f, a, r3, epsrel) + _quad(f, r3, b, epsrel)
    return _quad(f, a, b, epsrel)


def _integrate_weight(ell3, L, n, Q: LaurentPoly, a, b, r3, epsrel=1e-12):
    """int_a^b u^2 Q(u) M_n(u) du with M_n(u) = I^[n]_{l3 L}(r3, u)."""
    M = closed_form(ell3, L, n)
    inside = _strictly_inside(a, b, r3)
    w = Q.shift(2)
    total = 0.0
    if inside:
        for s in singular_part(M):
            total += float(s.value(r3)) * w.deriv(s.m)(r3)
    if not M.regular_terms():
        return total
    order = pole_order(M)
    kern = _kernel(M, r3)
    f = lambda u: w(u) * kern(u)  # noqa: E731
    if order == 0 or not inside:
        return total + _plain_integral(f, a, b, r3, epsrel)
    if order == 1:
        return total + _pv_integral(f, a, b, r3, epsrel)
    # move one D onto the smooth weight; boundary terms from integration by parts
    lower = closed_form(ell3, L, n - 2)
    dlow = d_rp(lower)
    qd = Q.deriv()
    bnd = 0.0
    for u0, sgn in ((b, 1.0), (a, -1.0)):
        ue = u0 if u0 > 0 else 1e-12 * b
        m0 = float(eval_regular(lower, r3, ue)) if lower.regular_terms() else 0.0
        m1 = float(eval_regular(dlow, r3, ue)) if dlow.regular_terms() else 0.0
        bnd += sgn * ue * ue * (qd(ue) * m0 - Q(ue) * m1)
    return total + bnd + _integrate_weight(ell3, L, n - 2, Q.apply_D(L), a, b, r3, epsrel)


def reduce_triple(spec: TripleSpec, r1: float, r2: float, r3: float,
                  epsrel: float = 1e-12) -> TripleResult:
    """Evaluate the triple overlap integral through the u-window reduction."""
    if min(r1, r2, r3) <= 0:
        raise ValueError("radii must be positive")
    L = choose_L(spec.ell1, spec.ell2)
    a, b = window(r1, r2)
    Q = mehrem_poly(spec.ell1, spec.ell2, L, r1, r2) * (2.0 / math.pi)
    M = closed_form(spec.ell3, L, spec.n)
    sing = singular_part(M)
    inside = _strictly_inside(a, b, r3)
    value = _integrate_weight(spec.ell3, L, spec.n, Q, a, b, r3, epsrel)
    diag = {"window": [a, b], "L": L, "terms_regular": len(M.regular_terms()),
            "terms_singular": [s.to_json() for s in sing], "pole_order": pole_order(M)}
    return TripleResult(float(value), bool(sing), inside, diag)


def _j001(u, r3):
    u = float(u)
    val = -math.log(abs(r3 * r3 - u * u)) / (2 * r3)
    if u > 0:
        val += ((u + r3) * math.log(u + r3) - (u - r3) * math.log(abs(u - r3))) / (2 * r3 * r3) \
            if u != r3 else (2 * r3 * math.log(2 * r3)) / (2 * r3 * r3)
    else:
        val += 2 * r3 * math.log(r3) / (2 * r3 * r3)
    return val


def reference_001_n2(r1: float, r2: float, r3: float) -> float:
    """Closed form of int k^2 j0(k r1) j0(k r2) j1(k r3) dk.

    The middle integral is 1/(r3 (r3^2 - u^2)) + ln|(u + r3)/(u - r3)|/(2 r3^2 u);
    weighted by u/(2 r1 r2) it integrates to J(u+) - J(u-) with
    J(u) = -ln|r3^2 - u^2|/(2 r3) + [(u + r3) ln(u + r3) - (u - r3) ln|u - r3|]/(2 r3^2).
    """
    a, b = window(r1, r2)
    return (_j001(b, r3) - _j001(a, r3)) / (2 * r1 * r2)
