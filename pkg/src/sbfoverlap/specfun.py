"""Scalar special functions: spherical Bessel, gamma at half-integers,
Gauss and generalized hypergeometric series, Legendre polynomials and
exact Wigner 3j/6j symbols.

Everything here is a pure function of its arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import (
    HypergeometricDivergesAtUnity,
    NoConvergence,
    ParameterDegenerate,
    PoleAtNonpositiveInteger,
)

SERIES_TOL = 1e-12
MAX_TERMS = 100_000
Z_SWITCH = 0.75

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# spherical Bessel functions of the first kind
# ---------------------------------------------------------------------------

def _sbf_series(ell, x):
    # x^l/(2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
    lead = x**ell / float(math.prod(range(1, 2 * ell + 2, 2)))
    term = np.ones_like(x)
    total = np.ones_like(x)
    h = -0.5 * x * x
    for k in range(1, 60):
        term = term * h / (k * (2 * ell + 2 * k + 1))
        total = total + term
        if np.all(np.abs(term) <= _EPS * np.abs(total)):
            break
    return lead * total


def _sbf_upward(ell, x):
    s, c = np.sin(x), np.cos(x)
    j0 = s / x
    if ell == 0:
        return j0
    j1 = s / (x * x) - c / x
    jm, jk = j0, j1
    for k in range(1, ell):
        jm, jk = jk, (2 * k + 1) / x * jk - jm
    return jk


def _sbf_miller(ell, x):
    # downward recurrence from well above ell, normalised against whichever of
    # j0, j1 is larger in magnitude (they never vanish together)
    start = ell + 20 + int(np.sqrt(40.0 * (ell + 1))) + int(np.max(x))
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-30)
    val_ell = np.zeros_like(x)
    for k in range(start, 0, -1):
        prev = (2 * k + 1) / x * cur - nxt
        nxt, cur = cur, prev
        if k - 1 == ell:
            val_ell = cur.copy()
        big = np.abs(cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            cur, nxt, val_ell = cur * scale, nxt * scale, val_ell * scale
    if ell == 0:
        val_ell = cur
    # cur ~ j0, nxt ~ j1 (unnormalised)
    s, c = np.sin(x), np.cos(x)
    j0 = s / x
    j1 = s / (x * x) - c / x
    use0 = np.abs(j0) >= np.abs(j1)
    norm = np.where(use0, j0 / np.where(use0, cur, 1.0), j1 / np.where(use0, 1.0, nxt))
    return val_ell * norm


def sbf(ell, x):
    """Spherical Bessel function j_ell(x) for x >= 0.

    Power series below x = 1, upward recurrence for x > ell and Miller's
    downward recurrence in between. Accepts scalars or arrays.
    """
    ell = int(ell)
    if ell < 0:
        raise ValueError("order must be non-negative")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0):
        raise ValueError("sbf is defined here for x >= 0")
    out = np.empty_like(xa)
    small = xa < 1.0
    up = (~small) & (xa > ell)
    mid = ~(small | up)
    if np.any(small):
        out[small] = _sbf_series(ell, xa[small])
    if np.any(up):
        out[up] = _sbf_upward(ell, xa[up])
    if np.any(mid):
        out[mid] = _sbf_miller(ell, xa[mid])
    return float(out[0]) if scalar else out


def sbf_asymptotic(ell, x):
    """Large-argument form sin(x - ell*pi/2)/x."""
    x = np.asarray(x, dtype=float)
    res = np.sin(x - 0.5 * ell * np.pi) / x
    return float(res) if res.ndim == 0 else res


# ---------------------------------------------------------------------------
# gamma function at half-integer arguments
# ---------------------------------------------------------------------------

def _is_pole(twice_arg):
    return twice_arg <= 0 and twice_arg % 2 == 0


def log_gamma_half(twice_arg: int) -> float:
    """log|Gamma(twice_arg / 2)|; raises at the poles of Gamma."""
    twice_arg = int(twice_arg)
    if _is_pole(twice_arg):
        raise PoleAtNonpositiveInteger(f"Gamma has a pole at {twice_arg}/2")
    return math.lgamma(twice_arg / 2)


def recip_gamma_half(twice_arg: int) -> float:
    """1/Gamma(twice_arg / 2), exactly zero at the poles."""
    twice_arg = int(twice_arg)
    if _is_pole(twice_arg):
        return 0.0
    x = twice_arg / 2
    if x > 170:
        return math.copysign(math.exp(-math.lgamma(x)), 1.0)
    return 1.0 / math.gamma(x)


@dataclass(frozen=True)
class SqrtPiRational:
    """Exact number q * pi**(sqrt_pi_power / 2)."""

    q: Fraction
    sqrt_pi_power: int = 0

    def __mul__(self, other):
        if isinstance(other, SqrtPiRational):
            return SqrtPiRational(self.q * other.q, self.sqrt_pi_power + other.sqrt_pi_power)
        return SqrtPiRational(self.q * Fraction(other), self.sqrt_pi_power)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SqrtPiRational):
            return SqrtPiRational(self.q / other.q, self.sqrt_pi_power - other.sqrt_pi_power)
        return SqrtPiRational(self.q / Fraction(other), self.sqrt_pi_power)

    def __float__(self):
        return float(self.q) * math.pi ** (self.sqrt_pi_power / 2)

    @property
    def is_zero(self):
        return self.q == 0

    @property
    def pi_power(self) -> int:
        """Integer power of pi; raises if a stray sqrt(pi) survives."""
        if self.sqrt_pi_power % 2:
            raise ValueError(f"{self} carries an odd power of sqrt(pi)")
        return self.sqrt_pi_power // 2


def gamma_half_exact(twice_arg: int) -> SqrtPiRational | None:
    """Gamma(twice_arg/2) as q*sqrt(pi)^p; None at a pole."""
    t = int(twice_arg)
    if _is_pole(t):
        return None
    if t % 2 == 0:
        return SqrtPiRational(Fraction(math.factorial(t // 2 - 1)), 0)
    # Gamma(1/2) = sqrt(pi); walk up or down in unit steps
    val = Fraction(1)
    x = Fraction(1, 2)
    target = Fraction(t, 2)
    while x < target:
        val *= x
        x += 1
    while x > target:
        x -= 1
        val /= x
    return SqrtPiRational(val, 1)


# ---------------------------------------------------------------------------
# hypergeometric series
# ---------------------------------------------------------------------------

def _as_number(p):
    if isinstance(p, (Fraction, int, Rational)):
        return Fraction(p)
    return float(p)


def _nonpos_int(p):
    if isinstance(p, Fraction):
        return p.denominator == 1 and p <= 0
    return float(p).is_integer() and p <= 0


@dataclass(frozen=True)
class Hyper2F1Params:
    a: Fraction
    b: Fraction
    c: Fraction
    z: float = 0.0

    def value(self):
        return hyp2f1(self.a, self.b, self.c, self.z)


def _terminating_order(a, b):
    orders = [int(-p) for p in (a, b) if _nonpos_int(p)]
    return min(orders) if orders else None


def _poly_coeffs(params_up, params_down, m):
    coeffs = [1.0]
    t = Fraction(1)
    exact = all(isinstance(p, Fraction) for p in params_up + params_down)
    tf = 1.0
    for k in range(m):
        if exact:
            num = math.prod((p + k for p in params_up), start=Fraction(1))
            den = math.prod((p + k for p in params_down), start=Fraction(1)) * (k + 1)
            t = t * num / den
            coeffs.append(float(t))
        else:
            num = math.prod(float(p) + k for p in params_up)
            den = math.prod(float(p) + k for p in params_down) * (k + 1)
            tf = tf * num / den
            coeffs.append(tf)
    return coeffs


def _check_lower(params_down, m):
    for c in params_down:
        if _nonpos_int(c) and (m is None or int(-c) < m):
            raise ParameterDegenerate(
                f"lower parameter {c} is reached before the series terminates")


def _ones(z):
    return 1.0 if isinstance(z, float) else np.ones_like(z)


def _zeros(z):
    return 0.0 if isinstance(z, float) else np.zeros_like(z)


def _negligible(term, total, rel):
    if isinstance(term, float):
        return abs(term) <= rel * abs(total)
    return bool(np.all(np.abs(term) <= rel * np.abs(total)))


def _series(params_up, params_down, z):
    """Direct pFq series, vectorised over z, with a geometric tail bound."""
    up = [float(p) for p in params_up]
    down = [float(p) for p in params_down]
    term = _ones(z)
    total = _ones(z)
    az = abs(z) if isinstance(z, float) else np.abs(z)
    azmax = float(np.max(az))
    for k in range(MAX_TERMS):
        num = math.prod(p + k for p in up)
        den = math.prod(p + k for p in down) * (k + 1)
        ratio = num / den
        term = term * ratio * z
        total = total + term
        rho = abs(ratio) * azmax
        if k > 2 and rho < 1:
            if _negligible(term * (rho / (1 - rho)), total, 1e-16):
                return total
    raise NoConvergence("hypergeometric series did not converge",
                        {"terms": MAX_TERMS, "z_max": azmax})


def _digamma(x):
    from scipy.special import digamma
    return float(digamma(x))


def _rgamma(x):
    from scipy.special import rgamma
    return float(rgamma(x))


def _gamma(x):
    from scipy.special import gamma
    return float(gamma(x))


def _hyp2f1_near_one(a, b, c, z):
    a, b, c = float(a), float(b), float(c)
    w = 1.0 - z
    s = c - a - b
    m = int(round(s))
    if abs(s - m) > 1e-12:
        A = _gamma(c) * _gamma(s) * _rgamma(c - a) * _rgamma(c - b)
        B = _gamma(c) * _gamma(-s) * _rgamma(a) * _rgamma(b)
        f1 = _series([a, b], [a + b - c + 1], w) if A != 0 else 0.0
        f2 = _series([c - a, c - b], [s + 1], w) if B != 0 else 0.0
        return A * f1 + B * w**s * f2
    logw = math.log(w) if isinstance(w, float) else np.log(w)
    if m == 0:
        pref = _gamma(a + b) * _rgamma(a) * _rgamma(b)
        total = _zeros(w)
        coef = 1.0
        pa, pb, p1 = _digamma(a), _digamma(b), _digamma(1.0)
        wn = _ones(w)
        for n in range(MAX_TERMS):
            term = coef * (2 * p1 - pa - pb - logw) * wn
            total = total + term
            if n > 3 and _negligible(term, total, 1e-17):
                return pref * total
            coef *= (a + n) * (b + n) / (n + 1) ** 2
            pa += 1.0 / (a + n)
            pb += 1.0 / (b + n)
            p1 += 1.0 / (n + 1)
            wn = wn * w
        raise NoConvergence("log connection series did not converge")
    if m > 0:
        # c = a + b + m
        finite = _zeros(w)
        coef = 1.0
        wn = _ones(w)
        for n in range(m):
            finite = finite + coef * wn
            coef *= (a + n) * (b + n) / ((n + 1) * (1 - m + n)) if n < m - 1 else 0.0
            wn = wn * w
        finite = finite * _gamma(m) * _gamma(a + b + m) * _rgamma(a + m) * _rgamma(b + m)
        pref = _gamma(a + b + m) * _rgamma(a) * _rgamma(b)
        if pref == 0:
            return finite
        total = _zeros(w)
        coef = 1.0 / math.factorial(m)
        p1 = _digamma(1.0)
        pm = _digamma(m + 1.0)
        pa = _digamma(a + m)
        pb = _digamma(b + m)
        wn = _ones(w)
        for n in range(MAX_TERMS):
            term = coef * wn * (logw - p1 - pm + pa + pb)
            total = total + term
            if n > 3 and _negligible(term, total, 1e-17):
                break
            coef *= (a + m + n) * (b + m + n) / ((n + 1) * (n + m + 1))
            p1 += 1.0 / (n + 1)
            pm += 1.0 / (n + m + 1)
            pa += 1.0 / (a + n + m)
            pb += 1.0 / (b + n + m)
            wn = wn * w
        else:
            raise NoConvergence("log connection series did not converge")
        return finite - (-w) ** m * pref * total
    # c = a + b - m with m > 0
    m = -m
    finite = _zeros(w)
    coef = 1.0
    wn = _ones(w)
    for n in range(m):
        finite = finite + coef * wn
        coef *= (a - m + n) * (b - m + n) / ((n + 1) * (1 - m + n)) if n < m - 1 else 0.0
        wn = wn * w
    finite = finite * _gamma(m) * _gamma(a + b - m) * _rgamma(a) * _rgamma(b) * w ** (-m)
    pref = _gamma(a + b - m) * _rgamma(a - m) * _rgamma(b - m)
    if pref == 0:
        return finite
    total = _zeros(w)
    coef = 1.0 / math.factorial(m)
    p1 = _digamma(1.0)
    pm = _digamma(m + 1.0)
    pa = _digamma(a)
    pb = _digamma(b)
    wn = _ones(w)
    for n in range(MAX_TERMS):
        term = coef * wn * (logw - p1 - pm + pa + pb)
        total = total + term
        if n > 3 and _negligible(term, total, 1e-17):
            break
        coef *= (a + n) * (b + n) / ((n + 1) * (n + m + 1))
        p1 += 1.0 / (n + 1)
        pm += 1.0 / (n + m + 1)
        pa += 1.0 / (a + n)
        pb += 1.0 / (b + n)
        wn = wn * w
    else:
        raise NoConvergence("log connection series did not converge")
    return finite - (-1) ** m * pref * total


def hyp2f1(a, b, c, z):
    """Gauss hypergeometric 2F1(a, b; c; z) for 0 <= z < 1.

    Terminating series are summed exactly as polynomials. Otherwise the
    Maclaurin series is used up to ``Z_SWITCH`` and the linear z -> 1-z
    connection formulas (including the logarithmic cases for integer
    c-a-b) beyond it. Accepts scalar or array z.
    """
    a, b, c = _as_number(a), _as_number(b), _as_number(c)
    za = np.asarray(z, dtype=float)
    scalar = za.ndim == 0
    za = np.atleast_1d(za)
    if np.any(za >= 1):
        raise ValueError("hyp2f1 needs z < 1")
    m = _terminating_order(a, b)
    _check_lower([c], m)
    if m is not None:
        coeffs = _poly_coeffs([a, b], [c], m)
        out = np.polynomial.polynomial.polyval(za, coeffs)
    else:
        if za.size == 1:
            zf = float(za[0])
            val = _series([a, b], [c], zf) if zf <= Z_SWITCH else _hyp2f1_near_one(a, b, c, zf)
            return float(val) if scalar else np.array([val])
        out = np.empty_like(za)
        lo = za <= Z_SWITCH
        if np.any(lo):
            out[lo] = _series([a, b], [c], za[lo])
        if np.any(~lo):
            out[~lo] = _hyp2f1_near_one(a, b, c, za[~lo])
    return float(out[0]) if scalar else out


def hyp2f1_at_one(a, b, c) -> SqrtPiRational:
    """Exact 2F1(a, b; c; 1) for rational (half-)integer parameters.

    Terminating series are summed in rationals; otherwise Gauss's summation
    Gamma(c)Gamma(c-a-b)/(Gamma(c-a)Gamma(c-b)) is used when c-a-b > 0.
    """
    a, b, c = Fraction(a), Fraction(b), Fraction(c)
    m = _terminating_order(a, b)
    _check_lower([c], m)
    if m is not None:
        total = Fraction(0)
        t = Fraction(1)
        for k in range(m + 1):
            total += t
            t = t * (a + k) * (b + k) / ((c + k) * (k + 1))
        return SqrtPiRational(total, 0)
    s = c - a - b
    if s <= 0:
        raise HypergeometricDivergesAtUnity(
            f"2F1({a}, {b}; {c}; 1) diverges (c-a-b = {s})")
    for p in (c, s, c - a, c - b):
        if (2 * p).denominator != 1:
            raise ValueError("exact Gauss sum needs half-integer parameters")
    num = gamma_half_exact(2 * c) * gamma_half_exact(2 * s)
    den_a, den_b = gamma_half_exact(2 * (c - a)), gamma_half_exact(2 * (c - b))
    if den_a is None or den_b is None:
        return SqrtPiRational(Fraction(0), 0)
    return num / (den_a * den_b)


def hyp3f2(a, b, d, c, e, z):
    """Generalized hypergeometric 3F2(a, b, d; c, e; z) by direct series, |z| < 1."""
    up = [_as_number(p) for p in (a, b, d)]
    down = [_as_number(p) for p in (c, e)]
    za = np.asarray(z, dtype=float)
    scalar = za.ndim == 0
    za = np.atleast_1d(za)
    if np.any(np.abs(za) >= 1):
        raise ValueError("hyp3f2 series needs |z| < 1")
    orders = [int(-p) for p in up if _nonpos_int(p)]
    m = min(orders) if orders else None
    _check_lower(down, m)
    if m is not None:
        out = np.polynomial.polynomial.polyval(za, _poly_coeffs(up, down, m))
    else:
        out = _series(up, down, za)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Legendre polynomials
# ---------------------------------------------------------------------------

def legendre_p(ell, x):
    """P_ell(x) by the Bonnet three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0 = np.ones_like(x)
    if ell == 0:
        return float(p0) if x.ndim == 0 else p0
    p1 = x.copy()
    for k in range(1, ell):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    return float(p1) if x.ndim == 0 else p1


# ---------------------------------------------------------------------------
# Wigner symbols in exact arithmetic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqrtRational:
    """sign * sqrt(square) with ``square`` a non-negative rational."""

    sign: int
    square: Fraction

    @classmethod
    def zero(cls):
        return cls(0, Fraction(0))

    @classmethod
    def from_signed(cls, value: Fraction, radicand: Fraction = Fraction(1)):
        """Build value * sqrt(radicand)."""
        if value == 0 or radicand == 0:
            return cls.zero()
        return cls(1 if value > 0 else -1, value * value * radicand)

    def __float__(self):
        return self.sign * math.sqrt(self.square)

    def __mul__(self, other):
        return SqrtRational(self.sign * other.sign, self.square * other.square)

    def __neg__(self):
        return SqrtRational(-self.sign, self.square)

    @property
    def is_zero(self):
        return self.sign == 0

    def __str__(self):
        if self.sign == 0:
            return "0"
        s = "-" if self.sign < 0 else ""
        return f"{s}sqrt({self.square})"


_fact = math.factorial


def triangle_ok(j1, j2, j3) -> bool:
    return abs(j1 - j2) <= j3 <= j1 + j2


def _delta_sq(a, b, c):
    return Fraction(_fact(a + b - c) * _fact(a - b + c) * _fact(-a + b + c), _fact(a + b + c + 1))


def wigner3j(j1, j2, j3, m1, m2, m3) -> SqrtRational:
    """3j symbol for integer angular momenta by the Racah sum."""
    if m1 + m2 + m3 != 0 or not triangle_ok(j1, j2, j3):
        return SqrtRational.zero()
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return SqrtRational.zero()
    tmin = max(0, j2 - j3 - m1, j1 - j3 + m2)
    tmax = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    total = Fraction(0)
    for t in range(tmin, tmax + 1):
        den = (_fact(t) * _fact(j3 - j2 + t + m1) * _fact(j3 - j1 + t - m2)
               * _fact(j1 + j2 - j3 - t) * _fact(j1 - t - m1) * _fact(j2 - t + m2))
        total += Fraction((-1) ** t, den)
    if total == 0:
        return SqrtRational.zero()
    radicand = _delta_sq(j1, j2, j3) * (
        _fact(j1 + m1) * _fact(j1 - m1) * _fact(j2 + m2) * _fact(j2 - m2)
        * _fact(j3 + m3) * _fact(j3 - m3))
    phase = -1 if (j1 - j2 - m3) % 2 else 1
    return SqrtRational.from_signed(phase * total, radicand)


def wigner3j_zero(j1, j2, j3) -> SqrtRational:
    """(j1 j2 j3; 0 0 0); vanishes for odd j1+j2+j3."""
    if (j1 + j2 + j3) % 2:
        return SqrtRational.zero()
    return wigner3j(j1, j2, j3, 0, 0, 0)


def wigner6j(j1, j2, j3, j4, j5, j6) -> SqrtRational:
    """{j1 j2 j3; j4 j5 j6} by the Racah formula with exact factorials."""
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(triangle_ok(*t) for t in triads):
        return SqrtRational.zero()
    sums = [sum(t) for t in triads]
    p1, p2, p3 = j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4
    total = Fraction(0)
    for t in range(max(sums), min(p1, p2, p3) + 1):
        den = math.prod(_fact(t - s) for s in sums) * _fact(p1 - t) * _fact(p2 - t) * _fact(p3 - t)
        total += Fraction((-1) ** t * _fact(t + 1), den)
    radicand = math.prod((_delta_sq(*t) for t in triads), start=Fraction(1))
    return SqrtRational.from_signed(total, radicand)
