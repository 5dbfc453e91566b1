"""Closed forms for int_0^inf k^n j_l(k r) j_l'(k r') dk.

The base exponents n = 0 and n = 1 come from the classical Gauss
hypergeometric formulas on each side of the diagonal. Larger n follow by
repeated application of the raising operator.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .dist_algebra import (
    GREATER,
    PRIME_GREATER,
    DistExpr,
    ExactCoeff,
    GammaTag,
    HyperDescriptor,
    Orientation,
    Term,
    apply_D,
    canonicalize,
    eval_regular,
    singular_part,
)
from .errors import BaseOutOfValidity
from .specfun import SqrtPiRational, gamma_half_exact, hyp2f1, log_gamma_half, recip_gamma_half


@dataclass(frozen=True)
class DoubleSpec:
    ell: int
    ellp: int
    n: int

    def __post_init__(self):
        if self.ell < 0 or self.ellp < 0:
            raise ValueError("orders must be non-negative")
        if self.n < 0:
            raise ValueError("negative powers of k are not supported")

    @property
    def n_base(self):
        return self.n % 2


def c_gamma(ell: int, ellp: int, n: int, primed: bool) -> SqrtPiRational:
    """Exact gamma ratio prefacing the base formula on one side of the diagonal.

    primed (r < r'):  G((l+l'+1+n)/2) / [G((l'-l+2-n)/2) G(l+3/2)]
    unprimed (r > r'): G((l+l'+1+n)/2) / [G((l-l'+2-n)/2) G(l'+3/2)]
    Returns an exact zero when a denominator gamma has a pole.
    """
    num = gamma_half_exact(ell + ellp + 1 + n)
    lo, hi = (ell, ellp) if primed else (ellp, ell)
    den1 = gamma_half_exact(hi - lo + 2 - n)
    den2 = gamma_half_exact(2 * lo + 3)
    if den1 is None:
        return SqrtPiRational(Fraction(0), 0)
    return num / (den1 * den2)


def c_gamma_float(ell: int, ellp: int, n: int, primed: bool) -> float:
    """Floating-point twin of c_gamma built from reciprocal gammas."""
    lo, hi = (ell, ellp) if primed else (ellp, ell)
    rg = recip_gamma_half(hi - lo + 2 - n) * recip_gamma_half(2 * lo + 3)
    return math.exp(log_gamma_half(ell + ellp + 1 + n)) * rg


def base_expr(ell: int, ellp: int, n_base: int) -> DistExpr:
    """Spliced base integral for n_base in {0, 1}."""
    if n_base not in (0, 1) or ell + ellp + n_base + 1 <= 0 or ell < 0 or ellp < 0:
        raise BaseOutOfValidity(f"no base formula for l={ell}, l'={ellp}, n={n_base}")
    pref = SqrtPiRational(Fraction(2) ** (n_base - 2), 2)  # pi / 2^(2-n)
    terms = []
    for primed in (True, False):
        cg = c_gamma(ell, ellp, n_base, primed)
        coeff = ExactCoeff.from_sqrtpi(pref * cg)
        if coeff.is_zero:
            continue
        if primed:
            region, pr, prp = PRIME_GREATER, ell, -(ell + 1 + n_base)
            tag = GammaTag("cgamma_rp_greater", n_base)
            h = HyperDescriptor(Orientation.PRIMED, 1, 0, 3)
        else:
            region, pr, prp = GREATER, -(ellp + 1 + n_base), ellp
            tag = GammaTag("cgamma_r_greater", n_base)
            h = HyperDescriptor(Orientation.UNPRIMED, 1, 0, 3)
        terms.append(Term(region, coeff, pr, prp, h, tag))
    return canonicalize(DistExpr(ell, ellp, n_base, n_base, tuple(terms)))


# ---------------------------------------------------------------------------
# caching
# ---------------------------------------------------------------------------

_disk_lock = threading.Lock()


def _cache_dir():
    d = os.environ.get("SBF_CACHE_DIR")
    return Path(d) if d else None


def _disk_load(key):
    d = _cache_dir()
    if d is None:
        return None
    path = d / f"I_{key[0]}_{key[1]}_{key[2]}_w{key[3].numerator}-{key[3].denominator}.json"
    try:
        return DistExpr.from_json(json.loads(path.read_text()))
    except (OSError, ValueError, KeyError):
        return None


def _disk_store(key, expr):
    d = _cache_dir()
    if d is None:
        return
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"I_{key[0]}_{key[1]}_{key[2]}_w{key[3].numerator}-{key[3].denominator}.json"
    with _disk_lock:
        fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(expr.dumps())
        os.replace(tmp, path)


@lru_cache(maxsize=512)
def _closed_form_cached(ell, ellp, n, weight):
    key = (ell, ellp, n, weight)
    expr = _disk_load(key)
    if expr is not None:
        return expr
    nb = n % 2
    if n == nb:
        expr = base_expr(ell, ellp, nb)
    else:
        expr = apply_D(_closed_form_cached(ell, ellp, n - 2, weight), weight)
    _disk_store(key, expr)
    return expr


def closed_form(ell, ellp=None, n=None, jump_weight=1) -> DistExpr:
    """Canonical expression for I^[n]_{l l'}; accepts a DoubleSpec or three ints."""
    if isinstance(ell, DoubleSpec):
        spec = ell
    else:
        spec = DoubleSpec(int(ell), int(ellp), int(n))
    return _closed_form_cached(spec.ell, spec.ellp, spec.n, Fraction(jump_weight))


def gr_direct(ell: int, ellp: int, n: int, r, rp):
    """Base-formula value evaluated directly at exponent n (no ladder).

    Valid wherever the classical formula applies, e.g. (l, l', n) = (0, 1, 2).
    """
    r, rp = np.broadcast_arrays(np.asarray(r, float), np.asarray(rp, float))
    out = np.empty(r.shape)
    lt = r < rp
    pref = np.pi * 2.0 ** (n - 2)
    if np.any(lt):
        cg = c_gamma_float(ell, ellp, n, True)
        a, b, c = Fraction(ell + ellp + n + 1, 2), Fraction(ell - ellp + n, 2), Fraction(2 * ell + 3, 2)
        rr, pp = r[lt], rp[lt]
        out[lt] = pref * cg * rr**ell / pp ** (ell + 1 + n) * hyp2f1(a, b, c, (rr / pp) ** 2)
    gt = ~lt
    if np.any(gt):
        cg = c_gamma_float(ell, ellp, n, False)
        a, b, c = Fraction(ell + ellp + n + 1, 2), Fraction(ellp - ell + n, 2), Fraction(2 * ellp + 3, 2)
        rr, pp = r[gt], rp[gt]
        out[gt] = pref * cg * pp**ellp / rr ** (ellp + 1 + n) * hyp2f1(a, b, c, (pp / rr) ** 2)
    return float(out) if out.ndim == 0 else out


@dataclass
class DoubleResult:
    value: float
    singular: list = field(default_factory=list)
    n_terms: int = 0

    def to_json(self):
        return {"value": self.value, "singular": [s.to_json() for s in self.singular],
                "n_terms": self.n_terms}


def evaluate(spec: DoubleSpec, r: float, rp: float) -> DoubleResult:
    """Regular value at (r, r') plus the symbolic delta content."""
    expr = closed_form(spec)
    return DoubleResult(float(eval_regular(expr, r, rp)), singular_part(expr), len(expr.terms))
