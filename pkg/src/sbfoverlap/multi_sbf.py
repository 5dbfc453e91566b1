"""Integrals of four or more spherical Bessel functions.

A product j_a(k r_a) j_b(k r_b) is re-expanded in the order-L Hankel basis

    j_a j_b (k) = (2/pi) int u^2 du j_L(k u) int k'^2 dk' j_a(k' r_a) j_b(k' r_b) j_L(k' u),

which trades two Bessel factors for one and a new radius u. Each split
adds one auxiliary variable; the leaves are triple integrals, either the
elementary even-sum k^2 kind or general ones from ``triple_sbf``. The
auxiliary integrals run over finite windows and are done numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import integrate

from .errors import NoConvergence
from .triple_sbf import TripleSpec, choose_L, mehrem_even_k2, reduce_triple

MAX_N = 8


@dataclass(frozen=True)
class MultiSpec:
    orders: tuple
    radii: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(int(v) for v in self.orders))
        object.__setattr__(self, "radii", tuple(float(v) for v in self.radii))
        if len(self.orders) != len(self.radii):
            raise ValueError("orders and radii must have equal length")
        if len(self.orders) < 4:
            raise ValueError("use double_sbf or triple_sbf below four factors")
        if len(self.orders) > MAX_N:
            raise ValueError(f"at most {MAX_N} factors are supported")
        if self.n < 2:
            raise ValueError("the reduction needs n >= 2")
        if min(self.radii) <= 0:
            raise ValueError("radii must be positive")


@dataclass
class Leaf:
    """Triple integral int k^n j j j; kind 'k2even' has the elementary form."""

    kind: str
    orders: tuple
    radii: tuple  # variable names
    n: int

    def summary(self):
        return {"leaf": self.kind, "orders": list(self.orders), "radii": list(self.radii), "n": self.n}


@dataclass
class Split:
    """(2/pi) int u^2 du prod(children) over a finite support."""

    aux: str
    L: int
    support: tuple  # ("window", a, b) -> [|a-b|, a+b]; ("sum", a, b, c) -> [0, a+b+c]
    children: list = field(default_factory=list)

    def summary(self):
        return {"aux": self.aux, "L": self.L, "support": list(self.support),
                "children": [c.summary() for c in self.children]}

    def aux_count(self):
        return 1 + sum(c.aux_count() for c in self.children if isinstance(c, Split))

    def leaves(self):
        out = []
        for c in self.children:
            out.extend(c.leaves() if isinstance(c, Split) else [c])
        return out


@dataclass
class ReductionTree:
    spec: MultiSpec
    root: Split

    def summary(self):
        return {"N": len(self.spec.orders), "aux_count": self.root.aux_count(),
                "root": self.root.summary()}

    @property
    def mixed_parity(self):
        o = self.spec.orders
        return (o[0] + o[1]) % 2 != (o[2] + o[3]) % 2


def _plan(orders, names, n, counter):
    N = len(orders)
    if N == 3:
        return Leaf("general", tuple(orders), tuple(names), n)
    counter[0] += 1
    u = f"u{counter[0]}"
    if N == 4:
        L = choose_L(orders[0], orders[1])
        return Split(u, L, ("window", names[0], names[1]), [
            Leaf("k2even", (orders[0], orders[1], L), (names[0], names[1], u), 2),
            Leaf("general", (orders[2], orders[3], L), (names[2], names[3], u), n),
        ])
    if N == 5:
        L = choose_L(orders[1], orders[2])
        counter[0] += 1
        up = f"u{counter[0]}"
        Lp = choose_L(orders[3], orders[4])
        inner = Split(up, Lp, ("window", names[3], names[4]), [
            Leaf("k2even", (orders[3], orders[4], Lp), (names[3], names[4], up), 2),
            Leaf("general", (L, Lp, orders[0]), (u, up, names[0]), n),
        ])
        return Split(u, L, ("window", names[1], names[2]), [
            Leaf("k2even", (orders[1], orders[2], L), (names[1], names[2], u), 2),
            inner,
        ])
    # split the first three factors off against j_0(k u)
    left = _plan(list(orders[:3]) + [0], list(names[:3]) + [u], 2, counter)
    right = _plan([0] + list(orders[3:]), [u] + list(names[3:]), n, counter)
    return Split(u, 0, ("sum", names[0], names[1], names[2]), [left, right])


def plan(spec: MultiSpec) -> ReductionTree:
    """Left-to-right pairing with one auxiliary radius per split."""
    names = [f"r{i + 1}" for i in range(len(spec.orders))]
    return ReductionTree(spec, _plan(list(spec.orders), names, spec.n, [0]))


def _bounds(support, env):
    if support[0] == "window":
        a, b = env[support[1]], env[support[2]]
        return abs(a - b), a + b
    return 0.0, sum(env[s] for s in support[1:])


def _breakpoints(node, aux, env, lo, hi):
    pts = set()
    for leaf in (node.leaves() if isinstance(node, Split) else [node]):
        if aux not in leaf.radii:
            continue
        vals = [env.get(v) for v in leaf.radii]
        idx = leaf.radii.index(aux)
        others = [v for i, v in enumerate(vals) if i != idx]
        if any(v is None for v in others):
            continue
        x, y = others
        pts.update({abs(x - y), x + y})
    return sorted(p for p in pts if lo < p < hi)


@dataclass
class _Stats:
    levels: int = 0
    error: float = 0.0
    calls: int = 0


def _eval_leaf(leaf: Leaf, env, epsrel):
    r = [env[v] for v in leaf.radii]
    if leaf.kind == "k2even":
        return float(mehrem_even_k2(*leaf.orders, *r))
    return reduce_triple(TripleSpec(*leaf.orders, leaf.n), *r, epsrel=epsrel).value


def _eval_split(node: Split, env, stats: _Stats, epsrel):
    lo, hi = _bounds(node.support, env)
    pts = _breakpoints(node, node.aux, env, lo, hi)

    def integrand(u):
        sub = dict(env)
        sub[node.aux] = u
        val = 2.0 / math.pi * u * u
        for c in node.children:
            if val == 0.0:
                return 0.0
            val *= _eval_leaf(c, sub, epsrel) if isinstance(c, Leaf) else _eval_split(c, sub, stats, epsrel)
        return val

    edges = [lo] + pts + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        val, err, info = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=epsrel,
                                        limit=200, full_output=1)[:3]
        if err > max(1e-6 * abs(val), 1e-10) and info.get("last", 0) >= 200:
            raise NoConvergence("auxiliary quadrature stalled",
                                {"aux": node.aux, "interval": [a, b], "error": err})
        total += val
        stats.levels = max(stats.levels, int(info.get("last", 0)))
        stats.error += err
    stats.calls += 1
    return total


@dataclass
class MultiResult:
    value: float
    tree: dict
    refinement_levels: int
    error_estimate: float

    def to_json(self):
        return {"value": self.value, "tree": self.tree,
                "refinement_levels": self.refinement_levels,
                "error_estimate": self.error_estimate}


def evaluate_multi(spec: MultiSpec, epsrel: float = 1e-9) -> MultiResult:
    """Numerically integrate the auxiliary radii of the planned reduction."""
    tree = plan(spec)
    env = {f"r{i + 1}": r for i, r in enumerate(spec.radii)}
    stats = _Stats()
    value = _eval_split(tree.root, env, stats, epsrel)
    return MultiResult(float(value), tree.summary(), stats.levels, stats.error)
