"""Step functions on the boundary and the action ``pi_s`` of the free group on them.

A :class:`CylinderFunction` is a finite sum of cylinder indicators with complex
coefficients.  Its canonical form lists pairwise disjoint cylinders, drops
zero coefficients and merges complete sibling families that share a value.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .conformal_density import Density
from .errors import DepthTooShallow, ParameterOutOfRange, ParseError
from .tree_geometry import (Cylinder, WordLike, as_word, busemann_on_cylinder, common_prefix_len,
                            format_word, inverse, letters, map_cylinder, reduce_concat)

__all__ = ["SParameter", "CylinderFunction", "refine", "pair_mu", "apply_pi",
           "duality_defect", "max_abs_difference"]


@dataclass(frozen=True)
class SParameter:
    """Complex parameter ``s = sigma + i alpha`` with ``sigma`` in ``[0, 1]``."""

    sigma: float
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ParameterOutOfRange(f"real part {self.sigma} outside [0, 1]")
        if self.alpha != 0.0 and abs(self.sigma - 0.5) > 1e-15:
            raise ParameterOutOfRange("imaginary part only allowed on the line sigma = 1/2")

    @classmethod
    def of(cls, s) -> "SParameter":
        if isinstance(s, SParameter):
            return s
        z = complex(s)
        return cls(z.real, z.imag)

    @property
    def value(self) -> complex:
        return complex(self.sigma, self.alpha)

    def dual(self) -> "SParameter":
        """``conj(1 - s)``: the parameter paired with ``s`` by the integral pairing."""
        return SParameter(1.0 - self.sigma, self.alpha)

    def power(self, x: float) -> complex | float:
        """``x ** s`` for ``x > 0`` on the principal branch."""
        if self.alpha == 0.0:
            return x ** self.sigma
        return cmath.exp(self.value * math.log(x))


def _clean(c: complex) -> complex | float:
    c = complex(c)
    return c.real if c.imag == 0.0 else c


class CylinderFunction:
    """Finitely supported step function ``sum_j c_j 1_{C_j}`` on the boundary.

    Construct with :meth:`from_terms` (overlapping cylinders are summed) or
    :meth:`indicator`.  Instances are immutable and always canonical.
    """

    __slots__ = ("rank", "terms", "_index")

    def __init__(self, rank: int, terms: Iterable[tuple[Cylinder, complex]] = ()):
        self.rank = int(rank)
        self.terms = tuple(_canonical(self.rank, terms))
        self._index = {c.prefix: v for c, v in self.terms}

    # construction ------------------------------------------------------------
    @classmethod
    def from_terms(cls, rank: int, terms: Iterable[tuple[Cylinder | WordLike, complex]]):
        pairs = []
        for c, v in terms:
            pairs.append((c if isinstance(c, Cylinder) else Cylinder.of(c), v))
        return cls(rank, pairs)

    @classmethod
    def indicator(cls, rank: int, w: Cylinder | WordLike = (), coefficient: complex = 1.0):
        c = w if isinstance(w, Cylinder) else Cylinder.of(w)
        return cls(rank, [(c, coefficient)])

    @classmethod
    def one(cls, rank: int) -> "CylinderFunction":
        return cls.indicator(rank, Cylinder(()))

    @classmethod
    def from_values(cls, rank: int, cylinders, values) -> "CylinderFunction":
        return cls(rank, zip(cylinders, values))

    # views ---------------------------------------------------------------
    @property
    def cylinders(self) -> list[Cylinder]:
        return [c for c, _ in self.terms]

    @property
    def coefficients(self) -> list[complex]:
        return [v for _, v in self.terms]

    @property
    def max_depth(self) -> int:
        return max((c.depth for c, _ in self.terms), default=0)

    def sup_norm(self) -> float:
        return max((abs(v) for _, v in self.terms), default=0.0)

    def value_at(self, w: Cylinder | WordLike) -> complex:
        """Value on a cylinder deep enough to sit inside one term (or outside all)."""
        p = w.prefix if isinstance(w, Cylinder) else as_word(w)
        for j in range(len(p), -1, -1):
            v = self._index.get(p[:j])
            if v is not None:
                return v
        if any(c.prefix[:len(p)] == p and c.depth > len(p) for c, _ in self.terms):
            raise DepthTooShallow(f"{format_word(p)} is not inside a single term")
        return 0.0

    def __repr__(self) -> str:
        body = ", ".join(f"{format_word(c.prefix) or '{}'}: {v:.6g}" for c, v in self.terms)
        return f"CylinderFunction(rank={self.rank}, {{{body}}})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, CylinderFunction) and self.rank == other.rank
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.rank, self.terms))

    # algebra ------------------------------------------------------------------
    def __add__(self, other: "CylinderFunction") -> "CylinderFunction":
        return CylinderFunction(self.rank, self.terms + other.terms)

    def __neg__(self) -> "CylinderFunction":
        return self.scale(-1.0)

    def __sub__(self, other: "CylinderFunction") -> "CylinderFunction":
        return self + (-other)

    def scale(self, factor: complex) -> "CylinderFunction":
        return CylinderFunction(self.rank, [(c, factor * v) for c, v in self.terms])

    def conj(self) -> "CylinderFunction":
        return CylinderFunction(self.rank, [(c, complex(v).conjugate()) for c, v in self.terms])

    # serialization ----------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps([{"prefix": format_word(c.prefix), "re": complex(v).real,
                            "im": complex(v).imag} for c, v in self.terms])

    @classmethod
    def from_json(cls, rank: int, text: str) -> "CylinderFunction":
        try:
            items = json.loads(text)
            terms = [(Cylinder.of(it["prefix"]), complex(it["re"], it.get("im", 0.0)))
                     for it in items]
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad cylinder-function JSON: {exc}") from None
        return cls(rank, terms)


def _canonical(rank: int, terms) -> list[tuple[Cylinder, complex]]:
    """Disjoint, zero-free, sibling-merged terms in lexicographic order."""
    acc: dict[tuple, complex] = {}
    for c, v in terms:
        v = complex(v)
        if v != 0:
            acc[c.prefix] = acc.get(c.prefix, 0j) + v
    if not acc:
        return []
    # every proper prefix of a listed cylinder is an interior node to be split
    interior = set()
    for p in acc:
        for j in range(len(p)):
            interior.add(p[:j])
    alphabet = letters(rank)
    leaves: dict[tuple, complex] = {}

    def descend(p: tuple, inherited: complex):
        here = inherited + acc.get(p, 0j)
        if p not in interior:
            if here != 0:
                leaves[p] = here
            return
        for x in alphabet:
            if p and p[-1] == -x:
                continue
            descend(p + (x,), here)

    roots = {p[:1] if p else () for p in acc}
    if () in acc or () in interior:
        descend((), 0j)
    else:
        for r in roots:
            descend(r, 0j)

    # merge complete sibling families with identical values, deepest first
    changed = True
    while changed:
        changed = False
        parents: dict[tuple, list[tuple]] = {}
        for p in leaves:
            if p:
                parents.setdefault(p[:-1], []).append(p)
        for parent in sorted(parents, key=len, reverse=True):
            kids = parents[parent]
            need = 2 * rank if not parent else 2 * rank - 1
            if len(kids) != need:
                continue
            vals = {leaves[k] for k in kids}
            if len(vals) == 1:
                v = vals.pop()
                for k in kids:
                    del leaves[k]
                leaves[parent] = v
                changed = True
    out = [(Cylinder(p), _clean(v)) for p, v in leaves.items()]
    out.sort(key=lambda cv: cv[0].sort_key())
    return out


def refine(phi: CylinderFunction, depth: int) -> list[tuple[Cylinder, complex]]:
    """Terms of ``phi`` split down to letter-depth ``depth``.

    The result is a plain term list: the canonical constructor would merge
    the pieces straight back.
    """
    if depth < phi.max_depth:
        raise DepthTooShallow(f"depth {depth} is shallower than a term of phi")
    out = []
    for c, v in phi.terms:
        out.extend((piece, v) for piece in c.descendants(phi.rank, depth))
    return out


def _nested_overlaps(phi_terms, psi_terms):
    """Yield ``(u_coef, v_coef, smaller_cylinder)`` for every nested pair of terms."""
    psi_index: dict[tuple, list] = {}
    for c, v in psi_terms:
        psi_index.setdefault(c.prefix, []).append(v)
    phi_index: dict[tuple, list] = {}
    for c, v in phi_terms:
        phi_index.setdefault(c.prefix, []).append(v)
    for c, u in phi_terms:
        p = c.prefix
        for j in range(len(p) + 1):
            for v in psi_index.get(p[:j], ()):
                yield u, v, c
    for c, v in psi_terms:
        p = c.prefix
        for j in range(len(p)):
            for u in phi_index.get(p[:j], ()):
                yield u, v, c


def pair_terms(phi_terms, psi_terms, d: Density) -> complex:
    total = 0j
    for u, v, c in _nested_overlaps(phi_terms, psi_terms):
        total += complex(u) * complex(v).conjugate() * d.mass(c)
    return total


def pair_mu(phi: CylinderFunction, psi: CylinderFunction, d: Density) -> complex:
    """``int phi * conj(psi) dmu_o``."""
    return pair_terms(phi.terms, psi.terms, d)


def rn_power(d: Density, g, c: Cylinder, s: SParameter):
    """``(d mu_{g.o} / d mu_o)^s`` on ``c``."""
    b = busemann_on_cylinder(c, g, d.model)
    if s.alpha == 0.0:
        return math.exp(-s.sigma * d.delta * b)
    return cmath.exp(-s.value * d.delta * b)


def apply_pi_terms(s: SParameter, g, terms, d: Density) -> list[tuple[Cylinder, complex]]:
    m = d.model
    g = as_word(g)
    # prefix lengths of g give the Busemann value on each image cylinder
    acc = [0.0]
    for x in g:
        acc.append(acc[-1] + m.letter_length(x))
    rate = -s.sigma * d.delta if s.alpha == 0.0 else -s.value * d.delta
    expo = math.exp if s.alpha == 0.0 else cmath.exp
    out = []
    for c, v in terms:
        for image in map_cylinder(g, c, m.rank):
            j = common_prefix_len(image.prefix, g)
            out.append((image, v * expo(rate * (acc[-1] - 2.0 * acc[j]))))
    return out


def apply_pi(s, g: WordLike, phi: CylinderFunction, d: Density) -> CylinderFunction:
    """``pi_s(g) phi (xi) = RN_g(xi)^s phi(g^-1 xi)``, computed exactly."""
    s = SParameter.of(s)
    g = as_word(g)
    if not g:
        return phi
    return CylinderFunction(phi.rank, apply_pi_terms(s, g, phi.terms, d))


def duality_defect(s, g: WordLike, phi: CylinderFunction, psi: CylinderFunction,
                   d: Density) -> float:
    """``|<pi_s(g) phi, psi> - <phi, pi_{conj(1-s)}(g^-1) psi>|`` for the mu-pairing."""
    s = SParameter.of(s)
    g = as_word(g)
    lhs = pair_mu(apply_pi(s, g, phi, d), psi, d)
    rhs = pair_mu(phi, apply_pi(s.dual(), inverse(g), psi, d), d)
    return abs(lhs - rhs)


def max_abs_difference(phi: CylinderFunction, psi: CylinderFunction) -> float:
    """Sup-norm of ``phi - psi``, independent of how either is split."""
    return (phi - psi).sup_norm()


def compose(g: WordLike, h: WordLike):
    return reduce_concat(as_word(g), as_word(h))


def random_step_function(rng, rank: int, depth: int, complex_values: bool = False,
                         density: float = 0.7) -> CylinderFunction:
    """Random function constant on depth-``depth`` cylinders (for suites and tests)."""
    from .tree_geometry import all_cylinders

    cyls = all_cylinders(rank, depth)
    vals = rng.normal(size=len(cyls))
    if complex_values:
        vals = vals + 1j * rng.normal(size=len(cyls))
    keep = rng.random(len(cyls)) < density
    return CylinderFunction(rank, [(c, v) for c, v, k in zip(cyls, vals, keep) if k])


def as_mapping(phi: CylinderFunction) -> Mapping[str, complex]:
    return {format_word(c.prefix): v for c, v in phi.terms}
