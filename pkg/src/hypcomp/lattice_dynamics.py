"""Orbit shells, Vitali covers, the sampling measures ``nu_t`` and the experiments built on them.

Geometric constants are pinned for trees: the shell width is ``R = max_i l_i``,
shadows in cones and small Vitali boxes use slack ``r = 0``, and the large
boxes use the smallest slack ``r' = j R`` (``j >= 1``) whose boxes cover the
square of the boundary.  Every report records the values used.

Boundary sets are handled at cylinder resolution.  A Vitali cover is built
on "pixels" ``C_u x C_w`` with ``u, w`` running over the cylinders of one
common depth; the cell construction then works on an integer owner array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .conformal_density import Density
from .errors import SizeCap, VanishingCoefficient
from .kernel_ops import gram_matrix, qs_pair, qs_terms, theta_eval
from .linalg import sym_eigs
from .rep_space import (CylinderFunction, SParameter, apply_pi, apply_pi_terms, pair_mu,
                        pair_terms)
from .tree_geometry import (Cylinder, TreeModel, Word, WordLike, all_cylinders,
                            as_word, boundary_retract, format_word, inverse, iter_ball,
                            letters, shadow)

__all__ = [
    "Shell", "shell", "visual_ball", "cone_count", "VitaliCover", "vitali_cover",
    "DiscreteMeasure", "nu_t", "CompactTestFunction", "equidistribution_error",
    "averaged_coefficient", "averaged_coefficient_limit", "decay_profile",
    "weak_containment_probe", "fell_scan", "cyclicity_rank", "coefficient_separation",
    "SHELL_CAP", "PIXEL_CAP",
]

SHELL_CAP = 4_000_000
PIXEL_CAP = 4000
_EPS = 1e-9


# ---------------------------------------------------------------- shells and cones

@dataclass(frozen=True)
class Shell:
    t: int
    R: float
    elements: tuple[Word, ...]

    def __len__(self) -> int:
        return len(self.elements)


def shell(t: int, m: TreeModel, cap: int = SHELL_CAP) -> Shell:
    """All ``g`` with ``t R <= d(o, g.o) < (t + 1) R``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    R = m.R
    lo, hi = t * R - _EPS, (t + 1) * R - _EPS
    alphabet = letters(m.rank)
    out: list[Word] = []
    stack: list[tuple[Word, float]] = [((), 0.0)]
    while stack:
        w, dist = stack.pop()
        if dist >= lo:
            out.append(w)
            if len(out) > cap:
                raise SizeCap(f"shell t={t} has more than {cap} elements")
        for x in alphabet:
            if w and w[-1] == -x:
                continue
            nd = dist + m.letter_length(x)
            if nd < hi:
                stack.append((w + (x,), nd))
    out.sort(key=lambda w: (len(w), Cylinder(w).sort_key()))
    return Shell(t, R, tuple(out))


def visual_ball(target: Cylinder, rho: float, m: TreeModel) -> Cylinder:
    """Cylinder of boundary points with Gromov product at least ``rho`` with ``target``."""
    acc = 0.0
    if rho <= _EPS:
        return Cylinder(())
    for j, x in enumerate(target.prefix, start=1):
        acc += m.letter_length(x)
        if acc >= rho - _EPS:
            return Cylinder(target.prefix[:j])
    raise ValueError(f"target {target} is too short for radius {rho}")


def cone_count(target: Cylinder | WordLike, rho: float, t: int, sign: str,
               m: TreeModel) -> dict:
    """Shell elements whose zero-slack shadow meets the visual ball of radius ``rho``.

    ``sign='+'`` uses the shadow of ``g.o``; ``sign='-'`` that of ``g^-1.o``.
    """
    target = target if isinstance(target, Cylinder) else Cylinder.of(target)
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    if m.word_length(target.prefix) < rho - _EPS:
        raise ValueError("target cylinder is shallower than the ball radius")
    if t < rho / m.R - _EPS:
        raise ValueError("t must be at least rho / R")
    ball = visual_ball(target, rho, m)
    count = 0
    for g in shell(t, m).elements:
        (cyl,) = shadow(g if sign == "+" else inverse(g), 0.0, m)
        if cyl.contains(ball) or ball.contains(cyl):
            count += 1
    expected = math.exp(m.delta * (t * m.R - rho))
    return {"count": count, "normalized_ratio": count / expected, "ball": str(ball)}


# ---------------------------------------------------------------- Vitali covers

@dataclass(frozen=True)
class VitaliCover:
    """Disjoint cells ``O2(g)``, one per selected shell element, covering the boundary square.

    ``cells[k]`` is a list of product blocks ``(C_u, C_w)``.  The flags
    ``disjoint``, ``covers`` and ``sandwiched`` are computed from the owner
    array and re-checked against the block lists.
    """

    t: int
    R: float
    r: float
    r_prime: float
    selected: tuple[Word, ...]
    cells: tuple[tuple[tuple[Cylinder, Cylinder], ...], ...]
    weights: np.ndarray = field(repr=False)
    small_boxes: tuple[tuple[Cylinder, Cylinder], ...] = field(repr=False)
    big_boxes: tuple[tuple[Cylinder, Cylinder], ...] = field(repr=False)
    shell_size: int
    resolution: int
    cover_defect: float
    disjoint: bool
    covers: bool
    sandwiched: bool
    normalized_count: float

    @property
    def ok(self) -> bool:
        return self.disjoint and self.covers and self.sandwiched and self.cover_defect <= 1e-12


def _boxes(words: Sequence[Word], radius: float, m: TreeModel) -> list[tuple[Cylinder, Cylinder]]:
    return [(shadow(g, radius, m)[0], shadow(inverse(g), radius, m)[0]) for g in words]


def _pixel_ranges(pixels: Sequence[Cylinder]) -> dict[tuple, tuple[int, int]]:
    # pixels are in lexicographic order, so every prefix owns a contiguous run
    ranges: dict[tuple, list[int]] = {}
    for i, c in enumerate(pixels):
        for j in range(c.depth + 1):
            span = ranges.setdefault(c.prefix[:j], [i, i + 1])
            span[1] = i + 1
    return {k: (a, b) for k, (a, b) in ranges.items()}


def _blocks(owner: np.ndarray, k: int, ranges, rank: int, u: Cylinder, w: Cylinder,
            out: list) -> None:
    (a0, a1), (b0, b1) = ranges[u.prefix], ranges[w.prefix]
    region = owner[a0:a1, b0:b1] == k
    if not region.any():
        return
    if region.all():
        out.append((u, w))
        return
    if u.depth <= w.depth:
        for child in u.children(rank):
            _blocks(owner, k, ranges, rank, child, w, out)
    else:
        for child in w.children(rank):
            _blocks(owner, k, ranges, rank, u, child, out)


def _vitali(t: int, d: Density, r: float = 0.0) -> VitaliCover:
    m = d.model
    rank, R = m.rank, m.R
    elements = shell(t, m).elements
    radius = t * R / 2 + r
    small = _boxes(elements, radius, m)
    depth = max(1, max(max(u.depth, w.depth) for u, w in small))
    pixels = all_cylinders(rank, depth)
    n = len(pixels)
    if n > PIXEL_CAP:
        raise SizeCap(f"{n} boundary pixels at depth {depth} exceed cap {PIXEL_CAP}")
    ranges = _pixel_ranges(pixels)
    pmass = d.masses(pixels)

    def rect(box):
        (a0, a1), (b0, b1) = ranges[box[0].prefix], ranges[box[1].prefix]
        return slice(a0, a1), slice(b0, b1)

    # greedy selection: larger boxes first, ties broken lexicographically
    order = sorted(range(len(elements)), key=lambda i: (
        -d.mass(small[i][0]) * d.mass(small[i][1]),
        len(elements[i]), Cylinder(elements[i]).sort_key()))
    taken = np.zeros((n, n), dtype=bool)
    chosen: list[int] = []
    for i in order:
        sl = rect(small[i])
        if not taken[sl].any():
            taken[sl] = True
            chosen.append(i)
    selected = [elements[i] for i in chosen]
    small_sel = [small[i] for i in chosen]

    # smallest slack r' = j R whose large boxes cover every pixel
    j = 1
    while True:
        r_prime = r + j * R
        big = _boxes(selected, t * R / 2 + r_prime, m)
        hit = np.zeros((n, n), dtype=bool)
        for box in big:
            hit[rect(box)] = True
        if hit.all():
            break
        j += 1

    # O2(g_k) = big(g_k) minus earlier cells minus later small boxes
    later_small = np.zeros((n, n), dtype=np.int32)
    for box in small_sel:
        later_small[rect(box)] += 1
    owner = np.full((n, n), -1, dtype=np.int32)
    for k, (sbox, bbox) in enumerate(zip(small_sel, big)):
        later_small[rect(sbox)] -= 1
        sl = rect(bbox)
        free = (owner[sl] == -1) & (later_small[sl] == 0)
        owner[sl][free] = k

    weights = np.bincount(owner[owner >= 0].ravel(),
                          weights=np.outer(pmass, pmass)[owner >= 0].ravel(),
                          minlength=len(selected))
    covers = bool((owner >= 0).all())

    cells = []
    coverage = np.zeros((n, n), dtype=np.int32)
    sandwiched = True
    for k, (sbox, bbox) in enumerate(zip(small_sel, big)):
        blocks: list = []
        _blocks(owner, k, ranges, rank, bbox[0], bbox[1], blocks)
        cells.append(tuple(blocks))
        inside_big = np.zeros((n, n), dtype=bool)
        inside_big[rect(bbox)] = True
        for blk in blocks:
            coverage[rect(blk)] += 1
            sandwiched &= bool(inside_big[rect(blk)].all())
        sandwiched &= bool((owner[rect(sbox)] == k).all())
    disjoint = bool(coverage.max() <= 1)

    return VitaliCover(
        t=t, R=R, r=r, r_prime=r_prime, selected=tuple(selected), cells=tuple(cells),
        weights=weights, small_boxes=tuple(small_sel), big_boxes=tuple(big),
        shell_size=len(elements), resolution=depth,
        cover_defect=abs(1.0 - math.fsum(weights)), disjoint=disjoint, covers=covers,
        sandwiched=sandwiched,
        normalized_count=len(selected) * math.exp(-d.delta * t * R))


@lru_cache(maxsize=32)
def _vitali_cached(t: int, d: Density, r: float) -> VitaliCover:
    return _vitali(t, d, r)


def vitali_cover(t: int, m: TreeModel | None = None, d: Density | None = None) -> VitaliCover:
    """Greedy Vitali selection over shadow-product boxes of the shell ``S(t)``."""
    if d is None:
        d = Density(m)
    if t < 1:
        raise ValueError("t must be >= 1")
    return _vitali_cached(int(t), d, 0.0)


@dataclass(frozen=True)
class DiscreteMeasure:
    support: tuple[Word, ...]
    weights: np.ndarray

    def __post_init__(self):
        if len(self.support) != len(self.weights):
            raise ValueError("support and weights differ in length")
        if np.any(self.weights <= 0) or abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to one")

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights ** 2)))

    def integrate(self, f) -> complex:
        vals = np.array([w * complex(f(g)) for g, w in zip(self.support, self.weights)])
        return complex(math.fsum(vals.real), math.fsum(vals.imag))


def nu_t(t: int, m: TreeModel | None = None, d: Density | None = None) -> DiscreteMeasure:
    """Weights ``mu_o x mu_o(O2(g))`` on the selected shell elements."""
    cover = vitali_cover(t, m, d)
    return DiscreteMeasure(cover.selected, cover.weights.copy())


# ---------------------------------------------------------------- test functions on X-bar

@dataclass(frozen=True)
class CompactTestFunction:
    """Continuous function on the compactified tree, known through its orbit values.

    At ``g.o`` with ``|g| >= blend_depth`` it takes the boundary value at the
    ray extending ``g``; closer to the origin it equals ``interior``.
    """

    boundary: CylinderFunction
    blend_depth: int = 1
    interior: complex = 0.0

    @classmethod
    def constant(cls, rank: int, value: complex = 1.0) -> "CompactTestFunction":
        return cls(CylinderFunction.one(rank).scale(value), 0, value)

    def __call__(self, g: WordLike) -> complex:
        g = as_word(g)
        if len(g) < self.blend_depth:
            return self.interior
        depth = max(1, self.boundary.max_depth)
        return self.boundary.value_at(boundary_retract(g, depth))


def _retracted_value(f: CylinderFunction, g: Word) -> complex:
    return f.value_at(boundary_retract(g, max(1, f.max_depth)))


def equidistribution_error(psi: tuple[CylinderFunction, CylinderFunction], t: int,
                           d: Density) -> float:
    """``|sum_g nu_t(g) F1(g.o) F2(g^-1.o) - int F1 dmu int F2 dmu|``."""
    f1, f2 = psi
    one = CylinderFunction.one(d.model.rank)
    target = pair_mu(f1, one, d) * pair_mu(f2, one, d)
    nu = nu_t(t, d=d)
    approx = nu.integrate(lambda g: _retracted_value(f1, g) * _retracted_value(f2, inverse(g)))
    return abs(approx - target)


# ---------------------------------------------------------------- averaged coefficients

def _moved(s, g: Word, phi: CylinderFunction, d: Density):
    # pi_s(g) phi as a disjoint term list; skips canonicalisation in hot loops
    return apply_pi_terms(SParameter.of(s), g, phi.terms, d) if g else list(phi.terms)


def _coefficient_terms(s, phi, psi, g, d, form):
    one = CylinderFunction.one(d.model.rank)
    moved = _moved(s, g, phi, d)
    if form == "intertwined":
        return qs_terms(moved, psi.terms, s, d) / theta_eval(one, inverse(g), s, d)
    return pair_terms(moved, psi.terms, d) / theta_eval(one, g, 1.0 - float(np.real(s)), d)


def averaged_coefficient(s: float, t: int, phi: CylinderFunction, psi: CylinderFunction,
                         f1: CompactTestFunction, f2: CompactTestFunction, d: Density,
                         form: str | None = None) -> complex:
    """``sum_g nu_t(g) f1(g.o) f2(g^-1.o) c(g)`` for a normalised matrix coefficient ``c``.

    ``form='intertwined'`` uses ``Q_s(pi_s(g) phi, psi) / Theta_s[1](g^-1.o)``;
    ``form='plain'`` uses ``<pi_s(g) phi, psi> / Theta_{1-s}[1](g.o)``, which is
    the only choice at ``s = 1/2``.  Default: plain at ``1/2``, intertwined above.
    """
    s = float(s)
    if form is None:
        form = "plain" if abs(s - 0.5) < 1e-12 else "intertwined"
    if form not in ("plain", "intertwined"):
        raise ValueError(f"unknown form {form!r}")
    nu = nu_t(t, d=d)

    def term(g):
        weight = f1(g) * f2(inverse(g))
        if weight == 0:
            return 0.0
        return weight * _coefficient_terms(s, phi, psi, g, d, form)

    return nu.integrate(term)


def averaged_coefficient_limit(s: float, phi: CylinderFunction, psi: CylinderFunction,
                               f1: CylinderFunction, f2: CylinderFunction, d: Density,
                               form: str = "intertwined") -> complex:
    """Exact large-``t`` limit on a uniform tree, where ``I_s[1]`` is a constant ``c``.

    intertwined: ``Q_s(phi, f2) Q_s(psi, f1) / c``; plain: ``Q_s(phi, f2) <psi, f1> / c``.
    Here ``f1, f2`` are the boundary restrictions of the test functions.
    """
    if not d.model.uniform:
        raise ValueError("closed-form limit needs a uniform model")
    one = CylinderFunction.one(d.model.rank)
    c = qs_pair(one, one, s, d).real
    first = qs_pair(phi, f2.conj(), s, d)
    if form == "intertwined":
        return first * qs_pair(psi, f1.conj(), s, d).conjugate() / c
    return first * pair_mu(psi, f1.conj(), d).conjugate() / c


# ---------------------------------------------------------------- decay, containment, Fell

def decay_profile(s: float, phi: CylinderFunction, psi: CylinderFunction, Lmax: int,
                  d: Density, letter: int = 1, vanish_tol: float = 1e-12) -> dict:
    """Least-squares slope of ``log |Q_s(pi_s(x^n) phi, psi)|`` for ``n = 1..Lmax``.

    Also fits ``log Theta_s[1](x^n.o)``.  Raises :class:`VanishingCoefficient`
    when the coefficient is zero to within ``vanish_tol`` times the norms.
    """
    if Lmax < 2:
        raise ValueError("need Lmax >= 2 for a slope")
    ns = np.arange(1, Lmax + 1)
    one = CylinderFunction.one(d.model.rank)
    scale = math.sqrt(abs(qs_pair(phi, phi, s, d)) * abs(qs_pair(psi, psi, s, d)))
    coef = np.array([abs(qs_pair(apply_pi(s, (letter,) * n, phi, d), psi, s, d)) for n in ns])
    if np.any(coef <= vanish_tol * max(scale, 1e-300)):
        raise VanishingCoefficient(f"coefficient vanishes (max {coef.max():.3e}, scale {scale:.3e})")
    theta = np.array([theta_eval(one, (letter,) * n, s, d).real for n in ns])
    slope, intercept = np.polyfit(ns, np.log(coef), 1)
    theta_slope, _ = np.polyfit(ns, np.log(theta), 1)
    residual = np.log(coef) - slope * ns
    return {
        "s": float(s), "Lmax": int(Lmax),
        "slope": float(slope), "theta_slope": float(theta_slope),
        "target": -(1.0 - s) * d.delta * d.model.letter_length(letter),
        "intercept": float(intercept),
        "intercept_range": (float(residual.min()), float(residual.max())),
        "values": coef.tolist(),
    }


def weak_containment_probe(s: float, t_range: Iterable[int], d: Density) -> list[dict]:
    """Rows ``{t, lhs, rhs, ratio}``: sampled coefficient against the Haagerup bound.

    ``lhs = sum_g nu_t(g) Q_s(pi_s(g) 1, 1)`` and ``rhs = (1 + t) ||nu_t||_2``.
    Within ``1e-6`` of ``s = 1/2`` the unitary pairing of the boundary
    representation replaces ``Q_s``.
    """
    s = float(s)
    boundary = abs(s - 0.5) <= 1e-6
    one = CylinderFunction.one(d.model.rank)
    rows = []
    for t in t_range:
        if t > 9:
            raise SizeCap("t capped at 9")
        nu = nu_t(t, d=d)
        if boundary:
            lhs = nu.integrate(lambda g: pair_terms(_moved(0.5, g, one, d), one.terms, d))
        else:
            lhs = nu.integrate(lambda g: qs_terms(_moved(s, g, one, d), one.terms, s, d))
        lhs = float(np.real(lhs))
        rhs = (1.0 + t) * nu.l2_norm()
        rows.append({"t": int(t), "s": s, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs,
                     "pairing": "boundary" if boundary else "intertwined"})
    return rows


def fell_scan(g: WordLike, phi: CylinderFunction, s_grid: Iterable[float],
              d: Density) -> list[dict]:
    """Normalised ``Q_s`` coefficients approaching the boundary-representation coefficient."""
    g = as_word(g)
    target = complex(pair_mu(apply_pi(0.5, g, phi, d), phi, d) / pair_mu(phi, phi, d)).real
    rows = []
    for s in s_grid:
        s = float(s)
        if not 0.5 < s <= 1.0:
            raise ValueError("s_grid must lie in (1/2, 1]")
        raw = qs_pair(apply_pi(s, g, phi, d), phi, s, d)
        norm = qs_pair(phi, phi, s, d)
        normalized = complex(raw / norm).real
        rows.append({
            "s": s, "g": format_word(g), "normalized": normalized,
            "limit_target": target, "deviation": abs(normalized - target),
            "sqrt_scaled": math.sqrt(2 * s - 1) * complex(raw).real,
            "linear_scaled": (2 * s - 1) * complex(raw).real,
        })
    return rows


def coefficient_separation(s1: float, s2: float, Lmax: int, d: Density,
                           phi: CylinderFunction | None = None) -> float:
    """``max_{|g| <= Lmax} |normalized_{s1}(g) - normalized_{s2}(g)|``."""
    phi = phi if phi is not None else CylinderFunction.one(d.model.rank)
    best = 0.0
    cache: dict[tuple, float] = {}
    for g in iter_ball(d.model.rank, Lmax):
        vals = []
        for s in (s1, s2):
            key = (s, g)
            if key not in cache:
                cache[key] = complex(qs_pair(apply_pi(s, g, phi, d), phi, s, d)
                                     / qs_pair(phi, phi, s, d)).real
            vals.append(cache[key])
        best = max(best, abs(vals[0] - vals[1]))
    return best


def cyclicity_rank(s: float, L: int, depth: int, d: Density, threshold: float = 1e-8) -> dict:
    """Numerical rank of ``{E_depth[pi_s(g) 1] : |g| <= L}`` in the ``Q_s`` geometry.

    ``E_depth`` averages over the depth-``depth`` cylinders.  The Gram matrix
    is ``V G V^T`` with ``G`` the depth-``depth`` energy Gram; its rank is
    read off the Jacobi spectrum with threshold ``threshold * largest``.
    """
    if L < 0 or depth < 0:
        raise ValueError("L and depth must be nonnegative")
    rank_ = d.model.rank
    cyls = all_cylinders(rank_, depth)
    masses = d.masses(cyls)
    one = CylinderFunction.one(rank_)
    sp = SParameter.of(s)
    rows = []
    for g in iter_ball(rank_, L):
        f = apply_pi(sp, g, one, d)
        rows.append([pair_mu(f, CylinderFunction.indicator(rank_, c), d).real / mu
                     for c, mu in zip(cyls, masses)])
    v = np.array(rows)
    gram = v @ gram_matrix(depth, s, d) @ v.T
    eig = sym_eigs(0.5 * (gram + gram.T)).eigenvalues
    top = max(abs(eig).max(), 1e-300)
    rank = int(np.sum(eig > threshold * top))
    return {"s": float(s), "L": int(L), "depth": int(depth), "vectors": len(rows),
            "dimension": len(cyls), "rank": rank}
