"""Critical exponent, Poincaré sums, the orbit approximants and the boundary density.

The limiting density on the boundary is the Markov measure

    mu(C_w) = exp(-delta * L(w)) * h(last letter of w),   h(x) = 1 - p(x),
    p(x) = mu(C_x) = 1 / (1 + exp(delta * l(x))),

where ``L`` is weighted word length.  It is additive over children because
the letter masses ``p`` sum to one exactly at the critical exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DepthTooShallow, ElementaryGroup, ParameterAtOrBelowDelta
from .tree_geometry import (Cylinder, TreeModel, WordLike, all_cylinders, as_word,
                            busemann_on_cylinder, inverse, iter_ball,
                            letter_key, map_cylinder, shadow)

__all__ = [
    "solve_delta", "spectral_radius", "critical_exponent", "poincare_partial",
    "poincare_series", "Density", "FiniteDensity", "cylinder_mass", "cone_mass_t",
    "rn_derivative", "verify_conformality", "shadow_lemma_ratio",
    "divergence_certificate",
]


def _letter_matrix(rank: int, lengths: Sequence[float], t: float) -> np.ndarray:
    """``A[x, y] = exp(-t l(y))`` when ``y`` may follow ``x`` in a reduced word."""
    per_letter = np.repeat(np.asarray(lengths, dtype=float), 2)
    a = np.tile(np.exp(-t * per_letter), (2 * rank, 1))
    idx = np.arange(2 * rank)
    a[idx, idx ^ 1] = 0.0
    return a


def spectral_radius(rank: int, lengths: Sequence[float], t: float,
                    iterations: int = 200) -> tuple[float, float]:
    """Collatz–Wielandt bracket on the Perron root of the letter matrix.

    Power iteration on the positive vector; returns ``(lower, upper)``.
    """
    a = _letter_matrix(rank, lengths, t)
    x = np.ones(2 * rank)
    lo, hi = 0.0, math.inf
    for _ in range(iterations):
        y = a @ x
        ratio = y / x
        lo, hi = float(ratio.min()), float(ratio.max())
        x = y / y.sum()
        if hi - lo <= 1e-15 * hi:
            break
    return lo, hi


def solve_delta(rank: int, lengths: Sequence[float]) -> float:
    """Critical exponent of ``F_rank`` for the given edge lengths."""
    if rank < 2:
        raise ElementaryGroup(f"rank {rank} < 2 gives an elementary group")
    ls = [float(x) for x in lengths]
    if len(set(ls)) == 1:
        return math.log(2 * rank - 1) / ls[0]
    lo = math.log(2 * rank - 1) / max(ls)  # radius >= 1 here
    hi = math.log(2 * rank - 1) / min(ls)  # radius <= 1 here
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        r_lo, r_hi = spectral_radius(rank, ls, mid)
        radius = r_lo if r_lo > 1.0 else (r_hi if r_hi < 1.0 else 0.5 * (r_lo + r_hi))
        if radius > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_exponent(m: TreeModel) -> float:
    return solve_delta(m.rank, m.lengths)


def _sphere_sums(m: TreeModel, s: float, n_max: int) -> np.ndarray:
    """``out[n] = sum over |g| = n of exp(-s d(o, g.o))``."""
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if m.uniform:
        k, ell = m.rank, m.lengths[0]
        n = np.arange(1, n_max + 1, dtype=float)
        out[1:] = 2 * k * (2.0 * k - 1.0) ** (n - 1) * np.exp(-s * ell * n)
        return out
    a = _letter_matrix(m.rank, m.lengths, s)
    v = np.exp(-s * m.letter_lengths)
    for n in range(1, n_max + 1):
        out[n] = v.sum()
        v = v @ a
    return out


def poincare_partial(m: TreeModel, s: float, N: int) -> float:
    """Sum of ``exp(-s d(o, g.o))`` over words of letter-length at most ``N``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    return float(np.sum(_sphere_sums(m, s, N)))


def poincare_series(m: TreeModel, t: float) -> float:
    """Full Poincaré series ``W(t)`` for ``t > delta``."""
    if t <= m.delta:
        raise ParameterAtOrBelowDelta(f"t={t} <= delta={m.delta}")
    if m.uniform:
        k, ell = m.rank, m.lengths[0]
        q = math.exp(-t * ell)
        return 1.0 + 2 * k * q / (1.0 - (2 * k - 1) * q)
    z = _cone_sums(m, t)
    return 1.0 + float(np.exp(-t * m.letter_lengths) @ z)


def _cone_sums(m: TreeModel, t: float) -> np.ndarray:
    # Z[x] = sum over reduced continuations u after letter x of exp(-t L(u))
    a = _letter_matrix(m.rank, m.lengths, t)
    return np.linalg.solve(np.eye(2 * m.rank) - a, np.ones(2 * m.rank))


def divergence_certificate(m: TreeModel, margin: float = 0.05,
                           n_small: int = 40, n_large: int = 80) -> dict:
    """Growth of partial Poincaré sums on either side of the critical exponent.

    Below ``delta`` the sphere sums grow geometrically; above it they decay.
    """
    below = _sphere_sums(m, m.delta - margin, n_large)
    above = _sphere_sums(m, m.delta + margin, n_large)
    return {
        "below_growth": float(below[n_large] / below[n_small]),
        "above_decay": float(above[n_large] / above[n_small]),
        "diverges_below": bool(below[n_large] > below[n_small]),
        "converges_above": bool(above[n_large] < above[n_small]),
    }


# ---------------------------------------------------------------- the density

@dataclass(frozen=True)
class Density:
    """The conformal probability measure on the boundary, seen from the identity."""

    model: TreeModel

    @property
    def delta(self) -> float:
        return self.model.delta

    @property
    def letter_masses(self) -> np.ndarray:
        return self.model.letter_masses

    def tails(self) -> np.ndarray:
        """``h[x] = 1 - p(x)``: the mass factor left after a word ends in ``x``."""
        return 1.0 - self.model.letter_masses

    def transition(self) -> np.ndarray:
        """``P[x, y] = mu(C_{wy}) / mu(C_w)`` for ``w`` ending in ``x``."""
        m = self.model
        h = self.tails()
        row = np.exp(-self.delta * m.letter_lengths) * h
        p = np.tile(row, (2 * m.rank, 1)) / h[:, None]
        idx = np.arange(2 * m.rank)
        p[idx, idx ^ 1] = 0.0
        return p

    def mass(self, w: Cylinder | WordLike) -> float:
        prefix = w.prefix if isinstance(w, Cylinder) else as_word(w)
        n = len(prefix)
        if n == 0:
            return 1.0
        m = self.model
        if m.uniform:
            k = m.rank
            return (2.0 * k - 1.0) ** (1 - n) / (2 * k)
        h = 1.0 - m.letter_masses[letter_key(prefix[-1])]
        return math.exp(-self.delta * m.word_length(prefix)) * h

    def masses(self, cylinders) -> np.ndarray:
        return np.array([self.mass(c) for c in cylinders], dtype=float)


def cylinder_mass(d: Density, w: Cylinder) -> float:
    return d.mass(w)


@dataclass(frozen=True)
class FiniteDensity:
    """Normalised ``exp(-t d)``-weighted counting measure on the orbit of the identity."""

    model: TreeModel
    t: float

    def __post_init__(self):
        if not self.t > self.model.delta:
            raise ParameterAtOrBelowDelta(f"t={self.t} must exceed delta={self.model.delta}")

    def total(self) -> float:
        return poincare_series(self.model, self.t)

    def cone_mass(self, w: Cylinder) -> float:
        prefix = w.prefix
        if not prefix:
            return 1.0
        m, t = self.model, self.t
        if m.uniform:
            k, ell = m.rank, m.lengths[0]
            q = math.exp(-t * ell)
            inner = math.exp(-t * ell * len(prefix)) / (1.0 - (2 * k - 1) * q)
            return inner / self.total()
        z = _cone_sums(m, t)
        return math.exp(-t * m.word_length(prefix)) * z[letter_key(prefix[-1])] / self.total()


def cone_mass_t(f: FiniteDensity, w: Cylinder) -> float:
    return f.cone_mass(w)


# ---------------------------------------------------------------- cocycles

def rn_derivative(d: Density, g: WordLike, w: Cylinder) -> float:
    """``d mu_{g.o} / d mu_o`` on ``w``; needs ``w`` not to be a proper prefix of ``g``."""
    return math.exp(-d.delta * busemann_on_cylinder(w, g, d.model))


def verify_conformality(d: Density, g: WordLike, depth: int) -> float:
    """Largest discrepancy between ``mu_o(g^-1 C)`` and ``int_C RN_g dmu_o``.

    Runs over the depth-``depth`` partition and also folds in the deviation of
    the total ``sum_C RN_g(C) mu_o(C)`` from one.
    """
    g = as_word(g)
    if depth < len(g) + 1:
        raise DepthTooShallow(f"depth {depth} < |g| + 1 = {len(g) + 1}")
    rank = d.model.rank
    g_inv = inverse(g)
    worst = 0.0
    total = 0.0
    for c in all_cylinders(rank, depth):
        pulled = sum(d.mass(piece) for piece in map_cylinder(g_inv, c, rank))
        weighted = rn_derivative(d, g, c) * d.mass(c)
        total += weighted
        worst = max(worst, abs(pulled - weighted))
    return max(worst, abs(total - 1.0))


def shadow_lemma_ratio(d: Density, rho: float, Lmax: int) -> tuple[float, float]:
    """Extremes of ``mu_o(shadow(g, rho)) / (exp(delta rho) exp(-delta d(o, g)))``.

    Taken over every ``g`` with ``1 <= |g| <= Lmax``.
    """
    if Lmax < 1:
        raise ValueError("Lmax must be >= 1")
    if rho < min(d.model.lengths):
        raise ValueError("rho must be at least the shortest edge length")
    m = d.model
    lo, hi = math.inf, -math.inf
    for g in iter_ball(m.rank, Lmax):
        if not g:
            continue
        dist = m.word_length(g)
        (cyl,) = shadow(g, rho, m)
        ratio = d.mass(cyl) / math.exp(d.delta * (rho - dist))
        lo, hi = min(lo, ratio), max(hi, ratio)
    return lo, hi

