"""Words in a free group and the geometry of its (edge-weighted) Cayley tree.

A letter is a nonzero int: ``i + 1`` is the ``i``-th generator and ``-(i + 1)``
its inverse.  Words are tuples of letters.  Strings use ``a, b, c, ...`` for
generators and the upper-case letter for inverses, so ``"aB"`` is ``(1, -2)``.

Directed letters are indexed ``0 .. 2k-1`` in the order ``a, A, b, B, ...``;
that order is also the lexicographic order used for cylinders.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence, Union

import numpy as np
from scipy.linalg import helmert

from .errors import (AsymmetricKernel, DepthTooShallow, ElementaryGroup,
                     NestedCylinders, NonzeroDiagonal, ParseError)
from .linalg import sym_eigs

Word = tuple
WordLike = Union[str, Sequence[int]]

__all__ = [
    "Word", "parse_word", "format_word", "as_word", "inverse", "is_reduced",
    "reduce_concat", "letter_key", "key_letter", "letters", "iter_words",
    "iter_ball", "TreeModel", "Cylinder", "distance", "gromov_product",
    "cylinder_gromov", "busemann_on_cylinder", "map_cylinder",
    "boundary_retract", "shadow", "MetricSample", "check_conditionally_negative",
    "check_schoenberg", "common_prefix_len", "all_cylinders",
]


# ---------------------------------------------------------------- letters

def letter_key(x: int) -> int:
    """Index of a directed letter in the order a, A, b, B, ..."""
    return 2 * (abs(x) - 1) + (x < 0)


def key_letter(i: int) -> int:
    return (i // 2 + 1) * (-1 if i % 2 else 1)


def letters(rank: int) -> tuple[int, ...]:
    return tuple(key_letter(i) for i in range(2 * rank))


def parse_word(text: str) -> Word:
    out = []
    for ch in text.strip():
        if not ch.isalpha() or not ch.isascii():
            raise ParseError(f"bad letter {ch!r} in word {text!r}")
        idx = ord(ch.lower()) - ord("a") + 1
        out.append(-idx if ch.isupper() else idx)
    return reduce_concat((), tuple(out))


def format_word(w: Sequence[int]) -> str:
    return "".join(chr(ord("a") + abs(x) - 1).upper() if x < 0 else chr(ord("a") + x - 1)
                   for x in w)


def as_word(w: WordLike) -> Word:
    """Accept a string or a letter sequence and return a reduced word tuple."""
    if isinstance(w, str):
        return parse_word(w)
    if type(w) is not tuple:
        w = tuple(int(x) for x in w)
    return _checked(w)


@lru_cache(maxsize=1 << 16)
def _checked(t: Word) -> Word:
    if any(x == 0 for x in t):
        raise ParseError("letter 0 is not a generator")
    t = tuple(int(x) for x in t)
    return t if is_reduced(t) else reduce_concat((), t)


def inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i] != -w[i + 1] for i in range(len(w) - 1))


def reduce_concat(u: Sequence[int], v: Sequence[int]) -> Word:
    """Freely reduced form of the concatenation ``uv``."""
    out = list(u)
    for x in v:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def common_prefix_len(u: Sequence[int], v: Sequence[int]) -> int:
    n = 0
    for x, y in zip(u, v):
        if x != y:
            break
        n += 1
    return n


def iter_words(rank: int, n: int) -> Iterator[Word]:
    """All reduced words of letter-length exactly ``n``, lexicographically."""
    alphabet = letters(rank)

    def extend(prefix: Word, remaining: int):
        if remaining == 0:
            yield prefix
            return
        for x in alphabet:
            if prefix and prefix[-1] == -x:
                continue
            yield from extend(prefix + (x,), remaining - 1)

    yield from extend((), n)


def iter_ball(rank: int, n: int) -> Iterator[Word]:
    """Reduced words of length ``0 .. n``, shortest first."""
    for m in range(n + 1):
        yield from iter_words(rank, m)


# ---------------------------------------------------------------- the model

@dataclass(frozen=True)
class TreeModel:
    """Free group of rank ``k`` acting on its Cayley tree with edge lengths.

    ``lengths[i]`` is shared by generator ``i`` and its inverse.  ``delta`` is
    the critical exponent and ``letter_masses`` the boundary mass of each
    depth-1 cylinder (directed-letter order); they sum to one.
    """

    rank: int
    lengths: tuple[float, ...]
    delta: float
    letter_masses: np.ndarray = field(repr=False, compare=False)
    hyperbolicity: float = 0.0

    @classmethod
    def create(cls, rank: int, lengths: Iterable[float] | None = None) -> "TreeModel":
        if rank < 2:
            raise ElementaryGroup(f"rank {rank} < 2 gives an elementary group")
        ls = tuple(float(x) for x in (lengths if lengths is not None else [1.0] * rank))
        if len(ls) != rank:
            raise ValueError(f"expected {rank} lengths, got {len(ls)}")
        if any(not (x > 0 and math.isfinite(x)) for x in ls):
            raise ValueError("edge lengths must be positive and finite")
        from .conformal_density import solve_delta

        delta = solve_delta(rank, ls)
        per_letter = np.repeat(np.array(ls), 2)
        if len(set(ls)) == 1:
            masses = np.full(2 * rank, 1.0 / (2 * rank))
        else:
            masses = 1.0 / (1.0 + np.exp(delta * per_letter))
        masses.setflags(write=False)
        return cls(rank, ls, delta, masses)

    @property
    def uniform(self) -> bool:
        return len(set(self.lengths)) == 1

    @property
    def letter_lengths(self) -> np.ndarray:
        """Edge length per directed letter (a, A, b, B, ...)."""
        return np.repeat(np.array(self.lengths), 2)

    @property
    def R(self) -> float:
        return max(self.lengths)

    def letter_length(self, x: int) -> float:
        return self.lengths[abs(x) - 1]

    @cached_property
    def _length_of(self) -> dict[int, float]:
        return {x: self.lengths[abs(x) - 1] for x in letters(self.rank)}

    def word_length(self, w: Sequence[int]) -> float:
        return float(sum(map(self._length_of.__getitem__, w)))

    def describe(self) -> dict:
        return {"rank": self.rank, "lengths": list(self.lengths), "delta": self.delta}


# ---------------------------------------------------------------- cylinders

@dataclass(frozen=True, order=False)
class Cylinder:
    """Boundary rays starting with ``prefix``; the empty prefix is all of the boundary."""

    prefix: Word = ()

    @classmethod
    def of(cls, w: WordLike) -> "Cylinder":
        return cls(as_word(w))

    @property
    def depth(self) -> int:
        return len(self.prefix)

    @property
    def last(self) -> int | None:
        return self.prefix[-1] if self.prefix else None

    def contains(self, other: "Cylinder") -> bool:
        """True when ``other`` is a subset of this cylinder."""
        n = len(self.prefix)
        return len(other.prefix) >= n and other.prefix[:n] == self.prefix

    def disjoint(self, other: "Cylinder") -> bool:
        return not (self.contains(other) or other.contains(self))

    def children(self, rank: int) -> list["Cylinder"]:
        p = self.prefix
        return [Cylinder(p + (x,)) for x in letters(rank) if not (p and p[-1] == -x)]

    def descendants(self, rank: int, depth: int) -> list["Cylinder"]:
        """Sub-cylinders at letter-depth ``depth`` (itself if already that deep)."""
        if depth <= self.depth:
            return [self]
        out = [self]
        for _ in range(depth - self.depth):
            out = [c for cyl in out for c in cyl.children(rank)]
        return out

    def sort_key(self) -> tuple:
        return _sort_key(self.prefix)

    def __str__(self) -> str:
        return "C_" + (format_word(self.prefix) or "{}")

    @property
    def label(self) -> str:
        return format_word(self.prefix)


@lru_cache(maxsize=1 << 16)
def _sort_key(prefix: Word) -> tuple:
    return tuple(2 * abs(x) - 2 + (x < 0) for x in prefix)


def all_cylinders(rank: int, depth: int) -> list[Cylinder]:
    """The depth-``depth`` partition of the boundary in lexicographic order."""
    return [Cylinder(w) for w in iter_words(rank, depth)]


# ---------------------------------------------------------------- metric

def distance(g: WordLike, h: WordLike, m: TreeModel) -> float:
    return m.word_length(reduce_concat(inverse(as_word(g)), as_word(h)))


def gromov_product(g: WordLike, h: WordLike, m: TreeModel) -> float:
    """Gromov product at the identity: weighted length of the common prefix."""
    g, h = as_word(g), as_word(h)
    return m.word_length(g[:common_prefix_len(g, h)])


def cylinder_gromov(v: Cylinder, w: Cylinder, m: TreeModel) -> float:
    if not v.disjoint(w):
        raise NestedCylinders(f"{v} and {w} are nested")
    return m.word_length(v.prefix[:common_prefix_len(v.prefix, w.prefix)])


def busemann_on_cylinder(w: Cylinder, g: WordLike, m: TreeModel) -> float:
    """``b_xi(g.o, o)`` for every ``xi`` in ``w``.

    Constant on ``w`` unless the prefix of ``w`` is a proper prefix of ``g``,
    in which case ``DepthTooShallow`` is raised.  This covers every cylinder of
    letter-depth at least ``|g|``.
    """
    g = as_word(g)
    p = w.prefix
    j = common_prefix_len(p, g)
    if j == len(p) and len(p) < len(g):
        raise DepthTooShallow(
            f"{w} is a proper prefix of {format_word(g)}; Busemann value not constant")
    return m.word_length(g) - 2.0 * m.word_length(g[:j])


def map_cylinder(g: WordLike, w: Cylinder, rank: int) -> list[Cylinder]:
    """Disjoint cylinders whose union is ``g`` applied to ``w``.

    A cylinder whose prefix is not swallowed by the cancellation against ``g``
    maps to a single cylinder; swallowed ones are split into children first.
    """
    g = as_word(g)
    if not g:
        return [w]
    out: list[Cylinder] = []
    stack = [w]
    while stack:
        c = stack.pop()
        p = c.prefix
        cancel = 0
        while cancel < min(len(g), len(p)) and g[-1 - cancel] == -p[cancel]:
            cancel += 1
        if cancel < len(p):
            out.append(Cylinder(g[:len(g) - cancel] + p[cancel:]))
        else:
            stack.extend(reversed(c.children(rank)))
    out.sort(key=Cylinder.sort_key)
    return out


def boundary_retract(g: WordLike, depth: int) -> Cylinder:
    """Depth-``depth`` cylinder around the ray that keeps repeating ``g``'s last letter."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    g = as_word(g)
    last = g[-1] if g else 1
    ray = g + (last,) * max(0, depth - len(g))
    return Cylinder(ray[:depth])


def shadow(g: WordLike, rho: float, m: TreeModel) -> list[Cylinder]:
    """Boundary points whose Gromov product with ``g`` is at least ``d(o, g) - rho``.

    On a tree this is a single cylinder ``C_{g[:j]}`` with ``j`` minimal; a
    radius at or beyond ``d(o, g)`` gives the whole boundary.
    """
    if rho < 0:
        raise ValueError("shadow radius must be nonnegative")
    g = as_word(g)
    threshold = m.word_length(g) - rho
    if threshold <= 1e-12:
        return [Cylinder(())]
    acc = 0.0
    for j, x in enumerate(g, start=1):
        acc += m.letter_length(x)
        if acc >= threshold - 1e-12:
            return [Cylinder(g[:j])]
    return [Cylinder(g)]


# ---------------------------------------------------------------- metric kernels

@dataclass(frozen=True)
class MetricSample:
    """Finite point set with a symmetric, zero-diagonal kernel."""

    points: tuple
    kernel: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] != len(self.points):
            raise ValueError("kernel must be square and match the number of points")
        scale = max(1.0, float(np.max(np.abs(k))) if k.size else 1.0)
        if not np.allclose(k, k.T, rtol=0.0, atol=1e-12 * scale):
            raise AsymmetricKernel("kernel is not symmetric")
        if np.any(np.abs(np.diag(k)) > 1e-12 * scale):
            raise NonzeroDiagonal("kernel has a nonzero diagonal entry")
        object.__setattr__(self, "kernel", k)

    @classmethod
    def from_points(cls, points: Iterable[WordLike], m: TreeModel) -> "MetricSample":
        pts = tuple(as_word(p) for p in points)
        k = np.array([[distance(x, y, m) for y in pts] for x in pts], dtype=float)
        return cls(pts, k.reshape(len(pts), len(pts)))

    @classmethod
    def from_csv(cls, text: str) -> "MetricSample":
        """Header row of word labels, then one row of kernel values per point.

        A leading label column in the data rows is accepted and ignored.
        """
        rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
        if not rows:
            raise ParseError("empty metric CSV")
        header = [c.strip() for c in rows[0]]
        if header and header[0] == "":
            header = header[1:]
        n = len(header)
        values = []
        for lineno, row in enumerate(rows[1:], start=2):
            cells = [c.strip() for c in row]
            if len(cells) == n + 1:
                cells = cells[1:]
            if len(cells) != n:
                raise ParseError(f"line {lineno}: expected {n} values, got {len(cells)}")
            try:
                values.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
        if len(values) != n:
            raise ParseError(f"expected {n} data rows, got {len(values)}")
        return cls(tuple(as_word(h) for h in header), np.array(values, dtype=float))


def check_conditionally_negative(sample: MetricSample, tol: float = 1e-10) -> dict:
    """Largest eigenvalue of the kernel restricted to mean-zero weight vectors."""
    n = len(sample.points)
    if n < 2:
        raise ValueError("need at least two points")
    h = helmert(n)  # orthonormal rows spanning the mean-zero subspace
    centered = h @ sample.kernel @ h.T
    top = sym_eigs(0.5 * (centered + centered.T)).max
    return {"max_centered_eigenvalue": top, "pass": bool(top <= tol)}


def check_schoenberg(sample: MetricSample, t_grid: Iterable[float],
                     tol: float = 1e-10) -> list[dict]:
    """Minimum eigenvalue of ``exp(-t k)`` for each ``t >= 0``."""
    out = []
    for t in t_grid:
        if t < 0:
            raise ValueError("t must be nonnegative")
        low = sym_eigs(np.exp(-t * sample.kernel)).min
        out.append({"t": float(t), "min_eigenvalue": low, "pass": bool(low >= -tol)})
    return out

