"""Kernel energies, the intertwining form ``Q_s`` and its spectral tests.

For ``beta = 2 (1 - s) delta`` the energy of two cylinders is

    E(v, w) = integral over v x w of exp(beta <xi, eta>_o) dmu(xi) dmu(eta).

Disjoint cylinders see a constant Gromov product.  For a cylinder paired
with itself, write ``S(w) = exp(beta L(w)) mu(w)^2 sigma[last(w)]``.  Splitting
the pair space into "different child" and "same child" parts gives a linear
system for ``sigma`` over directed letters, which is solved exactly.  Nested
pairs reduce to a self energy plus one disjoint term per intermediate level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .conformal_density import Density
from .errors import DimensionCap, ParameterOutOfRange
from .linalg import Spectrum, sym_eigs
from .rep_space import (CylinderFunction, SParameter, apply_pi, rn_power)
from .tree_geometry import (Cylinder, WordLike, all_cylinders, as_word, letter_key,
                            letters)

__all__ = [
    "EnergyKernel", "energy_kernel", "pair_energy", "qs_pair", "qs_terms",
    "gram_matrix", "positivity_report", "i_s_one", "theta_eval", "xi_eval",
    "ms_form", "ds_form", "decomposition_defect", "sandwich_check", "partition_terms",
    "DEFAULT_DEPTH_CAP",
]

DEFAULT_DEPTH_CAP = 6


def _check_s(s: float) -> float:
    s = float(s)
    if 1.0 < s <= 1.0 + 1e-12:  # grid round-off
        s = 1.0
    if not 0.5 < s <= 1.0:
        raise ParameterOutOfRange(f"s={s} outside (1/2, 1]: the energy integral diverges")
    return s


@dataclass(frozen=True)
class _Features:
    keys: tuple           # directed-letter indices of the prefix
    lengths: np.ndarray   # L(prefix[:j]) for j = 0..depth
    mass: float
    self_energy: float
    tail: np.ndarray      # tail[j] = sum_{i>=j} e^{beta L(p[:i])} (mu(p[:i]) - mu(p[:i+1]))


@dataclass
class EnergyKernel:
    """Closed-form energies for one density and one real ``s`` in ``(1/2, 1]``."""

    density: Density
    s: float
    beta: float = field(init=False)
    sigma: np.ndarray = field(init=False, repr=False)
    sigma_root: float = field(init=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.s = _check_s(self.s)
        d = self.density
        m = d.model
        self.beta = 2.0 * (1.0 - self.s) * d.delta
        growth = np.exp(self.beta * m.letter_lengths)
        p = d.transition()
        a = growth[None, :] * p * p
        c = 1.0 - np.sum(p * p, axis=1)
        self.sigma = np.linalg.solve(np.eye(2 * m.rank) - a, c)
        q = d.letter_masses
        self.sigma_root = float((1.0 - q @ q) + np.sum(growth * q * q * self.sigma))

    # per-cylinder data ----------------------------------------------------------
    def features(self, c: Cylinder) -> _Features:
        f = self._cache.get(c.prefix)
        if f is not None:
            return f
        d, m, beta = self.density, self.density.model, self.beta
        p = c.prefix
        n = len(p)
        keys = np.fromiter((letter_key(x) for x in p), dtype=np.intp, count=n)
        lengths = np.zeros(n + 1)
        np.cumsum(m.letter_lengths[keys], out=lengths[1:])
        masses = np.ones(n + 1)
        masses[1:] = np.exp(-d.delta * lengths[1:]) * d.tails()[keys]
        if m.uniform:  # exact closed form; avoids exp/log round-off
            k = m.rank
            masses[1:] = (2.0 * k - 1.0) ** (1 - np.arange(1, n + 1)) / (2 * k)
        drops = np.exp(beta * lengths[:n]) * (masses[:n] - masses[1:])
        tail = np.zeros(n + 1)
        tail[:n] = np.cumsum(drops[::-1])[::-1]
        if n == 0:
            self_e = self.sigma_root
        else:
            self_e = math.exp(beta * lengths[n]) * masses[n] ** 2 * self.sigma[letter_key(p[-1])]
        f = _Features(tuple(keys.tolist()), lengths, float(masses[n]),
                      float(self_e), tail)
        self._cache[p] = f
        return f

    def self_energy(self, c: Cylinder) -> float:
        return self.features(c).self_energy

    def energy_with_whole(self, c: Cylinder) -> float:
        """``E(c, boundary)``: the nested formula with the empty prefix outside."""
        f = self.features(c)
        return f.mass * float(f.tail[0]) + f.self_energy

    def energy(self, v: Cylinder, w: Cylinder) -> float:
        """Energy of one pair of cylinders (disjoint, equal or nested)."""
        return float(self.matrix([v], [w])[0, 0])

    # vectorised assembly -------------------------------------------------------
    def _stack(self, cyls: Sequence[Cylinder], width: int):
        fs = [self.features(c) for c in cyls]
        n = len(fs)
        depth = np.array([len(f.keys) for f in fs], dtype=np.intp)
        keys = np.full((n, max(width, 1)), -1, dtype=np.intp)
        lengths = np.zeros((n, width + 1))
        tail = np.zeros((n, width + 1))
        for i, f in enumerate(fs):
            k = len(f.keys)
            keys[i, :k] = f.keys
            lengths[i, :k + 1] = f.lengths
            lengths[i, k + 1:] = f.lengths[-1]
            tail[i, :k + 1] = f.tail
        mass = np.array([f.mass for f in fs])
        self_e = np.array([f.self_energy for f in fs])
        return depth, keys, lengths, tail, mass, self_e

    def matrix(self, rows: Sequence[Cylinder], cols: Sequence[Cylinder]) -> np.ndarray:
        """Energy matrix ``E[i, j] = E(rows[i], cols[j])``."""
        if not rows or not cols:
            return np.zeros((len(rows), len(cols)))
        width = max(max(c.depth for c in rows), max(c.depth for c in cols))
        da, ka, la, ta, ma, sa = self._stack(rows, width)
        db, kb, lb, tb, mb, sb = self._stack(cols, width)
        same = (ka[:, None, :] == kb[None, :, :]) & (ka[:, None, :] >= 0)
        cp = np.cumprod(same, axis=2).sum(axis=2)
        ii = np.arange(len(rows))[:, None]
        jj = np.arange(len(cols))[None, :]
        shallow = np.minimum(da[:, None], db[None, :])
        nested = cp == shallow
        disjoint_e = np.exp(self.beta * la[ii, cp]) * ma[:, None] * mb[None, :]
        row_deeper = da[:, None] >= db[None, :]
        nested_e = np.where(row_deeper,
                            ma[:, None] * ta[ii, cp] + sa[:, None],
                            mb[None, :] * tb[jj, cp] + sb[None, :])
        return np.where(nested, nested_e, disjoint_e)


@lru_cache(maxsize=64)
def energy_kernel(d: Density, s: float) -> EnergyKernel:
    return EnergyKernel(d, float(s))


def pair_energy(v: Cylinder, w: Cylinder, s: float, d: Density) -> float:
    return energy_kernel(d, _check_s(s)).energy(v, w)


def qs_terms(phi_terms, psi_terms, s: float, d: Density) -> complex:
    """Bilinear evaluation over arbitrary (possibly overlapping) term lists."""
    if not phi_terms or not psi_terms:
        return 0j
    kern = energy_kernel(d, _check_s(s))
    if len(psi_terms) == 1 and not psi_terms[0][0].prefix:
        # pairing against a constant: one cached energy per cylinder
        whole = complex(psi_terms[0][1]).conjugate()
        return whole * sum(complex(v) * kern.energy_with_whole(c) for c, v in phi_terms)
    e = kern.matrix([c for c, _ in phi_terms], [c for c, _ in psi_terms])
    u = np.array([v for _, v in phi_terms], dtype=complex)
    w = np.array([v for _, v in psi_terms], dtype=complex)
    return complex(u @ e @ w.conj())


def qs_pair(phi: CylinderFunction, psi: CylinderFunction, s: float, d: Density) -> complex:
    """``Q_s(phi, psi) = <I_s phi, psi>`` in ``L^2(mu_o)``."""
    return qs_terms(phi.terms, psi.terms, s, d)


def gram_matrix(n: int, s: float, d: Density, cap: int = DEFAULT_DEPTH_CAP) -> np.ndarray:
    """Energies between all depth-``n`` cylinders, in lexicographic order."""
    if n > cap:
        raise DimensionCap(f"depth {n} exceeds cap {cap}")
    if n < 0:
        raise ValueError("depth must be nonnegative")
    cyls = all_cylinders(d.model.rank, n)
    g = energy_kernel(d, _check_s(s)).matrix(cyls, cyls)
    return 0.5 * (g + g.T)


def positivity_report(n: int, s_grid: Iterable[float], d: Density,
                      cap: int = DEFAULT_DEPTH_CAP) -> list[dict]:
    """Per ``s``: extreme Gram eigenvalues and the relative positivity verdict."""
    rows = []
    for s in s_grid:
        s = _check_s(s)
        g = gram_matrix(n, s, d, cap)
        spectrum = sym_eigs(g)
        dim = g.shape[0]
        floor = -1e-9 * spectrum.trace / dim
        rows.append({"s": float(s), "n": n, "dim": dim, "min_eig": spectrum.min,
                     "max_eig": spectrum.max, "trace": spectrum.trace,
                     "residual": spectrum.residual, "pass": bool(spectrum.min >= floor)})
    return rows


# ---------------------------------------------------------------- I_s applied to 1

def _bellman(d: Density, growth: np.ndarray, maximise: bool) -> np.ndarray:
    """Extreme over boundary continuations of the normalised inner integral.

    Solves ``tau[x] = ext_a (1 - P[x, a]) + growth[a] P[x, a] tau[a]`` by policy
    iteration; every policy gives a linear system, so the result is exact.
    """
    p = d.transition()
    n = p.shape[0]
    allowed = p > 0
    coef = np.where(allowed, growth[None, :] * p, 0.0)
    const = np.where(allowed, 1.0 - p, -np.inf if maximise else np.inf)
    policy = np.argmax(allowed, axis=1)
    for _ in range(100):
        b = np.zeros((n, n))
        b[np.arange(n), policy] = coef[np.arange(n), policy]
        tau = np.linalg.solve(np.eye(n) - b, const[np.arange(n), policy])
        q = const + coef * tau[None, :]
        q = np.where(allowed, q, -np.inf if maximise else np.inf)
        best = np.argmax(q, axis=1) if maximise else np.argmin(q, axis=1)
        current = q[np.arange(n), policy]
        chosen = q[np.arange(n), best]
        better = chosen > current + 1e-15 if maximise else chosen < current - 1e-15
        if not np.any(better):
            return tau
        policy = np.where(better, best, policy)
    return tau


def i_s_one(w: Cylinder | WordLike, s: float, d: Density) -> tuple[float, float]:
    """Interval containing ``I_s[1](xi)`` for every ``xi`` in ``w``."""
    s = _check_s(s)
    c = w if isinstance(w, Cylinder) else Cylinder.of(w)
    kern = energy_kernel(d, s)
    m = d.model
    growth = np.exp(kern.beta * m.letter_lengths)
    f = kern.features(c)
    head = float(f.tail[0])
    scale = math.exp(kern.beta * f.lengths[-1]) * f.mass
    out = []
    for maximise in (False, True):
        tau = _bellman(d, growth, maximise)
        if c.depth == 0:
            q = d.letter_masses
            vals = (1.0 - q) + growth * q * tau
            inner = vals.max() if maximise else vals.min()
        else:
            inner = tau[letter_key(c.prefix[-1])]
        out.append(head + scale * float(inner))
    return out[0], out[1]


# ---------------------------------------------------------------- Poisson transforms

def theta_eval(phi: CylinderFunction, g: WordLike, s, d: Density) -> complex:
    """``Theta_s[phi](g.o) = int phi (d mu_{g.o} / d mu_o)^{1 - s} dmu_o``."""
    s = SParameter.of(s)
    g = as_word(g)
    power = SParameter(1.0 - s.sigma, -s.alpha) if s.alpha else SParameter(1.0 - s.sigma)
    total = 0j
    stack = list(phi.terms)
    rank = d.model.rank
    while stack:
        c, v = stack.pop()
        p = c.prefix
        if len(p) < len(g) and g[:len(p)] == p:
            stack.extend((child, v) for child in c.children(rank))
            continue
        total += v * rn_power(d, g, c, power) * d.mass(c)
    return total


def xi_eval(phi: CylinderFunction, g: WordLike, s: float, d: Density) -> complex:
    """``Xi_s[phi](g.o)``: the Poisson transform of ``I_s phi`` at parameter ``1 - s``."""
    one = CylinderFunction.one(d.model.rank)
    return qs_pair(phi, apply_pi(s, g, one, d), s, d)


# ---------------------------------------------------------------- M_s = I_s + D_s

def partition_terms(phi: CylinderFunction) -> list[tuple[Cylinder, complex]]:
    """Terms of ``phi`` completed by zero-valued cylinders into a partition of the boundary."""
    rank = phi.rank
    if not phi.terms:
        return [(Cylinder(()), 0.0)]
    listed = {c.prefix for c in phi.cylinders}
    interior = {c.prefix[:j] for c in phi.cylinders for j in range(c.depth)}
    out = list(phi.terms)
    for p in interior:
        for x in letters(rank):
            if p and p[-1] == -x:
                continue
            q = p + (x,)
            if q not in listed and q not in interior:
                out.append((Cylinder(q), 0.0))
    out.sort(key=lambda cv: cv[0].sort_key())
    return out


def ms_form(phi: CylinderFunction, s: float, d: Density) -> float:
    """``int |phi|^2 I_s[1] dmu``."""
    kern = energy_kernel(d, _check_s(s))
    if not phi.terms:
        return 0.0
    e = kern.matrix(phi.cylinders, [Cylinder(())])[:, 0]
    c = np.abs(np.array(phi.coefficients, dtype=complex)) ** 2
    return float(c @ e)


def ds_form(phi: CylinderFunction, s: float, d: Density) -> float:
    """Half the energy-weighted sum of squared jumps of ``phi`` across a partition."""
    kern = energy_kernel(d, _check_s(s))
    terms = partition_terms(phi)
    cyls = [c for c, _ in terms]
    v = np.array([x for _, x in terms], dtype=complex)
    e = kern.matrix(cyls, cyls)
    jumps = np.abs(v[:, None] - v[None, :]) ** 2
    np.fill_diagonal(jumps, 0.0)
    return float(0.5 * np.sum(jumps * e))


def decomposition_defect(phi: CylinderFunction, s: float, d: Density) -> float:
    return abs(ms_form(phi, s, d) - qs_pair(phi, phi, s, d).real - ds_form(phi, s, d))


# ---------------------------------------------------------------- sandwich

def sandwich_check(n: int, s: float, d: Density, cap: int = DEFAULT_DEPTH_CAP) -> dict:
    """Constants comparing ``Q_s`` with the ``L^2`` norm on depth-``n`` step functions.

    ``c_upper`` bounds ``Q_s(phi) / ||phi||^2``.  ``c_lower`` bounds
    ``||G c||^2_{D^-1} / (c^T G c)`` on the range of the Gram matrix ``G``.
    That is the constant in ``G D^-1 G <= c G``.
    """
    g = gram_matrix(n, s, d, cap)
    cyls = all_cylinders(d.model.rank, n)
    mass = d.masses(cyls)
    root = 1.0 / np.sqrt(mass)
    upper: Spectrum = sym_eigs(root[:, None] * g * root[None, :])
    full = sym_eigs(g, vectors=True)
    lam = full.eigenvalues
    keep = lam > 1e-12 * max(lam.max(), 0.0)
    u = full.vectors[:, keep] * np.sqrt(lam[keep])[None, :]
    pencil = u.T @ (u / mass[:, None])
    lower = sym_eigs(0.5 * (pencil + pencil.T))
    return {"n": n, "s": float(s), "dim": g.shape[0],
            "c_upper": upper.max, "c_lower": lower.max, "rank": int(keep.sum())}
