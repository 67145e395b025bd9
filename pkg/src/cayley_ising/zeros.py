"""Enumeration of Lee-Yang zeros for finite Cayley trees.

A field angle phi is a zero of the level-n tree iff the n-fold composed
lift of phi lands on pi mod 2pi.  The composed lift G is strictly
increasing in phi with dG/dphi >= 1 and winds exactly |V| times around the
circle as phi sweeps one period, so each zero is the unique solution of
G(phi) = pi + 2pi*m for one branch index m and can be bracketed by
bisection and polished by Newton.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import TAU, _lift, _lift_derivative, _validate_t

# zeros whose lift lands within this angle below pi are counted as being at
# the branch seam (the set lives on (-pi, pi], so seam hits belong to +pi)
SEAM_GUARD = 1e-9

_CHUNK = 1 << 17


@dataclass(frozen=True)
class TreeSpec:
    """Rooted or full Cayley tree of a given level and branching number."""

    variant: str
    level: int
    k: int

    def __post_init__(self):
        if self.variant not in ("rooted", "full"):
            raise ValueError(f"variant must be 'rooted' or 'full', got {self.variant!r}")
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"branching number k must be an integer >= 2, got {self.k}")
        if self.level < 0:
            raise ValueError("level must be >= 0")
        if self.variant == "full" and self.level < 1:
            raise ValueError("the full tree requires level >= 1")

    @property
    def vertex_count(self) -> int:
        k, n = self.k, self.level
        rooted = (k ** (n + 1) - 1) // (k - 1)
        if self.variant == "rooted":
            return rooted
        # center joined to k+1 rooted subtrees of level n-1
        return 1 + (k + 1) * ((k**n - 1) // (k - 1))

    @property
    def edge_count(self) -> int:
        return self.vertex_count - 1

    def edges(self):
        """Edge list (parent, child) with vertices numbered 0..|V|-1, BFS order."""
        out = []
        next_id = 1
        if self.variant == "rooted":
            queue = [(0, self.level)]
        else:
            queue = []
            for _ in range(self.k + 1):
                out.append((0, next_id))
                queue.append((next_id, self.level - 1))
                next_id += 1
        while queue:
            node, depth = queue.pop(0)
            if depth == 0:
                continue
            for _ in range(self.k):
                out.append((node, next_id))
                queue.append((next_id, depth - 1))
                next_id += 1
        return out


def zero_count(tree: TreeSpec) -> int:
    """Number of Lee-Yang zeros = number of vertices."""
    return tree.vertex_count


def _wrap_angle(theta):
    """Reduce into (-pi, pi]."""
    psi = np.remainder(theta + math.pi, TAU) - math.pi
    return np.where(psi == -math.pi, math.pi, psi)


def iterated_lift(phi, tree: TreeSpec, t: float, derivative: bool = False):
    """Composed lift G(phi) in split form (psi, winding[, dG/dphi]).

    G(phi) = psi + 2pi*winding with psi in (-pi, pi].  The winding number is
    tracked as an exact float integer (|winding| < 2^53 for desk-scale
    trees), so the reduced angle psi keeps full precision even when G is of
    order 2pi*|V|; sin/cos are only ever evaluated on reduced angles.
    """
    _validate_t(t)
    phi = np.asarray(phi, dtype=float)
    psi = _wrap_angle(phi)
    wind = np.round((phi - psi) / TAU)
    deriv = np.ones_like(psi)

    steps = [tree.k] * tree.level
    if tree.variant == "full":
        steps = [tree.k] * (tree.level - 1) + [tree.k + 1]
    for k_step in steps:
        if derivative:
            deriv = _lift_derivative(psi, t, k_step) * deriv + 1.0
        raw = _lift(psi, phi, t, k_step)
        new_psi = _wrap_angle(raw)
        wind = k_step * wind + np.round((raw - new_psi) / TAU)
        psi = new_psi
    if derivative:
        return psi, wind, deriv
    return psi, wind


def branch_count(phi, tree: TreeSpec, t: float):
    """Integer C(phi) counting lift branches at or below phi; the exact zero
    count on (a, b] is C(b) - C(a)."""
    psi, wind = iterated_lift(phi, tree, t)
    return (wind + (psi >= math.pi - SEAM_GUARD)).astype(np.int64)


@dataclass(frozen=True)
class ZeroSet:
    """Sorted zero angles in (-pi, pi] for one (tree, t), with solver residuals."""

    tree: TreeSpec
    t: float
    angles: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.angles)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("index,angle_radians,residual\n")
            for i, (a, r) in enumerate(zip(self.angles, self.residuals)):
                fh.write(f"{i},{a:.17g},{r:.17g}\n")


def _solve_branches(targets: np.ndarray, tree: TreeSpec, t: float, tol: float):
    """Solve G(phi) = pi + 2pi*m for a vector of branch indices m."""
    lo = np.full(targets.shape, -math.pi)
    hi = np.full(targets.shape, math.pi)
    # bisection on the integer branch predicate: C(mid) > m  <=>  G(mid) >= target
    for _ in range(54):
        mid = 0.5 * (lo + hi)
        above = branch_count(mid, tree, t) > targets
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    phi = hi
    # Newton polish on the full-precision residual G(phi) - (pi + 2pi*m);
    # near the solution winding - m is O(1), so the residual is well conditioned
    for _ in range(2):
        psi, wind, deriv = iterated_lift(phi, tree, t, derivative=True)
        res = (psi - math.pi) + TAU * (wind - targets)
        step = res / deriv
        phi = np.clip(phi - step, lo - 1e-9, hi + 1e-9)
    psi, wind, deriv = iterated_lift(phi, tree, t, derivative=True)
    res = np.abs((psi - math.pi) + TAU * (wind - targets))
    bad = res > tol * deriv
    if np.any(bad):
        raise RuntimeError(
            f"{int(bad.sum())} branch solves exceeded the residual tolerance "
            "(monotone bracketing should make this impossible)"
        )
    phi = np.where(phi <= -math.pi, phi + TAU, phi)
    return phi, res


def enumerate_zeros(
    tree: TreeSpec, t: float, tol: float = 1e-10, workers: int | None = None
) -> ZeroSet:
    """All Lee-Yang zeros of the tree at temperature t, by branch solves.

    Parameters
    ----------
    tree, t : tree specification and temperature variable in [0, 1).
    tol : angular residual tolerance; each returned angle satisfies
        |G(phi) - pi - 2pi m| <= tol * G'(phi).
    workers : number of threads for the chunked branch solves (branch
        chunks are independent; output order is canonical regardless).
    """
    _validate_t(t)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_zeros = zero_count(tree)
    base = int(branch_count(np.array(-math.pi), tree, t))
    targets = base + np.arange(n_zeros, dtype=float)

    chunks = [targets[i : i + _CHUNK] for i in range(0, n_zeros, _CHUNK)]
    if workers and workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _solve_branches(c, tree, t, tol), chunks))
    else:
        parts = [_solve_branches(c, tree, t, tol) for c in chunks]
    angles = np.concatenate([p[0] for p in parts])
    residuals = np.concatenate([p[1] for p in parts])

    order = np.argsort(angles, kind="stable")
    return ZeroSet(tree, t, angles[order], residuals[order])


def min_positive_zero(zs: ZeroSet) -> float:
    """Smallest strictly positive zero angle."""
    positive = zs.angles[zs.angles > 0.0]
    if positive.size == 0:
        raise ValueError("zero set has no strictly positive angle")
    return float(positive.min())
