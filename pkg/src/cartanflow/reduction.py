"""Moment map, angular momentum, the radial bracket operator and slice densities.

The commutator [X2, X1] of two Hermitian p elements is anti-Hermitian and
is the conserved quantity generating the K symmetry.  On slice
coordinates it restricts to l(q, p, r) = [r, H(q)], a linear isomorphism
from a-perp onto the orthocomplement of the centralizer algebra inside k
whenever q avoids the chamber walls.  Its absolute determinant in
orthonormal bases is the slice density: the Jacobian that converts the
phase-space Liouville measure to dq dp dl, and simultaneously the weight
of the radial image of any K-invariant measure on p.
"""

from __future__ import annotations

from dataclasses import dataclass
from threading import Lock

import numpy as np

from .linalg import ConsistencyError, ContractViolation, commutator
from .radial import WALL_TOL, SliceCoords
from .spaces import (
    RestrictedRoot,
    SpaceDescriptor,
    check_p_membership,
    geometry,
    restricted_roots,
    wall_distance,
)

__all__ = [
    "ReducedState",
    "AqOperator",
    "moment_map",
    "l_from_slice",
    "r_from_l",
    "a_q_matrix",
    "jacobian_density",
    "closed_form_density",
    "density_constant",
    "random_chamber_point",
]


@dataclass(frozen=True)
class ReducedState:
    """Reduced phase point: radial position q, radial momentum p and
    angular-momentum matrix l in the orthocomplement of the centralizer
    algebra inside k."""

    q: np.ndarray
    p: np.ndarray
    l: np.ndarray


@dataclass(frozen=True)
class AqOperator:
    """Matrix of ad(H(e)) o ad(H(q)) on the centralizer orthocomplement,
    in the fixed orthonormal basis.  Symmetric; its eigenvalues are the
    products alpha(e) * alpha(q) over positive roots with multiplicity."""

    matrix: np.ndarray
    q: np.ndarray
    e: np.ndarray


def moment_map(d: SpaceDescriptor, X1, X2) -> np.ndarray:
    """[X2, X1] for X1, X2 in p; the result lies in k."""
    X1, X2 = np.asarray(X1, dtype=complex), np.asarray(X2, dtype=complex)
    check_p_membership(d, X1)
    check_p_membership(d, X2)
    return commutator(X2, X1)


def l_from_slice(d: SpaceDescriptor, s: SliceCoords) -> np.ndarray:
    """Angular momentum l = [r, H(q)] of slice coordinates."""
    geo = geometry(d)
    return commutator(np.asarray(s.r, dtype=complex), geo.embed_radial(s.q))


def r_from_l(d: SpaceDescriptor, q, l) -> np.ndarray:
    """Invert r -> [r, H(q)] at a chamber-interior point.

    Raises for q on or near a wall, where the map is singular.
    """
    geo = geometry(d)
    q = np.asarray(q, dtype=float)
    if wall_distance(d, q) <= WALL_TOL:
        raise ContractViolation(
            "q lies on or near a chamber wall: the bracket map is singular there"
        )
    lc = geo.zk_coords(np.asarray(l, dtype=complex))
    rc = np.linalg.solve(geo.t_matrix(q), lc)
    return geo.aperp_from_coords(rc)


def a_q_matrix(d: SpaceDescriptor, q) -> AqOperator:
    """The operator ad(H(e)) o ad(H(q)) on the centralizer orthocomplement,
    with e the fixed generic chamber point (rank, rank-1, ..., 1)."""
    geo = geometry(d)
    q = np.asarray(q, dtype=float)
    A = geo.t_matrix(geo.e_coords) @ geo.t_matrix(q).T
    return AqOperator(matrix=A, q=q.copy(), e=geo.e_coords.copy())


def jacobian_density(d: SpaceDescriptor, q) -> float:
    """|det| of r -> [r, H(q)] between orthonormal bases of a-perp and the
    centralizer orthocomplement.  Vanishes exactly on the chamber walls."""
    geo = geometry(d)
    T = geo.t_matrix(np.asarray(q, dtype=float))
    if T.shape[0] == 0:
        return 1.0
    return float(abs(np.linalg.det(T)))


def _root_product(roots: list[RestrictedRoot], q: np.ndarray) -> float:
    out = 1.0
    for r in roots:
        out *= abs(r.value(q)) ** r.multiplicity
    return out


def closed_form_density(
    d: SpaceDescriptor, q, roots: list[RestrictedRoot] | None = None
) -> float:
    """Closed-form slice density.

    For su(m,n) and so(m,n) this is the classical expression
    prod q_i^(2(m-n)+1) * prod (q_i^2-q_j^2)^2   and
    |prod q_i^(m-n) * prod (q_i^2-q_j^2)|; for the remaining classes the
    density is the root product prod |alpha(q)|^mult(alpha).  ``roots``
    overrides the multiplicity table (used by consistency checks).
    """
    q = np.asarray(q, dtype=float)
    if roots is not None:
        return _root_product(roots, q)
    if d.kind == "aiii":
        out = float(np.prod(np.abs(q) ** (2 * (d.m - d.n) + 1)))
        for i in range(d.n):
            for j in range(i + 1, d.n):
                out *= (q[i] ** 2 - q[j] ** 2) ** 2
        return abs(out)
    if d.kind == "bdi":
        out = float(np.prod(np.abs(q) ** (d.m - d.n)))
        for i in range(d.n):
            for j in range(i + 1, d.n):
                out *= abs(q[i] ** 2 - q[j] ** 2)
        return abs(out)
    return _root_product(restricted_roots(d), q)


def random_chamber_point(
    d: SpaceDescriptor, rng: np.random.Generator, min_wall: float = 1e-3
) -> np.ndarray:
    """A generic chamber-interior point, resampled away from the walls."""
    rank = d.real_rank
    for _ in range(200):
        if d.trace_constrained:
            lam = np.sort(rng.standard_normal(rank + 1))[::-1]
            q = (lam - np.mean(lam))[:rank]
        else:
            q = np.sort(np.abs(rng.standard_normal(rank)))[::-1]
            if d.kind == "bdi" and d.m == d.n and rng.random() < 0.5:
                q[-1] = -q[-1]
        if wall_distance(d, q) > min_wall:
            return q
    raise ConsistencyError("could not sample a chamber point away from the walls")


_DENSITY_CONSTANT_CACHE: dict[SpaceDescriptor, float] = {}
_DENSITY_LOCK = Lock()


def _ratio_spread(
    d: SpaceDescriptor,
    roots: list[RestrictedRoot] | None,
    samples: int,
    seed: int,
) -> tuple[float, float]:
    """(mean ratio, relative spread) of jacobian/closed over random points."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(samples):
        q = random_chamber_point(d, rng)
        closed = closed_form_density(d, q, roots=roots)
        if closed <= 0:
            continue
        ratios.append(jacobian_density(d, q) / closed)
    ratios = np.array(ratios)
    mean = float(np.mean(ratios))
    spread = float((np.max(ratios) - np.min(ratios)) / abs(mean))
    return mean, spread


def density_constant(
    d: SpaceDescriptor,
    samples: int = 100,
    seed: int = 715,
    rtol: float = 1e-8,
) -> float:
    """The q-independent ratio jacobian_density / closed_form_density.

    Estimated at random chamber points and required to be constant to
    ``rtol``; a non-constant ratio signals a wrong multiplicity table and
    raises ``ConsistencyError``.  Memoized per descriptor.
    """
    with _DENSITY_LOCK:
        if d in _DENSITY_CONSTANT_CACHE:
            return _DENSITY_CONSTANT_CACHE[d]
    mean, spread = _ratio_spread(d, None, samples, seed)
    if not np.isfinite(mean) or spread > rtol:
        raise ConsistencyError(
            f"{d.label()}: jacobian/closed density ratio varies by {spread:.3e} "
            f"(> {rtol:.1e}); multiplicity table inconsistent"
        )
    with _DENSITY_LOCK:
        _DENSITY_CONSTANT_CACHE[d] = mean
    return mean
