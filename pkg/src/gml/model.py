"""Weighted torus actions on real projective space.

A model is a list of integer weight vectors ``lambda_0..lambda_n`` in
R^m together with a subalgebra of acting directions.  A direction
``beta`` scales homogeneous coordinate ``i`` with speed
``<lambda_i, beta>``; everything else (gradient images, flows, flow
limits, fixed components, stabilizers, moment polytopes) follows from
the combinatorics of those speeds, so the closed-form operations here
are exact up to floating-point dots of small integers.

Metric convention: the Riemannian metric on the model is fixed as twice
the round sphere metric on unit representatives.  With that
normalization the gradient of ``x -> <mu(x), beta>`` is exactly the
infinitesimal action field ``beta_X(x) = Bx - <x, Bx> x`` with
``B = diag(<lambda_i, beta>)`` and no extra factor of 1/2, and
``mu(e_i)`` equals the projected weight of coordinate ``i``.  The
finite-difference checks in :mod:`gml.numerics` divide their
round-metric estimates by 2 accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    BetaOutsideSubalgebra,
    DependentBasis,
    ExhaustedRetries,
    NonPositiveEpsilon,
)
from .hull import Polytope
from .rng import substream, unit_vector
from .spectral import Subspace, _canonical_sign_columns

SUPP_TOL = 1e-13


def _level_tol(values: np.ndarray) -> float:
    return 1e-12 * max(1.0, float(np.abs(values).max()) if values.size else 0.0)


class ProjPoint:
    """Point of RP^n as a sign-canonical unit coordinate vector.

    Coordinates below ``supp_tol`` are zeroed on ingest, so ``support``
    is exactly the set of nonzero coordinates, and the first supported
    coordinate is made positive to pick one representative of {x, -x}.
    """

    __slots__ = ("coords", "support")

    def __init__(self, vec, supp_tol: float = SUPP_TOL):
        x = np.array(vec, dtype=float).ravel()
        if x.size < 2:
            raise ValueError("a projective point needs at least two homogeneous coordinates")
        nrm = float(np.linalg.norm(x))
        if not np.isfinite(nrm) or nrm == 0.0:
            raise ValueError("cannot normalize a zero or non-finite vector")
        x = x / nrm
        x[np.abs(x) <= supp_tol] = 0.0
        nrm = float(np.linalg.norm(x))
        if nrm == 0.0:
            raise ValueError("vector has no support above supp_tol")
        x = x / nrm
        supp = np.flatnonzero(x)
        if x[supp[0]] < 0:
            x = -x
        x.flags.writeable = False
        object.__setattr__(self, "coords", x)
        object.__setattr__(self, "support", tuple(int(i) for i in supp))

    def __setattr__(self, name, value):
        raise AttributeError("ProjPoint is immutable")

    @property
    def dim(self) -> int:
        return self.coords.size

    def same_as(self, other: "ProjPoint", tol: float = 1e-12) -> bool:
        """Equality as projective points: identical support, coords within tol."""
        return (self.support == other.support
                and float(np.abs(self.coords - other.coords).max()) <= tol)

    def restricted(self, indices) -> "ProjPoint":
        """Renormalized restriction of this point to an index set."""
        y = np.zeros_like(self.coords)
        idx = list(indices)
        y[idx] = self.coords[idx]
        return ProjPoint(y)

    def __repr__(self) -> str:
        return f"ProjPoint({np.array2string(self.coords, precision=6)}, support={self.support})"

    @classmethod
    def coordinate(cls, index: int, dim: int) -> "ProjPoint":
        e = np.zeros(dim)
        e[index] = 1.0
        return cls(e)


@dataclass(frozen=True)
class FixedComponent:
    """Connected fixed-point component: a coordinate subspace index set.

    ``level`` is the shared speed ``<lambda_i, beta>`` for a single
    direction, or the tuple of projected weight coordinates when the
    component is fixed by the whole subalgebra.
    """

    indices: tuple[int, ...]
    level: float | tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.indices) - 1


@dataclass(frozen=True, eq=False)
class WeightedModel:
    """Weight vectors plus a distinguished subalgebra of acting directions."""

    name: str
    weights: np.ndarray     # (n+1, m)
    subalgebra: np.ndarray  # (d, m) rows: a basis of the acting directions
    rank_tol: float = 1e-10

    def __post_init__(self):
        w = np.atleast_2d(np.array(self.weights, dtype=float))
        s = np.atleast_2d(np.array(self.subalgebra, dtype=float))
        if w.shape[0] < 2:
            raise ValueError("a model needs at least two homogeneous coordinates")
        if w.shape[1] < 1 or s.shape[1] != w.shape[1]:
            raise ValueError(f"weights ({w.shape}) and subalgebra ({s.shape}) disagree on torus dimension")
        if not (1 <= s.shape[0] <= s.shape[1]):
            raise ValueError(f"subalgebra must have between 1 and {s.shape[1]} basis vectors")
        svals = np.linalg.svd(s, compute_uv=False)
        if svals[-1] <= self.rank_tol * max(1.0, svals[0]):
            raise ValueError("subalgebra basis is rank deficient")
        w.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "subalgebra", s)

    @property
    def num_coords(self) -> int:
        return self.weights.shape[0]

    @property
    def torus_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def subalgebra_dim(self) -> int:
        return self.subalgebra.shape[0]

    @cached_property
    def ortho_basis(self) -> np.ndarray:
        """Orthonormalized subalgebra basis, rows spanning the same space."""
        q, r = np.linalg.qr(self.subalgebra.T)
        q = q * np.sign(np.diag(r))
        q.flags.writeable = False
        return q.T  # (d, m)

    @cached_property
    def projected_weights(self) -> np.ndarray:
        """Weights in coordinates w.r.t. the orthonormalized subalgebra basis."""
        p = self.weights @ self.ortho_basis.T
        p.flags.writeable = False
        return p  # (n+1, d)

    @cached_property
    def joint_partition(self) -> tuple[tuple[int, ...], ...]:
        """Partition of coordinates by equal projected weight vectors."""
        return _vector_partition(self.projected_weights)

    def validate_direction(self, beta) -> np.ndarray:
        """Return beta as an array after checking it lies in the subalgebra."""
        b = np.asarray(beta, dtype=float).ravel()
        if b.size != self.torus_dim:
            raise BetaOutsideSubalgebra(f"direction has length {b.size}, expected {self.torus_dim}")
        proj = self.ortho_basis.T @ (self.ortho_basis @ b)
        residual = float(np.linalg.norm(b - proj))
        if residual > 1e-9 * max(1.0, float(np.linalg.norm(b))):
            raise BetaOutsideSubalgebra(
                f"direction lies outside the subalgebra: residual {residual:.3e}")
        return b

    def levels(self, beta) -> np.ndarray:
        """Speeds <lambda_i, beta> of all homogeneous coordinates."""
        return self.weights @ self.validate_direction(beta)

    def require_basis(self, alphas=None) -> np.ndarray:
        """Validate an ordered basis of the subalgebra (default: stored rows)."""
        if alphas is None:
            return self.subalgebra
        a = np.atleast_2d(np.asarray(alphas, dtype=float))
        for row in a:
            self.validate_direction(row)
        if a.shape[0] != self.subalgebra_dim:
            raise DependentBasis(
                f"expected {self.subalgebra_dim} basis directions, got {a.shape[0]}")
        svals = np.linalg.svd(a, compute_uv=False)
        if svals[-1] <= self.rank_tol * max(1.0, svals[0]):
            raise DependentBasis("directions are linearly dependent")
        return a


def _vector_partition(rows: np.ndarray) -> tuple[tuple[int, ...], ...]:
    """Canonical partition of row indices by (near-)equal rows."""
    tol = _level_tol(rows)
    order = np.lexsort(np.flipud(rows.T))
    groups: list[list[int]] = [[int(order[0])]]
    for prev, cur in zip(order, order[1:]):
        if np.abs(rows[cur] - rows[prev]).max() > tol:
            groups.append([int(cur)])
        else:
            groups[-1].append(int(cur))
    return tuple(sorted(tuple(sorted(g)) for g in groups))


def _level_classes(values: np.ndarray, tol: float | None = None) -> list[list[int]]:
    """Indices grouped by level, ordered by level descending."""
    if tol is None:
        tol = _level_tol(values)
    order = np.argsort(-values, kind="stable")
    groups: list[list[int]] = [[int(order[0])]]
    for prev, cur in zip(order, order[1:]):
        if values[prev] - values[cur] > tol:
            groups.append([int(cur)])
        else:
            groups[-1].append(int(cur))
    return [sorted(g) for g in groups]


def gradient_map(model: WeightedModel, x: ProjPoint) -> np.ndarray:
    """Image of x under the gradient map, in orthonormalized subalgebra
    coordinates: ``mu(x) = sum_i x_i^2 * (projected weight i)``.

    Translating the output by a constant vector is occasionally useful to
    center a fixed point at the origin; that shift is a plain translation
    and not a separate operation here.
    """
    return model.projected_weights.T @ (x.coords ** 2)


def mu_along(model: WeightedModel, beta, x_coords: np.ndarray) -> float:
    """Value of <mu(x), beta> = sum_i x_i^2 <lambda_i, beta> on raw coords."""
    return float((model.weights @ np.asarray(beta, float)) @ (x_coords ** 2))


def fundamental_field(model: WeightedModel, beta, x: ProjPoint) -> np.ndarray:
    """Infinitesimal action field beta_X(x) = Bx - <x, Bx> x."""
    b = model.levels(beta)
    bx = b * x.coords
    return bx - float(x.coords @ bx) * x.coords


def flow(model: WeightedModel, beta, t: float, x: ProjPoint) -> ProjPoint:
    """Normalized linear flow exp(t*B)x, overflow-safe via max-level shift."""
    if not np.isfinite(t):
        raise ValueError("flow time must be finite")
    b = model.levels(beta)
    supp = np.array(x.support)
    shift = float((t * b[supp]).max())
    y = np.zeros_like(x.coords)
    y[supp] = x.coords[supp] * np.exp(t * b[supp] - shift)
    return ProjPoint(y)


def flow_limit(model: WeightedModel, beta, x: ProjPoint) -> ProjPoint:
    """Limit of the flow: restriction of x to the argmax-level part of
    its support (ties keep the whole argmax class)."""
    b = model.levels(beta)
    supp = np.array(x.support)
    vals = b[supp]
    keep = supp[vals >= vals.max() - _level_tol(b)]
    return x.restricted(keep)


def composed_limit(model: WeightedModel, alphas, x: ProjPoint) -> ProjPoint:
    """Flow limits applied in order along an ordered basis of the subalgebra.

    Equivalently: the restriction of x to the lexicographic argmax of the
    weight-speed tuples over its support.
    """
    a = model.require_basis(alphas)
    out = x
    for row in a:
        out = flow_limit(model, row, out)
    return out


def perturbed_limit(model: WeightedModel, alphas, eps, x: ProjPoint) -> ProjPoint:
    """Flow limit along alphas[0] + sum_k eps[k-1] * alphas[k]."""
    a = model.require_basis(alphas)
    e = np.asarray(eps, dtype=float).ravel()
    if e.size != a.shape[0] - 1:
        raise ValueError(f"expected {a.shape[0] - 1} step sizes, got {e.size}")
    if e.size and not (e > 0).all():
        raise NonPositiveEpsilon("all step sizes must be strictly positive")
    beta = a[0] + (e @ a[1:] if e.size else 0.0)
    return flow_limit(model, beta, x)


def _pair_bounds(model: WeightedModel, a: np.ndarray):
    """Per coordinate pair (i, j): bound on the uniform step-size box.

    Yields (i, j, d, bound) with d the vector of speeds of lambda_i -
    lambda_j along the basis rows; bound is +inf when the pair does not
    constrain and 0.0 when no uniform box exists for it.
    """
    n1 = model.num_coords
    diffs = []
    pairs = []
    for i in range(n1):
        for j in range(i + 1, n1):
            pairs.append((i, j))
            diffs.append(model.weights[i] - model.weights[j])
    d_all = np.asarray(diffs) @ a.T  # (P, k)
    tol = _level_tol(d_all)
    for (i, j), d in zip(pairs, d_all):
        sig = np.abs(d) > tol
        if not sig.any():
            continue
        lead = int(np.argmax(sig))
        tail = [k for k in range(lead + 1, d.size) if sig[k]]
        if not tail:
            yield i, j, d, math.inf
        elif lead == 0:
            yield i, j, d, float(abs(d[0]) / np.sum(np.abs(d[tail])))
        elif any(np.sign(d[k]) != np.sign(d[lead]) for k in tail):
            yield i, j, d, 0.0
        else:
            yield i, j, d, math.inf  # same-signed tail never flips the sign


def model_chain_threshold(model: WeightedModel, alphas=None) -> float:
    """Largest uniform box radius delta for the ordered basis ``alphas``.

    For all step sizes eps_2..eps_k in (0, delta), the sign of
    ``d · (1, eps_2, ..., eps_k)`` matches the lexicographic sign of d
    for every weight-difference speed vector d, so the perturbed limit
    along ``alphas[0] + sum eps_k alphas[k]`` equals the composed limit.
    Conservative per-pair bound ``|d_lead| / sum of later |d_k|`` at a
    leading first slot; +infinity when no pair constrains; 0.0 when some
    pair admits no uniform box (its leading slot is a later basis vector
    and the entries after it carry mixed signs, so cancellation happens
    at matched step sizes and only nested step choices work).
    """
    a = model.require_basis(alphas)
    if a.shape[0] == 1:
        return math.inf
    best = math.inf
    for _, _, _, bound in _pair_bounds(model, a):
        if bound == 0.0:
            return 0.0
        best = min(best, bound)
    return best


def model_chain_threshold_witness(model: WeightedModel, alphas=None):
    """Threshold plus the binding pairs usable for tie probes.

    Returns ``(delta, pairs)`` where each pair (i, j) attains the finite
    threshold with every significant later entry opposing the leading
    sign, so setting every step size exactly to delta produces an exact
    speed tie between coordinates i and j.
    """
    a = model.require_basis(alphas)
    if a.shape[0] == 1:
        return math.inf, []
    bounds = list(_pair_bounds(model, a))
    if any(b == 0.0 for *_, b in bounds):
        return 0.0, []
    finite = [b for *_, b in bounds if math.isfinite(b)]
    if not finite:
        return math.inf, []
    delta = min(finite)
    probes = []
    tol = 1e-9
    for i, j, d, bound in bounds:
        if not math.isfinite(bound) or bound > delta * (1 + tol):
            continue
        sig = np.abs(d) > _level_tol(d)
        lead = int(np.argmax(sig))
        tail = [k for k in range(lead + 1, d.size) if sig[k]]
        if tail and all(np.sign(d[k]) == -np.sign(d[lead]) for k in tail):
            probes.append((i, j))
    return delta, probes


def fixed_components(model: WeightedModel, beta) -> list[FixedComponent]:
    """Fixed components of one direction: coordinate classes of equal speed,
    ordered by speed descending."""
    b = model.levels(beta)
    return [FixedComponent(indices=tuple(g), level=float(b[g[0]]))
            for g in _level_classes(b)]


def fixed_set_subalgebra(model: WeightedModel) -> list[FixedComponent]:
    """Joint fixed components of the whole subalgebra, each carrying its
    gradient-map value, ordered lexicographically descending."""
    comps = [FixedComponent(indices=g, level=tuple(float(v) for v in model.projected_weights[g[0]]))
             for g in model.joint_partition]
    return sorted(comps, key=lambda c: c.level, reverse=True)


def stabilizer_algebra(model: WeightedModel, x: ProjPoint) -> Subspace:
    """Directions (in orthonormalized subalgebra coordinates) whose flow
    fixes x: the null space of the support's projected weight differences."""
    d = model.subalgebra_dim
    supp = list(x.support)
    if len(supp) == 1:
        return Subspace.full(d)
    rows = model.projected_weights[supp[1:]] - model.projected_weights[supp[0]]
    _, svals, vt = np.linalg.svd(rows)
    scale = max(1.0, float(svals[0]) if svals.size else 0.0)
    rank = int(np.count_nonzero(svals > 1e-10 * scale))
    basis = vt[rank:].T  # (d, d-rank)
    return Subspace(d, _canonical_sign_columns(basis))


def direction_certificate(model: WeightedModel, beta) -> bool:
    """True iff the speed partition of beta equals the joint partition,
    i.e. beta separates exactly what the whole subalgebra separates."""
    b = model.levels(beta)
    classes = _level_classes(b)
    return tuple(sorted(tuple(g) for g in classes)) == model.joint_partition


def generic_direction(model: WeightedModel, seed: int, max_retries: int = 64):
    """Random unit direction in the subalgebra whose flow has the joint
    fixed set; retries up to ``max_retries`` draws, then gives up."""
    rng = substream(seed, 0)
    for _ in range(max_retries):
        u = unit_vector(rng, model.subalgebra_dim)
        beta = model.ortho_basis.T @ u
        if direction_certificate(model, beta):
            return beta, True
    raise ExhaustedRetries(f"no certified direction found in {max_retries} draws")


def deterministic_generic_direction(model: WeightedModel, alphas=None):
    """Deterministic certified direction: alphas[0] + sum eps*alphas[k]
    with every step size set to half the uniform box radius (1.0 when the
    box is unbounded)."""
    a = model.require_basis(alphas)
    delta = model_chain_threshold(model, a)
    if delta == 0.0:
        raise ExhaustedRetries("model admits no uniform step-size box for this basis")
    step = 1.0 if math.isinf(delta) else delta / 2.0
    beta = a[0] + step * a[1:].sum(axis=0) if a.shape[0] > 1 else a[0].copy()
    return beta, direction_certificate(model, beta)


def unstable_component(model: WeightedModel, beta, x: ProjPoint) -> FixedComponent:
    """The fixed component that the flow from x converges into."""
    target = flow_limit(model, beta, x).support[0]
    for comp in fixed_components(model, beta):
        if target in comp.indices:
            return comp
    raise RuntimeError("unreachable: every coordinate lies in some component")


def moment_polytope(model: WeightedModel) -> Polytope:
    """Convex hull of the projected weights."""
    return Polytope(model.projected_weights)


def moment_polytope_check(model: WeightedModel, sample_count: int, seed: int,
                          hull_tol: float = 1e-9) -> tuple[Polytope, bool]:
    """Sampled containment plus exact vertex attainment.

    Checks that gradient-map images of random points lie in the hull of
    the projected weights, and that each hull vertex is attained exactly
    by the corresponding coordinate point.
    """
    poly = moment_polytope(model)
    rng = substream(seed, 0)
    holds = True
    for _ in range(sample_count):
        x = ProjPoint(rng.standard_normal(model.num_coords))
        if not poly.contains(gradient_map(model, x), tol=hull_tol):
            holds = False
    for v in poly.vertices:
        dists = np.abs(model.projected_weights - v).max(axis=1)
        i = int(np.argmin(dists))
        e_i = ProjPoint.coordinate(i, model.num_coords)
        if float(np.abs(gradient_map(model, e_i) - v).max()) > 1e-12:
            holds = False
    return poly, holds


def orbit_hull_check(model: WeightedModel, x: ProjPoint, sample_count: int, seed: int,
                     hull_tol: float = 1e-9) -> bool:
    """Orbit-closure image test for the hull of the support's weights.

    (a) gradient-map images of flowed points stay in the relative
    interior of the predicted hull for sampled directions, and (b) flow
    limits along supporting and sampled integer directions attain every
    vertex of the predicted hull.
    """
    supp = list(x.support)
    pts = model.projected_weights[supp]
    poly = Polytope(pts)
    rng = substream(seed, 0)
    d = model.subalgebra_dim
    # (a) interior: moderate |beta| keeps images resolvably off the boundary
    for _ in range(sample_count):
        u = unit_vector(rng, d) * rng.uniform(0.0, 0.75)
        beta = model.ortho_basis.T @ u
        y = flow(model, beta, 1.0, x)
        if not poly.strictly_inside(gradient_map(model, y), tol=hull_tol):
            return False
    # (b) vertex attainment along supporting directions, with perturbed retries
    centroid = poly.vertices.mean(axis=0)
    for vi, v in enumerate(poly.vertices):
        attained = False
        candidates = [poly.supporting_direction(vi), v - centroid]
        candidates += [poly.supporting_direction(vi) + 1e-3 * unit_vector(rng, d) for _ in range(8)]
        for u in candidates:
            if float(np.linalg.norm(u)) < 1e-12:
                u = np.ones(d)  # 0-dimensional hull: any direction works
            beta = model.ortho_basis.T @ u
            lim = flow_limit(model, beta, x)
            if float(np.abs(gradient_map(model, lim) - v).max()) <= hull_tol:
                attained = True
                break
        if not attained:
            return False
    # sampled integer directions must land inside the predicted hull
    for _ in range(sample_count):
        u = rng.integers(-9, 10, size=d).astype(float)
        if not u.any():
            continue
        beta = model.ortho_basis.T @ u
        lim = flow_limit(model, beta, x)
        if not poly.contains(gradient_map(model, lim), tol=hull_tol):
            return False
    return True


def certified_fraction(model: WeightedModel, trials: int, seed: int) -> float:
    """Fraction of random unit directions whose flow has the joint fixed set.

    Vectorized over one Philox stream keyed by (seed, 0); the campaign
    runner offers the per-trial-substream equivalent for replayable
    failure records.
    """
    rng = substream(seed, 0)
    u = rng.standard_normal((trials, model.subalgebra_dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    betas = u @ model.ortho_basis  # (trials, m)
    levels = model.weights @ betas.T  # (n+1, trials)
    tol = 1e-12 * np.maximum(1.0, np.abs(levels).max(axis=0))
    classes = model.joint_partition
    ok = np.ones(trials, dtype=bool)
    reps = [g[0] for g in classes]
    for g in classes:  # within-class speeds must agree
        for i in g[1:]:
            ok &= np.abs(levels[i] - levels[g[0]]) <= tol
    for a in range(len(reps)):  # across classes they must separate
        for b in range(a + 1, len(reps)):
            ok &= np.abs(levels[reps[a]] - levels[reps[b]]) > tol
    return float(np.count_nonzero(ok)) / trials


def random_weighted_model(rng: np.random.Generator, max_coords: int = 10,
                          max_torus: int = 4, name: str = "random") -> WeightedModel:
    """Random integer-weight model whose stored basis admits a uniform box.

    Weights are integers in [-3, 3].  Candidate (weights, basis) draws are
    rejected until every coordinate pair admits a uniform step-size box
    for the stored basis (model_chain_threshold > 0), so the composition
    identity holds on a full box rather than only for nested step sizes.
    Falls back to a 2-dimensional subalgebra, which always qualifies.
    """
    for attempt in range(300):
        m = int(rng.integers(1, max_torus + 1))
        n1 = int(rng.integers(2, max_coords + 1))
        weights = rng.integers(-3, 4, size=(n1, m)).astype(float)
        d = int(rng.integers(1, m + 1)) if attempt < 200 else min(m, 2)
        sub = rng.integers(-2, 3, size=(d, m)).astype(float)
        svals = np.linalg.svd(sub, compute_uv=False)
        if svals[-1] <= 1e-9 * max(1.0, svals[0]):
            continue
        model = WeightedModel(name=name, weights=weights, subalgebra=sub)
        if model_chain_threshold(model) > 0.0:
            return model
    raise ExhaustedRetries("could not sample a model with a uniform step-size box")
