"""Commuting families of real symmetric matrices.

Joint spectra, kernels, principal-angle subspace intersections, and the
perturbation thresholds that control when ``Ker(A + eps*B)`` collapses
to ``Ker A ∩ Ker B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CommutationViolation,
    ConvergenceFailure,
    DimensionMismatch,
    NonPositiveEpsilon,
)

# Fixed seed for the random mixing combination inside joint_diagonalize,
# so repeated calls on the same family give bit-identical output.
_MIX_SEED = 0x5EEDED


def _entry_scale(entries: np.ndarray) -> float:
    return float(np.abs(entries).max()) if entries.size else 0.0


def _zero_tol(entries: np.ndarray) -> float:
    """Threshold below which an eigenvalue of this matrix counts as zero."""
    return 1e-12 * _entry_scale(entries)


def _canonical_sign_columns(cols: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry of each is positive."""
    out = cols.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        if col.size and col[int(np.argmax(np.abs(col)))] < 0:
            out[:, j] = -col
    return out


@dataclass(frozen=True, eq=False)
class SymMat:
    """Dense real symmetric matrix with a validated symmetry defect."""

    entries: np.ndarray
    sym_tol: float | None = None

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"expected a nonempty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        tol = self.sym_tol if self.sym_tol is not None else 1e-10 * max(1.0, _entry_scale(m))
        defect = float(np.abs(m - m.T).max())
        if defect > tol:
            raise ValueError(f"matrix is not symmetric: max asymmetry {defect:.3e} > tol {tol:.3e}")
        m = (m + m.T) / 2.0
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "sym_tol", tol)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def diag(cls, values) -> "SymMat":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def shifted(self, eps: float, other: "SymMat") -> "SymMat":
        """The symmetric matrix ``self + eps * other``."""
        if other.dim != self.dim:
            raise DimensionMismatch(f"cannot combine {self.dim}x{self.dim} with {other.dim}x{other.dim}")
        return SymMat(self.entries + eps * other.entries)


def commutator_norm(a: SymMat, b: SymMat) -> float:
    """Frobenius norm of ``AB - BA``."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")
    prod = a.entries @ b.entries
    return float(np.linalg.norm(prod - prod.T, "fro"))


def _pair_comm_tol(a: SymMat, b: SymMat) -> float:
    fro = np.linalg.norm(a.entries, "fro") * np.linalg.norm(b.entries, "fro")
    return 1e-10 * max(1.0, float(fro))


@dataclass(frozen=True, eq=False)
class CommutingFamily:
    """Tuple of symmetric matrices with pairwise commutators below tolerance."""

    members: tuple[SymMat, ...]
    comm_tol: float | None = None

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("a commuting family needs at least one member")
        dim = members[0].dim
        for mem in members[1:]:
            if mem.dim != dim:
                raise DimensionMismatch("family members must share one dimension")
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                tol = self.comm_tol if self.comm_tol is not None else _pair_comm_tol(members[i], members[j])
                nrm = commutator_norm(members[i], members[j])
                if nrm > tol:
                    raise CommutationViolation(
                        f"members {i} and {j} do not commute: |[A,B]| = {nrm:.3e} > tol {tol:.3e}"
                    )
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class JointSpectrum:
    """Shared orthonormal eigenbasis with per-member eigenvalue rows."""

    basis: np.ndarray   # (dim, dim), columns are joint eigenvectors
    levels: np.ndarray  # (members, dim), levels[k, i] pairs member k with column i

    def __post_init__(self):
        q = np.array(self.basis, dtype=float)
        e = np.array(self.levels, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"basis must be square, got {q.shape}")
        if e.ndim != 2 or e.shape[1] != q.shape[0]:
            raise ValueError(f"levels shape {e.shape} does not match basis {q.shape}")
        defect = float(np.abs(q.T @ q - np.eye(q.shape[0])).max())
        if defect > 1e-9:
            raise ValueError(f"basis is not orthonormal: defect {defect:.3e}")
        q.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "basis", q)
        object.__setattr__(self, "levels", e)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace given by an orthonormal column basis (possibly empty)."""

    ambient_dim: int
    basis: np.ndarray  # (ambient_dim, dim)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise ValueError(f"basis shape {b.shape} does not match ambient dim {self.ambient_dim}")
        if b.shape[1]:
            defect = float(np.abs(b.T @ b - np.eye(b.shape[1])).max())
            if defect > 1e-9:
                raise ValueError(f"basis is not orthonormal: defect {defect:.3e}")
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        if self.dim == 0:
            return np.zeros((self.ambient_dim, self.ambient_dim))
        return self.basis @ self.basis.T

    @classmethod
    def empty(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, np.zeros((ambient_dim, 0)))

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, np.eye(ambient_dim))

    @classmethod
    def from_span(cls, vectors, ambient_dim: int | None = None, tol: float = 1e-10) -> "Subspace":
        """Orthonormalize a (possibly dependent) spanning set."""
        arr = np.atleast_2d(np.asarray(vectors, dtype=float))
        amb = ambient_dim if ambient_dim is not None else arr.shape[1]
        if arr.size == 0:
            return cls.empty(amb)
        u, s, _ = np.linalg.svd(arr.T, full_matrices=False)
        rank = int(np.count_nonzero(s > tol * max(1.0, s[0] if s.size else 0.0)))
        return cls(amb, _canonical_sign_columns(u[:, :rank]))


def _eig_clusters(eigvals: np.ndarray, tol: float) -> list[list[int]]:
    """Split an ascending eigenvalue list at gaps larger than tol."""
    groups: list[list[int]] = [[0]]
    for i in range(1, eigvals.size):
        if eigvals[i] - eigvals[groups[-1][-1]] > tol:
            groups.append([i])
        else:
            groups[-1].append(i)
    return groups


def _refine(mats: list[np.ndarray], basis: np.ndarray) -> np.ndarray:
    """Recursively split ``basis`` into joint eigenspaces of ``mats``."""
    if basis.shape[1] <= 1 or not mats:
        return basis
    a = basis.T @ mats[0] @ basis
    a = (a + a.T) / 2.0
    w, v = np.linalg.eigh(a)
    ctol = 1e-8 * max(1.0, float(np.abs(w).max()) if w.size else 0.0)
    cols = []
    for idx in _eig_clusters(w, ctol):
        block = basis @ v[:, idx]
        cols.append(block if len(idx) == 1 else _refine(mats[1:], block))
    return np.hstack(cols)


def joint_diagonalize(fam: CommutingFamily, tol: float = 1e-10) -> JointSpectrum:
    """Shared eigenbasis of a commuting family, certified by reconstruction.

    Eigendecomposes a random unit-coefficient combination of the family,
    then refines any repeated-eigenvalue block by recursing on the
    remaining members restricted to that block.  Columns are ordered by
    their eigenvalue tuple, lexicographically descending, which makes the
    output deterministic.  Raises ConvergenceFailure when some member is
    not reconstructed within ``tol`` (relative to its Frobenius norm).
    """
    arrays = [m.entries for m in fam.members]
    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            tol_ij = fam.comm_tol if fam.comm_tol is not None else _pair_comm_tol(fam.members[i], fam.members[j])
            if commutator_norm(fam.members[i], fam.members[j]) > tol_ij:
                raise CommutationViolation(f"members {i} and {j} do not commute")
    n = fam.dim
    rng = np.random.default_rng(_MIX_SEED)
    coeffs = rng.standard_normal(len(arrays))
    coeffs /= np.linalg.norm(coeffs)
    mix = sum(c * a for c, a in zip(coeffs, arrays))
    q = _refine([mix, *arrays], np.eye(n))
    levels = np.vstack([np.diag(q.T @ a @ q) for a in arrays])
    # descending lexicographic order on eigenvalue tuples (first member primary)
    order = np.lexsort(np.flipud(levels))[::-1]
    q = _canonical_sign_columns(q[:, order])
    levels = levels[:, order]
    for k, a in enumerate(arrays):
        recon = (q * levels[k]) @ q.T
        residual = float(np.linalg.norm(a - recon, "fro"))
        if residual > tol * max(1.0, float(np.linalg.norm(a, "fro"))):
            raise ConvergenceFailure(
                f"member {k} not reconstructed: residual {residual:.3e} exceeds tol"
            )
    return JointSpectrum(basis=q, levels=levels)


def kernel(a: SymMat, tol: float | None = None) -> Subspace:
    """Orthonormal basis of the eigenspace with |eigenvalue| <= tol."""
    if tol is None:
        tol = _zero_tol(a.entries)
    w, v = np.linalg.eigh(a.entries)
    cols = v[:, np.abs(w) <= tol]
    return Subspace(a.dim, _canonical_sign_columns(cols))


def subspace_intersection(u: Subspace, v: Subspace, tol: float = 1e-9) -> Subspace:
    """Intersection computed from principal angles (singular values of U^T V)."""
    if u.ambient_dim != v.ambient_dim:
        raise DimensionMismatch(f"ambient dims differ: {u.ambient_dim} vs {v.ambient_dim}")
    if u.dim == 0 or v.dim == 0:
        return Subspace.empty(u.ambient_dim)
    w, s, _ = np.linalg.svd(u.basis.T @ v.basis)
    count = int(np.count_nonzero(s >= 1.0 - tol))
    if count == 0:
        return Subspace.empty(u.ambient_dim)
    cols = u.basis @ w[:, :count]
    q, _ = np.linalg.qr(cols)
    return Subspace(u.ambient_dim, _canonical_sign_columns(q))


def _check_pair(alpha: SymMat, beta: SymMat, comm_tol: float | None) -> None:
    tol = comm_tol if comm_tol is not None else _pair_comm_tol(alpha, beta)
    nrm = commutator_norm(alpha, beta)
    if nrm > tol:
        raise CommutationViolation(f"operators do not commute: |[A,B]| = {nrm:.3e} > tol {tol:.3e}")


def _pair_levels(alpha: SymMat, beta: SymMat, comm_tol: float | None) -> tuple[np.ndarray, np.ndarray]:
    _check_pair(alpha, beta, comm_tol)
    spectrum = joint_diagonalize(CommutingFamily((alpha, beta), comm_tol=comm_tol))
    return spectrum.levels[0], spectrum.levels[1]


def delta_threshold(alpha: SymMat, beta: SymMat, tol: float | None = None,
                    comm_tol: float | None = None) -> float:
    """Largest safe step size for perturbing ``alpha`` by ``beta``.

    With joint eigenvalue pairs (a_i, b_i), the threshold is
    ``min |a_i| / |b_i|`` over indices where both are nonzero (above
    ``tol``), and +infinity when no index has both nonzero.  For every
    0 < eps < threshold, ``Ker(alpha + eps*beta) = Ker alpha ∩ Ker beta``.
    """
    delta, _ = delta_threshold_witness(alpha, beta, tol=tol, comm_tol=comm_tol)
    return delta


def delta_threshold_witness(alpha: SymMat, beta: SymMat, tol: float | None = None,
                            comm_tol: float | None = None) -> tuple[float, list[tuple[float, float]]]:
    """Threshold plus the joint eigenvalue pairs (a_i, b_i) attaining it."""
    a, b = _pair_levels(alpha, beta, comm_tol)
    tol_a = tol if tol is not None else _zero_tol(alpha.entries)
    tol_b = tol if tol is not None else _zero_tol(beta.entries)
    mask = (np.abs(a) > tol_a) & (np.abs(b) > tol_b)
    if not mask.any():
        return math.inf, []
    ratios = np.abs(a[mask]) / np.abs(b[mask])
    delta = float(ratios.min())
    at_min = ratios <= delta * (1.0 + 1e-9)
    pairs = [(float(x), float(y)) for x, y in zip(a[mask][at_min], b[mask][at_min])]
    return delta, pairs


@dataclass(frozen=True)
class KernelEqualityReport:
    """Outcome of one perturbed-kernel comparison.

    ``dims`` lists (dim Ker(alpha + eps*beta), dim Ker alpha ∩ Ker beta,
    dim of the overlap of those two); equality of all three is what
    ``holds`` certifies, via the distance between orthogonal projectors.
    """

    holds: bool
    dims: tuple[int, int, int]
    projector_distance: float


def perturbed_kernel_equality(alpha: SymMat, beta: SymMat, eps: float,
                              tol: float = 1e-8, kernel_tol: float | None = None,
                              comm_tol: float | None = None) -> KernelEqualityReport:
    """Check ``Ker(alpha + eps*beta) == Ker alpha ∩ Ker beta`` at one eps."""
    if not eps > 0:
        raise NonPositiveEpsilon(f"eps must be strictly positive, got {eps}")
    _check_pair(alpha, beta, comm_tol)
    shifted = alpha.shifted(eps, beta)
    # The shifted matrix can be numerically zero (exact cancellation at the
    # threshold step size), so its own entry scale is useless as a zero
    # threshold; floor it by the scale of the inputs instead.
    shift_tol = kernel_tol
    if shift_tol is None:
        shift_tol = 1e-12 * max(_entry_scale(alpha.entries),
                                eps * _entry_scale(beta.entries))
    k_pert = kernel(shifted, tol=shift_tol)
    k_int = subspace_intersection(kernel(alpha, tol=kernel_tol), kernel(beta, tol=kernel_tol))
    overlap = subspace_intersection(k_pert, k_int)
    dist = float(np.linalg.norm(k_pert.projector() - k_int.projector(), 2))
    holds = dist <= tol
    return KernelEqualityReport(holds=holds, dims=(k_pert.dim, k_int.dim, overlap.dim),
                                projector_distance=dist)


def chain_threshold(fam: CommutingFamily, tol: float | None = None) -> float:
    """Uniform box radius for perturbing member 0 by all later members.

    Returns a delta such that for every choice of step sizes
    eps_2, ..., eps_n in (0, delta), the kernel of
    ``members[0] + sum_k eps_k * members[k]`` equals the joint kernel of
    the whole family.  Per joint eigenvector with level column l, the
    leading nonzero slot L yields the conservative bound
    ``|l[L]| / sum_{k>L} |l[k]|`` when L is the first member; later-slot
    columns constrain nothing when their tail shares one sign, and admit
    no uniform box at all when tail signs are mixed (cancellation occurs
    at matched step sizes), in which case 0.0 is returned.  Families of
    one member return +infinity.
    """
    if len(fam) == 1:
        return math.inf
    spectrum = joint_diagonalize(fam)
    tols = [tol if tol is not None else _zero_tol(m.entries) for m in fam.members]
    best = math.inf
    for col in spectrum.levels.T:
        sig = np.abs(col) > np.asarray(tols)
        if not sig.any():
            continue
        lead = int(np.argmax(sig))
        tail = [k for k in range(lead + 1, col.size) if sig[k]]
        if not tail:
            continue
        if lead == 0:
            best = min(best, float(abs(col[0]) / np.sum(np.abs(col[tail]))))
        elif any(np.sign(col[k]) != np.sign(col[lead]) for k in tail):
            return 0.0
        # same-signed tails with positive step sizes can never cancel: no constraint
    return best


def random_commuting_family(rng: np.random.Generator, dim: int, members: int = 2,
                            level_range: int = 5, zero_prob: float = 0.3) -> CommutingFamily:
    """Commuting family built as Q·diag(levels)·Q^T with one shared random Q.

    Levels are integers in [-level_range, level_range], zeroed with the
    given probability, so commutation holds by construction.
    """
    g = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    mats = []
    for _ in range(members):
        levels = rng.integers(-level_range, level_range + 1, size=dim).astype(float)
        levels[rng.random(dim) < zero_prob] = 0.0
        a = (q * levels) @ q.T
        mats.append(SymMat((a + a.T) / 2.0))
    return CommutingFamily(tuple(mats))
