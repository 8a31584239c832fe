"""Dense third-order tensor and factor-matrix primitives.

Conventions used throughout the package:

* a tensor of dimensions ``(I, J, K)`` is stored as a C-ordered float64
  array, so element ``(i, j, k)`` sits at flat index ``(i*J + j)*K + k``;
* factor matrices ``A (I x R)``, ``B (J x R)``, ``C (K x R)`` hold one
  rank-1 term per column;
* all functions here are pure and all types are immutable after
  construction, so everything is safe to call concurrently.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    InvalidArgumentError,
    ResourceLimitError,
)

#: Relative singular-value cutoff used for every numerical rank decision.
DEFAULT_RANK_TOL = 1e-9

#: Refuse k-rank subset enumerations larger than this.
SUBSET_GUARD = 10_000_000


def _as_float_matrix(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidArgumentError(f"{name} must be a nonempty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Tensor3:
    """Immutable dense I x J x K tensor of doubles.

    Parameters
    ----------
    data:
        Array of shape ``(I, J, K)``.  It is copied to a read-only
        C-contiguous float64 array.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 3:
            raise InvalidArgumentError("Tensor3 expects a 3-D array")
        if min(arr.shape) < 1:
            raise InvalidArgumentError(f"Tensor3 dimensions must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("Tensor3 entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_flat(cls, dims, flat):
        """Build a tensor from its flat layout (k fastest)."""
        i, j, k = (int(d) for d in dims)
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != i * j * k:
            raise InvalidArgumentError(
                f"flat data has {flat.size} entries, expected {i * j * k}"
            )
        return cls(flat.reshape(i, j, k))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    def flat(self) -> np.ndarray:
        """Flat view in the canonical layout."""
        return self.data.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True)
class FactorTriple:
    """Factor matrices (A, B, C) of a polyadic decomposition.

    All three matrices must have the same number of columns ``R`` and no
    column may be the zero vector (a zero column would silently collapse
    the number of rank-1 terms).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in ("A", "B", "C"):
            arr = _as_float_matrix(getattr(self, name), name)
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            mats[name] = arr
        cols = {m.shape[1] for m in mats.values()}
        if len(cols) != 1:
            raise InvalidArgumentError(
                "factor matrices disagree on the number of columns: "
                f"{[m.shape for m in mats.values()]}"
            )
        for name, m in mats.items():
            norms = np.linalg.norm(m, axis=0)
            if np.any(norms == 0.0):
                raise InvalidArgumentError(f"factor matrix {name} has a zero column")
        for name, m in mats.items():
            object.__setattr__(self, name, m)

    @property
    def R(self) -> int:
        return self.A.shape[1]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])


@dataclass(frozen=True)
class MatchReport:
    """How well a recovered decomposition matches a reference one.

    ``permutation[s]`` is the column of the recovered triple matched to
    column ``s`` of the reference; ``column_scales[s]`` holds the per-mode
    least-squares scalings mapping the recovered columns onto the
    reference ones.
    """

    permutation: np.ndarray
    column_scales: np.ndarray
    max_column_angle: float
    relative_residual: float


# ---------------------------------------------------------------------------
# elementary constructions


def synthesize(f: FactorTriple) -> Tensor3:
    """Evaluate the polyadic decomposition into a dense tensor.

    Returns the tensor with entries ``t[i,j,k] = sum_r A[i,r] B[j,r] C[k,r]``.
    """
    full = np.einsum("ir,jr,kr->ijk", f.A, f.B, f.C, optimize=True)
    return Tensor3(full)


def unfold_r10(t: Tensor3) -> np.ndarray:
    """Matricize ``t`` into the IJ x K unfolding.

    Row ``i*J + j``, column ``k`` holds ``t[i,j,k]``; for an exact
    decomposition this equals ``khatri_rao(A, B) @ C.T``.
    """
    i, j, k = t.dims
    return t.data.reshape(i * j, k)


def khatri_rao(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column counts."""
    x = _as_float_matrix(x, "x")
    y = _as_float_matrix(y, "y")
    if x.shape[1] != y.shape[1]:
        raise InvalidArgumentError(
            f"column count mismatch: {x.shape[1]} vs {y.shape[1]}"
        )
    i, r = x.shape
    j = y.shape[0]
    return (x[:, None, :] * y[None, :, :]).reshape(i * j, r)


def kron_power(x: np.ndarray, n: int) -> np.ndarray:
    """n-fold column-wise Kronecker power of a matrix."""
    out = x
    for _ in range(n - 1):
        out = khatri_rao(out, x)
    return out


def numerical_rank(m: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    s = np.linalg.svd(np.atleast_2d(m), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def has_full_column_rank(m: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> bool:
    m = np.atleast_2d(m)
    if m.shape[1] > m.shape[0]:
        return False
    return numerical_rank(m, tol) == m.shape[1]


def k_rank(x: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """Kruskal rank: the largest k such that every k columns are independent.

    Computed by exhaustive subset enumeration, which is feasible at desk
    scale; enumerations beyond ``SUBSET_GUARD`` subsets raise
    :class:`ResourceLimitError`.  A (relatively) zero column gives 0.
    """
    x = _as_float_matrix(x, "x")
    rows, cols = x.shape
    norms = np.linalg.norm(x, axis=0)
    if np.any(norms <= tol * norms.max()):
        return 0
    kmax = min(rows, cols)
    for k in range(2, kmax + 1):
        n_subsets = math.comb(cols, k)
        if n_subsets > SUBSET_GUARD:
            raise ResourceLimitError(
                f"k-rank check at k={k} needs {n_subsets} subsets "
                f"(guard {SUBSET_GUARD})"
            )
        for subset in itertools.combinations(range(cols), k):
            sub = x[:, subset]
            s = np.linalg.svd(sub, compute_uv=False)
            if s[-1] <= tol * s[0]:
                return k - 1
    return kmax


def compound(x: np.ndarray, m: int, max_entries: int = 50_000_000) -> np.ndarray:
    """Matrix of all m x m minors of ``x`` with index sets in lexicographic order.

    Entry ``(p, q)`` is the determinant of the submatrix picked by the p-th
    row m-subset and the q-th column m-subset.
    """
    x = _as_float_matrix(x, "x")
    rows, cols = x.shape
    if not 1 <= m <= min(rows, cols):
        raise InvalidArgumentError(f"compound order {m} out of range for shape {x.shape}")
    if m == 1:
        return x.copy()
    row_sets = np.array(list(itertools.combinations(range(rows), m)))
    col_sets = np.array(list(itertools.combinations(range(cols), m)))
    nr, nc = len(row_sets), len(col_sets)
    if nr * nc * m * m > max_entries:
        raise ResourceLimitError(
            f"compound matrix needs {nr}x{nc} minors of order {m} (guard {max_entries})"
        )
    blocks = x[row_sets[:, None, :, None], col_sets[None, :, None, :]]
    return np.linalg.det(blocks)


def contract_mode3(t: Tensor3, x) -> np.ndarray:
    """Contract the third mode with a vector: ``out[i,j] = sum_k t[i,j,k] x[k]``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (t.dims[2],):
        raise InvalidArgumentError(
            f"contraction vector has shape {x.shape}, expected ({t.dims[2]},)"
        )
    return np.tensordot(t.data, x, axes=([2], [0]))


def best_rank1(m: np.ndarray):
    """Leading singular triplet ``(u, v, sigma)`` of a nonzero matrix.

    ``sigma * outer(u, v)`` is the best rank-1 approximation; ``u`` and
    ``v`` have unit norm and the largest-magnitude entry of ``u`` is made
    positive for determinism.
    """
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    if not np.any(m):
        raise DegenerateInputError("best_rank1 called on the zero matrix")
    u_mat, s, vt = np.linalg.svd(m, full_matrices=False)
    u = u_mat[:, 0]
    v = vt[0]
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
        v = -v
    return u, v, float(s[0])


def rank1_fit(m: np.ndarray) -> float:
    """sigma_1 / ||m||_F, equal to 1 exactly when ``m`` has rank one."""
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    nrm = np.linalg.norm(m)
    if nrm == 0.0:
        return 0.0
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[0] / nrm)


def mode3_compress(t: Tensor3, tol: float = DEFAULT_RANK_TOL):
    """Losslessly reduce the third dimension to the mode-3 numerical rank.

    Returns ``(tc, basis)`` where ``basis`` is a K x K' orthonormal matrix,
    ``tc[i,j,k'] = sum_k t[i,j,k] basis[k,k']`` and any decomposition of
    ``tc`` maps back through ``C = basis @ C'``.
    """
    i, j, k = t.dims
    u = unfold_r10(t)
    _, s, vt = np.linalg.svd(u, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        k_new = 1
    else:
        k_new = max(1, int(np.count_nonzero(s > tol * s[0])))
    basis = np.ascontiguousarray(vt[:k_new].T)
    tc = np.tensordot(t.data, basis, axes=([2], [0]))
    return Tensor3(tc), basis


# ---------------------------------------------------------------------------
# comparing decompositions


def _column_angle(u, v):
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return math.pi / 2
    c = abs(float(u @ v)) / (nu * nv)
    return math.acos(min(1.0, c))


def match_factors(found: FactorTriple, truth: FactorTriple) -> MatchReport:
    """Match rank-1 terms of two triples modulo permutation and scaling.

    Terms are paired greedily on the congruence of their normalized
    vectorizations (largest first, ties broken by lowest index), which
    yields a bijection for any input.  The report carries the worst
    per-mode principal angle over all matched columns and the relative
    reconstruction residual.
    """
    if found.R != truth.R or found.dims != truth.dims:
        raise InvalidArgumentError(
            f"triples do not line up: {found.dims}/{found.R} vs {truth.dims}/{truth.R}"
        )
    r = truth.R

    def unit_terms(f):
        terms = np.einsum("ir,jr,kr->ijkr", f.A, f.B, f.C).reshape(-1, f.R)
        return terms / np.linalg.norm(terms, axis=0, keepdims=True)

    tf = unit_terms(found)
    tt = unit_terms(truth)
    congruence = np.abs(tf.T @ tt)  # (found, truth)

    perm = np.full(r, -1, dtype=np.intp)
    cong = congruence.copy()
    for _ in range(r):
        fi, ti = np.unravel_index(np.argmax(cong), cong.shape)
        perm[ti] = fi
        cong[fi, :] = -1.0
        cong[:, ti] = -1.0

    scales = np.zeros((r, 3))
    max_angle = 0.0
    for s in range(r):
        fi = perm[s]
        for axis, (mf, mt) in enumerate(
            ((found.A, truth.A), (found.B, truth.B), (found.C, truth.C))
        ):
            u = mf[:, fi]
            v = mt[:, s]
            scales[s, axis] = float(u @ v) / float(u @ u)
            max_angle = max(max_angle, _column_angle(u, v))

    t_truth = synthesize(truth)
    t_found = synthesize(found)
    denom = t_truth.norm()
    resid = float(np.linalg.norm(t_found.data - t_truth.data)) / denom if denom else 0.0
    return MatchReport(
        permutation=perm,
        column_scales=scales,
        max_column_angle=float(max_angle),
        relative_residual=resid,
    )
