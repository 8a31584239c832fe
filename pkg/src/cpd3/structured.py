"""Combinatorial index machinery and structured matrix assembly.

This module builds the three structured matrices that relate a third-order
tensor to its factor matrices,

* ``build_rml``  -- the determinant-augmented unfolding of the tensor
  (m x m slice minors times l plain entries, symmetrized over the
  third-mode indices),
* ``phi``        -- the matching skew-symmetrized Kronecker-power matrix of
  the first two factors,
* ``s_matrix``   -- the symmetrized Kronecker-power matrix of the third
  factor,

together with ``build_sym_gram``, the streaming Gram restriction of the
first matrix to the symmetric subspace.  The Gram operator is the
performance-critical object: it is assembled row group by row group
without ever materializing the full unfolding, whose logical row count
grows like ``(I*J)**(m+l)``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .core import Tensor3
from .errors import InvalidArgumentError, ResourceLimitError

#: Largest admissible symmetric-subspace dimension (Gram operator side).
DEFAULT_MAX_GRAM_DIM = 20_000

#: Entry guard for explicitly materialized structured matrices.
DEFAULT_MAX_DENSE_ENTRIES = 40_000_000


# ---------------------------------------------------------------------------
# column tuples


@dataclass(frozen=True)
class SymTupleIndex:
    """A nondecreasing column tuple with its number of distinct values.

    Tuples index the columns of ``phi``/``s_matrix``; entries are 0-based
    column indices of the factor matrices.  The position of a tuple in the
    global enumeration is its lexicographic rank.
    """

    tuple: tuple[int, ...]
    distinct_count: int


def count_tuples(m: int, l: int, R: int) -> int:
    """Number of nondecreasing (m+l)-tuples over R values with >= m distinct."""
    n = m + l
    return sum(math.comb(R, d) * math.comb(n - 1, d - 1) for d in range(m, n + 1))


def enumerate_tuples(m: int, l: int, R: int) -> list[SymTupleIndex]:
    """All column tuples in lexicographic order.

    A tuple is admissible when it is nondecreasing over ``{0..R-1}`` and
    contains at least ``m`` distinct values.
    """
    if m < 1 or l < 0:
        raise InvalidArgumentError(f"need m >= 1 and l >= 0, got m={m}, l={l}")
    if R < m:
        raise InvalidArgumentError(f"no valid tuples: R={R} < m={m}")
    out = []
    for tup in itertools.combinations_with_replacement(range(R), m + l):
        d = len(set(tup))
        if d >= m:
            out.append(SymTupleIndex(tuple=tup, distinct_count=d))
    assert len(out) == count_tuples(m, l, R)
    return out


# ---------------------------------------------------------------------------
# symmetric-subspace basis


@dataclass(frozen=True)
class SymMultiset:
    """Basis index of the symmetric subspace: a third-mode index multiset.

    ``weight`` is the square root of the number of distinct permutations of
    the multiset; the associated basis vector (indicator of all permuted
    positions divided by ``weight``) has unit Euclidean norm.
    """

    multiset: tuple[int, ...]
    multiplicity_vector: tuple[int, ...]
    weight: float


class SymBasis:
    """Orthonormal basis bookkeeping for order-n symmetric tensors over R^K.

    Attributes
    ----------
    tuples:       (D, n) array of nondecreasing index tuples, lex order.
    perm_counts:  number of distinct permutations of each tuple.
    inv_sqrt:     1/sqrt(perm_counts), the per-coordinate expansion weight.
    sym_index:    (K**n,) map from flat k-tuple to its multiset position.
    """

    def __init__(self, K: int, order: int):
        if K < 1 or order < 1:
            raise InvalidArgumentError(f"need K >= 1 and order >= 1, got {K}, {order}")
        full = K**order
        if full > 200_000_000:
            raise ResourceLimitError(f"symmetric basis over {K}^{order} coordinates")
        self.K = K
        self.order = order
        tuples = np.array(
            list(itertools.combinations_with_replacement(range(K), order)),
            dtype=np.int64,
        ).reshape(-1, order)
        self.tuples = tuples
        self.dim = tuples.shape[0]
        fact = math.factorial(order)
        counts = np.empty(self.dim)
        for idx in range(self.dim):
            denom = 1
            for c in Counter(tuples[idx].tolist()).values():
                denom *= math.factorial(c)
            counts[idx] = fact // denom
        self.perm_counts = counts
        self.inv_sqrt = 1.0 / np.sqrt(counts)

        digits = np.stack(
            np.unravel_index(np.arange(full), (K,) * order), axis=1
        ).astype(np.int64)
        keys = np.sort(digits, axis=1) @ (K ** np.arange(order - 1, -1, -1, dtype=np.int64))
        codes = tuples @ (K ** np.arange(order - 1, -1, -1, dtype=np.int64))
        # lex order on fixed-length tuples == numeric order of the encoding
        self.sym_index = np.searchsorted(codes, keys).astype(np.int64)

    def multisets(self) -> list[SymMultiset]:
        out = []
        for idx in range(self.dim):
            tup = tuple(int(v) for v in self.tuples[idx])
            mult = tuple(Counter(tup)[v] for v in sorted(set(tup)))
            out.append(
                SymMultiset(
                    multiset=tup,
                    multiplicity_vector=mult,
                    weight=float(np.sqrt(self.perm_counts[idx])),
                )
            )
        return out

    def expand(self, z: np.ndarray) -> np.ndarray:
        """Coefficients on the normalized basis -> full K**n coordinates."""
        z = np.asarray(z, dtype=np.float64)
        scaled = (z.T * self.inv_sqrt).T
        return scaled[self.sym_index]

    def compress(self, x: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`expand` (orthogonal projection coefficients)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            folded = np.bincount(self.sym_index, weights=x, minlength=self.dim)
            return folded * self.inv_sqrt
        cols = [
            np.bincount(self.sym_index, weights=x[:, c], minlength=self.dim)
            for c in range(x.shape[1])
        ]
        return np.stack(cols, axis=1) * self.inv_sqrt[:, None]

    def dense_projection(self) -> np.ndarray:
        """The K**n x D matrix with the normalized basis vectors as columns."""
        full = self.K**self.order
        p = np.zeros((full, self.dim))
        p[np.arange(full), self.sym_index] = self.inv_sqrt[self.sym_index]
        return p


@lru_cache(maxsize=8)
def sym_basis(K: int, order: int) -> SymBasis:
    return SymBasis(K, order)


# ---------------------------------------------------------------------------
# row-group enumeration shared by the Gram and dense builders


def _perm_table(m):
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64).reshape(-1, m)
    signs = np.empty(len(perms))
    for idx, p in enumerate(perms):
        inv = sum(1 for a in range(m) for b in range(a + 1, m) if p[a] > p[b])
        signs[idx] = -1.0 if inv % 2 else 1.0
    return perms, signs


def _arrangement_count(pairs):
    denom = 1
    for c in Counter(pairs).values():
        denom *= math.factorial(c)
    return math.factorial(len(pairs)) // denom


def _row_groups(I, J, m, l):
    """Yield (i_idx, j_idx, free_i, free_j, multiplicity) per canonical row.

    Rows of the determinant-augmented unfolding repeat (up to sign) under
    permutations of the first m first-mode indices, the first m second-mode
    indices, and joint rearrangements of the l free pairs; one canonical
    representative per class is enough for Gram accumulation.
    """
    fact_m2 = math.factorial(m) ** 2
    pair_codes = range(I * J)
    for i_combo in itertools.combinations(range(I), m):
        i_arr = np.array(i_combo, dtype=np.int64)
        for j_combo in itertools.combinations(range(J), m):
            j_arr = np.array(j_combo, dtype=np.int64)
            for pairs in itertools.combinations_with_replacement(pair_codes, l):
                fi = np.array([c // J for c in pairs], dtype=np.int64)
                fj = np.array([c % J for c in pairs], dtype=np.int64)
                yield i_arr, j_arr, fi, fj, fact_m2 * _arrangement_count(pairs)


def _check_orders(t: Tensor3, m, l):
    I, J, _ = t.dims
    if m < 1 or l < 0:
        raise InvalidArgumentError(f"need m >= 1 and l >= 0, got m={m}, l={l}")
    if m > min(I, J):
        raise InvalidArgumentError(
            f"slice-minor order m={m} exceeds min(I, J)={min(I, J)}; "
            "the map would be identically zero"
        )


# ---------------------------------------------------------------------------
# the Gram operator


@dataclass(frozen=True)
class GramOperator:
    """Symmetric PSD restriction of the determinant-augmented unfolding.

    ``q`` equals G^T G where G maps normalized symmetric-subspace
    coordinates through the unfolding, so the null space of ``q`` is
    exactly the intersection of the unfolding's null space with the
    symmetric subspace, in compressed coordinates.
    """

    q: np.ndarray
    m: int
    l: int
    K: int
    declared_rank: int | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.q, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "q", arr)

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def basis(self) -> SymBasis:
        return sym_basis(self.K, self.m + self.l)

    def quad_form(self, z: np.ndarray) -> float:
        """z^T q z; the squared unfolding norm of the expanded vector."""
        z = np.asarray(z, dtype=np.float64)
        return float(z @ (self.q @ z))


def build_sym_gram(
    t: Tensor3,
    m: int,
    l: int,
    declared_rank: int | None = None,
    max_dim: int = DEFAULT_MAX_GRAM_DIM,
    chunk_rows: int = 256,
) -> GramOperator:
    """Assemble the symmetric-subspace Gram operator without the dense map.

    Accumulates rank-1 (actually chunked rank-k) updates over the
    nonredundant row groups: strictly increasing m-subsets of first- and
    second-mode indices times multisets of free pairs, each weighted by its
    class multiplicity.  Summation order is a dtype-level implementation
    detail, so results across chunk sizes agree only to ~1e-13 relative.
    """
    _check_orders(t, m, l)
    n = m + l
    K = t.dims[2]
    D = math.comb(K + n - 1, n)
    if D > max_dim:
        raise ResourceLimitError(
            f"symmetric subspace dimension D={D} exceeds the guard {max_dim}"
        )
    basis = sym_basis(K, n)
    col_scale = basis.inv_sqrt / math.factorial(m)
    perms, signs = _perm_table(m)

    q = np.zeros((D, D))
    buf = np.empty((chunk_rows, D))
    filled = 0
    for i_arr, j_arr, fi, fj, weight in _row_groups(t.dims[0], t.dims[1], m, l):
        _kernels.row_block(
            t.data, i_arr, j_arr, fi, fj, perms, signs,
            basis.sym_index, col_scale, buf[filled],
        )
        buf[filled] *= math.sqrt(weight)
        filled += 1
        if filled == chunk_rows:
            q += buf.T @ buf
            filled = 0
    if filled:
        part = buf[:filled]
        q += part.T @ part
    q = 0.5 * (q + q.T)
    return GramOperator(q=q, m=m, l=l, K=K, declared_rank=declared_rank)


# ---------------------------------------------------------------------------
# dense builders (desk scale, used by tests and certificates)


def build_rml(
    t: Tensor3, m: int, l: int, max_entries: int = DEFAULT_MAX_DENSE_ENTRIES
) -> np.ndarray:
    """Dense determinant-augmented unfolding of shape (IJ)**(m+l) x K**(m+l).

    Row ``(i_1..i_n, j_1..j_n)`` (both in big-endian positional encoding)
    and column ``(k_1..k_n)`` hold the symmetrized sum over permutations of
    the k-tuple of the m x m slice minor times the l free entries, with the
    1/(m! (m+l)!) prefactor.  Rows with a repeated index among the first m
    first-mode (or second-mode) positions vanish identically.
    """
    _check_orders(t, m, l)
    I, J, K = t.dims
    n = m + l
    rows = (I * J) ** n
    if rows * (K**n) > max_entries:
        raise ResourceLimitError(
            f"dense unfolding needs {rows} x {K ** n} entries (guard {max_entries})"
        )
    basis = sym_basis(K, n)
    col_scale = basis.inv_sqrt / math.factorial(m)
    perms, signs = _perm_table(m)
    i_strides = (I ** np.arange(n - 1, -1, -1, dtype=np.int64)) * (J**n)
    j_strides = J ** np.arange(n - 1, -1, -1, dtype=np.int64)

    out = np.zeros((rows, K**n))
    g = np.empty(basis.dim)
    perm_list = [tuple(p) for p in perms]
    sign_of = dict(zip(perm_list, signs))
    for i_arr, j_arr, fi, fj, _weight in _row_groups(I, J, m, l):
        _kernels.row_block(
            t.data, i_arr, j_arr, fi, fj, perms, signs,
            basis.sym_index, col_scale, g,
        )
        full_row = basis.expand(g)
        free_pairs = list(zip(fi.tolist(), fj.tolist()))
        for ti in perm_list:
            i_head = [int(i_arr[b]) for b in ti]
            for tj in perm_list:
                j_head = [int(j_arr[b]) for b in tj]
                sgn = sign_of[ti] * sign_of[tj]
                for arrangement in set(itertools.permutations(free_pairs)):
                    i_full = np.array(i_head + [p[0] for p in arrangement], dtype=np.int64)
                    j_full = np.array(j_head + [p[1] for p in arrangement], dtype=np.int64)
                    row = int(i_full @ i_strides + j_full @ j_strides)
                    out[row] = sgn * full_row
    return out


def phi(
    A: np.ndarray,
    B: np.ndarray,
    m: int,
    l: int,
    max_entries: int = DEFAULT_MAX_DENSE_ENTRIES,
) -> np.ndarray:
    """Dense skew-symmetrized Kronecker-power matrix of two factor matrices.

    Column ``(r_1..r_{m+l})`` sums, over all permutations of the tuple, the
    Kronecker product of the m-column minor vectors of ``A`` and ``B`` with
    the l extra factor columns, scaled by 1/(m!)^2.  Columns are indexed by
    :func:`enumerate_tuples`.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    I, R = A.shape
    J, R2 = B.shape
    if R != R2:
        raise InvalidArgumentError("A and B must have the same number of columns")
    if m > min(I, J, R):
        raise InvalidArgumentError(f"m={m} exceeds min(I, J, R)")
    n = m + l
    tuples = enumerate_tuples(m, l, R)
    rows = (I * J) ** n
    if rows * len(tuples) > max_entries:
        raise ResourceLimitError(
            f"dense factor map needs {rows} x {len(tuples)} entries (guard {max_entries})"
        )
    perms, signs = _perm_table(m)
    scale = 1.0 / math.factorial(m) ** 2

    def minor_vec(M, cols):
        out = None
        for p, sgn in zip(perms, signs):
            term = M[:, cols[p[0]]]
            for b in range(1, m):
                term = np.kron(term, M[:, cols[p[b]]])
            out = sgn * term if out is None else out + sgn * term
        return out

    out = np.zeros((rows, len(tuples)))
    for cidx, st in enumerate(tuples):
        tup = st.tuple
        mult_factor = 1
        for c in Counter(tup).values():
            mult_factor *= math.factorial(c)
        col = np.zeros(rows)
        for s in set(itertools.permutations(tup)):
            det_cols = s[:m]
            block_a = minor_vec(A, det_cols)
            block_b = minor_vec(B, det_cols)
            for p in range(l):
                block_a = np.kron(block_a, A[:, s[m + p]])
                block_b = np.kron(block_b, B[:, s[m + p]])
            col += np.kron(block_a, block_b)
        out[:, cidx] = col * (mult_factor * scale)
    return out


# ---------------------------------------------------------------------------
# symmetrized powers of the third factor


@lru_cache(maxsize=16)
def _fold_maps(K: int, order: int):
    """Index maps for the symmetric outer-product recursion, one per level.

    Level d entry arrays (child, parent, value, mult) implement
    ``T_{d+1}[child] += mult * T_d[parent] * c[value]`` over all multisets
    of size d+1 and distinct values they contain.
    """
    maps = []
    prev = {(v,): v for v in range(K)}
    for d in range(1, order):
        cur = {}
        child, parent, value, mult = [], [], [], []
        for idx, ms in enumerate(itertools.combinations_with_replacement(range(K), d + 1)):
            cur[ms] = idx
            for v, c in Counter(ms).items():
                rest = list(ms)
                rest.remove(v)
                child.append(idx)
                parent.append(prev[tuple(rest)])
                value.append(v)
                mult.append(c)
        maps.append(
            (
                np.array(child, dtype=np.int64),
                np.array(parent, dtype=np.int64),
                np.array(value, dtype=np.int64),
                np.array(mult, dtype=np.float64),
                len(cur),
            )
        )
        prev = cur
    return tuple(maps)


def _sym_outer_monomial(columns):
    """Monomial (distinct-position) values of Sym(c_1 x ... x c_n)."""
    K = columns[0].shape[0]
    order = len(columns)
    maps = _fold_maps(K, order)
    T = np.asarray(columns[0], dtype=np.float64)
    for d in range(1, order):
        child, parent, value, mult, size = maps[d - 1]
        Tn = np.zeros(size)
        np.add.at(Tn, child, mult * T[parent] * columns[d][value])
        T = Tn / (d + 1)
    return T


def s_matrix(
    C: np.ndarray, m: int, l: int, max_entries: int = DEFAULT_MAX_DENSE_ENTRIES
) -> np.ndarray:
    """Dense symmetrized Kronecker-power matrix of the third factor.

    Column ``(r_1..r_{m+l})`` is the average over all permutations of the
    tuple of ``c_{s_1} x ... x c_{s_{m+l}}``; contracting it with a
    repeated vector ``x`` gives the product of the ``x^T c_r``.
    """
    C = np.asarray(C, dtype=np.float64)
    K, R = C.shape
    n = m + l
    tuples = enumerate_tuples(m, l, R)
    if (K**n) * len(tuples) > max_entries:
        raise ResourceLimitError(
            f"dense symmetric-power matrix needs {K ** n} x {len(tuples)} entries"
        )
    basis = sym_basis(K, n)
    out = np.empty((K**n, len(tuples)))
    for cidx, st in enumerate(tuples):
        vals = _sym_outer_monomial([C[:, r] for r in st.tuple])
        out[:, cidx] = vals[basis.sym_index]
    return out


def s_matrix_compressed(C: np.ndarray, m: int, l: int):
    """Symmetric-subspace coordinates of :func:`s_matrix`.

    Returns ``(S_hat, basis)`` with ``S_hat = P^T S`` for the orthonormal
    subspace injection ``P``; since every column of the dense matrix lies
    in the symmetric subspace, ``S_hat`` has the same singular values and
    the same column-space geometry at a fraction of the size.
    """
    C = np.asarray(C, dtype=np.float64)
    K, R = C.shape
    n = m + l
    tuples = enumerate_tuples(m, l, R)
    basis = sym_basis(K, n)
    sqrt_counts = np.sqrt(basis.perm_counts)
    out = np.empty((basis.dim, len(tuples)))
    for cidx, st in enumerate(tuples):
        vals = _sym_outer_monomial([C[:, r] for r in st.tuple])
        out[:, cidx] = vals * sqrt_counts
    return out, basis
