"""Null-space extraction from the symmetric-subspace Gram operator.

The kernel of the Gram operator (in compressed symmetric coordinates) is
the intersection of the structured unfolding's null space with the
symmetric subspace.  ``sym_kernel`` accepts the eigenspace only when the
spectrum shows exactly the expected number of near-zero eigenvalues with a
clear gap; ``expand_and_fold`` turns the accepted basis into the auxiliary
third-order tensor consumed by the pencil solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import Tensor3
from .errors import ConditionViolationError, InvalidArgumentError
from .structured import GramOperator, sym_basis

#: Eigenvalues below this fraction of the largest one count as kernel.
DEFAULT_KERNEL_TOL = 1e-9

#: Required ratio between the first retained and last discarded eigenvalue.
DEFAULT_GAP_MIN = 1e3

#: Full eigendecomposition below this size, partial extraction above.
_FULL_EIG_LIMIT = 3000


@dataclass(frozen=True)
class KernelBasis:
    """Orthonormal basis of the accepted near-null eigenspace.

    ``w`` holds the eigenvectors (compressed symmetric coordinates) as
    columns; ``gap`` is the ratio between the smallest rejected and the
    largest accepted eigenvalue magnitude (``inf`` for a full kernel).
    """

    w: np.ndarray
    n: int
    gap: float
    expected_n: int
    eigenvalues_low: np.ndarray


def _low_spectrum(q: np.ndarray, k: int):
    """Lowest k eigenpairs plus the largest eigenvalue of a symmetric matrix."""
    d = q.shape[0]
    if d <= _FULL_EIG_LIMIT:
        evals, evecs = scipy.linalg.eigh(q)
        return evals[:k], evecs[:, :k], float(evals[-1])
    evals, evecs = scipy.linalg.eigh(q, subset_by_index=(0, k - 1))
    lam_max = float(
        scipy.linalg.eigh(q, subset_by_index=(d - 1, d - 1), eigvals_only=True)[0]
    )
    return evals, evecs, lam_max


def sym_kernel(
    q: GramOperator,
    expected_n: int,
    tol_kernel: float = DEFAULT_KERNEL_TOL,
    gap_min: float = DEFAULT_GAP_MIN,
) -> KernelBasis:
    """Extract the kernel basis, enforcing dimension and spectral gap.

    Accepts when exactly ``expected_n`` eigenvalues fall below
    ``tol_kernel`` times the largest eigenvalue and the relative gap at the
    cut exceeds ``gap_min``.  A mismatch raises
    :class:`ConditionViolationError` carrying the count that was found and
    the low end of the spectrum, which is precisely the "condition fails,
    try a larger level" signal for the caller's search loop.
    """
    d = q.dim
    if not 1 <= expected_n <= d:
        raise InvalidArgumentError(f"expected kernel dimension {expected_n} not in 1..{d}")
    k = min(d, expected_n + 5)
    evals, evecs, lam_max = _low_spectrum(q.q, k)

    if lam_max <= 0.0:
        # the zero operator: the whole space is kernel
        found = d
        gap = np.inf
        if found != expected_n:
            raise ConditionViolationError(
                f"kernel dimension {found} (zero operator), expected {expected_n}",
                expected_dim=expected_n,
                found_dim=found,
                eigenvalue_tail=evals.copy(),
            )
        basis = np.eye(d)[:, :expected_n]
        return KernelBasis(
            w=basis, n=found, gap=gap, expected_n=expected_n, eigenvalues_low=evals.copy()
        )

    thresh = tol_kernel * lam_max
    below = int(np.count_nonzero(evals < thresh))
    if below == k and k < d:
        # everything we extracted is "zero": the kernel is larger still
        raise ConditionViolationError(
            f"kernel dimension at least {below}, expected {expected_n}",
            expected_dim=expected_n,
            found_dim=below,
            eigenvalue_tail=evals.copy(),
        )

    if expected_n < d:
        if expected_n < evals.shape[0]:
            lam_keep = max(float(evals[expected_n - 1]), 0.0)
            lam_next = float(evals[expected_n])
            gap = np.inf if lam_keep == 0.0 else lam_next / lam_keep
        else:  # expected_n == d cannot reach here; defensive
            gap = np.inf
    else:
        gap = np.inf

    if below != expected_n or gap <= gap_min:
        raise ConditionViolationError(
            f"kernel dimension {below} with gap {gap:.3e}, expected {expected_n} "
            f"with gap > {gap_min:.1e}",
            expected_dim=expected_n,
            found_dim=below,
            eigenvalue_tail=evals.copy(),
        )
    return KernelBasis(
        w=evecs[:, :expected_n].copy(),
        n=below,
        gap=float(gap),
        expected_n=expected_n,
        eigenvalues_low=evals.copy(),
    )


def expand_and_fold(kb: KernelBasis, K: int, m: int, l: int) -> Tensor3:
    """Expand kernel vectors to full coordinates and stack them as slices.

    Each compressed column becomes a K**(m+l) symmetric vector, reshaped to
    a K x K**(m+l-1) matrix; slice s of the returned tensor is the
    matricization of kernel vector s.
    """
    n = m + l
    basis = sym_basis(K, n)
    if kb.w.shape[0] != basis.dim:
        raise InvalidArgumentError(
            f"kernel basis has {kb.w.shape[0]} rows, expected {basis.dim}"
        )
    full = basis.expand(kb.w)  # (K**n, n_kernel)
    return Tensor3(full.reshape(K, K ** (n - 1), kb.w.shape[1]))
