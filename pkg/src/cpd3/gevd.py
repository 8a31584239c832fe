"""Base-case algebraic solver: CPD via a generalized eigendecomposition.

Works for tensors whose second- and third-mode factors have full column
rank while the first-mode factor has Kruskal rank at least 2.  Both
remaining factors are recovered from the eigenstructure of a quotient of
two random mixtures of first-mode slices; random mixing (instead of
picking two raw slices) avoids failing on an accidentally singular slice
and is seeded for reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FactorTriple, Tensor3, best_rank1, synthesize
from .errors import (
    DegenerateInputError,
    InvalidArgumentError,
    NotAPowerError,
    RankDeficiencyError,
    VerificationFailureError,
)

_SINGULARITY_TOL = 1e-12


@dataclass(frozen=True)
class PencilConfig:
    """Knobs for the randomized slice pencil."""

    mixing_seed: int = 0
    max_retries: int = 5
    eig_sep_min: float = 1e-6

    def __post_init__(self):
        if self.max_retries < 1:
            raise InvalidArgumentError("max_retries must be >= 1")


class _RetryableFailure(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def _compress_side(unfolding, r):
    u, s, _ = np.linalg.svd(unfolding, full_matrices=False)
    if s.shape[0] < r or s[0] == 0.0 or s[r - 1] <= _SINGULARITY_TOL * s[0]:
        raise RankDeficiencyError(
            f"side factor has numerical rank < {r}; the pencil construction needs "
            "full column rank in modes 2 and 3"
        )
    return u[:, :r]


def _rank1_triple(t: Tensor3) -> FactorTriple:
    p, q, n = t.dims
    u, rest, s1 = best_rank1(t.data.reshape(p, q * n))
    v, w, s2 = best_rank1(rest.reshape(q, n))
    return FactorTriple(
        A=(u * s1).reshape(p, 1), B=v.reshape(q, 1), C=(w * s2).reshape(n, 1)
    )


def gevd_cpd(
    w: Tensor3,
    R: int,
    cfg: PencilConfig | None = None,
    verify_tol: float = 1e-8,
) -> FactorTriple:
    """Recover an R-term decomposition of ``w`` by a slice-pencil GEVD.

    Procedure: compress modes 2 and 3 to R dimensions, draw two random
    Gaussian mixtures of the first-mode slices, eigendecompose their
    quotient (eigenvectors give the compressed mode-2 factor), then read
    the remaining two factors off rank-1 cross sections.  Retries with
    fresh mixing vectors when eigenvalues collide, the second mixture is
    singular, or the reconstruction misses ``verify_tol``.
    """
    cfg = cfg or PencilConfig()
    p, q, n = w.dims
    if R < 1:
        raise InvalidArgumentError("R must be positive")
    if R == 1:
        return _rank1_triple(w)
    if p < 2:
        raise InvalidArgumentError("the first dimension must be at least 2")
    if q < R or n < R:
        raise RankDeficiencyError(
            f"modes 2 and 3 of size {(q, n)} cannot carry rank {R} full-column-rank factors"
        )

    # mode compressions are deterministic; only the mixtures are random
    u2 = _compress_side(np.moveaxis(w.data, 1, 0).reshape(q, p * n), R)
    u3 = _compress_side(np.moveaxis(w.data, 2, 0).reshape(n, p * q), R)
    slices = np.einsum("pqn,qr,ns->prs", w.data, u2, u3, optimize=True)  # (p, R, R)

    rng = np.random.default_rng(cfg.mixing_seed)
    norm_w = w.norm()
    last: _RetryableFailure | None = None
    for _ in range(cfg.max_retries):
        try:
            return _attempt(w, slices, u2, u3, rng, cfg, norm_w, verify_tol)
        except _RetryableFailure as exc:
            last = exc
    assert last is not None
    if last.kind == "separation":
        raise DegenerateInputError(
            f"pencil eigenvalues persistently collide ({last}); the first-mode factor "
            "likely has Kruskal rank < 2"
        )
    if last.kind == "complex":
        raise DegenerateInputError(f"complex pencil eigenvalues persist ({last})")
    if last.kind == "singular":
        raise RankDeficiencyError(f"mixed slice persistently singular ({last})")
    raise VerificationFailureError(f"pencil reconstruction failed ({last})")


def _attempt(w, slices, u2, u3, rng, cfg, norm_w, verify_tol):
    p = slices.shape[0]
    r = slices.shape[1]
    x = rng.standard_normal(p)
    y = rng.standard_normal(p)
    wx = np.tensordot(x, slices, axes=([0], [0]))
    wy = np.tensordot(y, slices, axes=([0], [0]))

    sv = np.linalg.svd(wy, compute_uv=False)
    if sv[-1] <= _SINGULARITY_TOL * sv[0]:
        raise _RetryableFailure("singular", "singular slice mixture")

    quotient = np.linalg.solve(wy.T, wx.T).T
    evals, evecs = np.linalg.eig(quotient)
    if np.any(np.abs(evals.imag) > 0.0):
        raise _RetryableFailure("complex", f"max imag part {np.abs(evals.imag).max():.2e}")
    evals = evals.real
    evecs = evecs.real

    spread = max(float(np.abs(evals).max()), 1e-300)
    diffs = np.abs(evals[:, None] - evals[None, :])
    np.fill_diagonal(diffs, np.inf)
    if float(diffs.min()) / spread < cfg.eig_sep_min:
        raise _RetryableFailure(
            "separation", f"eigenvalue separation {float(diffs.min()) / spread:.2e}"
        )

    # rows r of V^-1 W_p sweep out rank-1 cross sections a_r c_r^T
    vinv = np.linalg.inv(evecs)
    cross = np.einsum("rs,psk->rpk", vinv, slices, optimize=True)  # (r, p, R)
    a = np.empty((p, r))
    c_hat = np.empty((r, r))
    for idx in range(r):
        try:
            u, v, sigma = best_rank1(cross[idx])
        except DegenerateInputError as exc:
            raise _RetryableFailure("singular", str(exc)) from exc
        a[:, idx] = sigma * u
        c_hat[:, idx] = v

    try:
        triple = FactorTriple(A=a, B=u2 @ evecs, C=u3 @ c_hat)
    except InvalidArgumentError as exc:
        raise _RetryableFailure("singular", str(exc)) from exc
    resid = float(np.linalg.norm(synthesize(triple).data - w.data)) / norm_w
    if resid > verify_tol:
        raise _RetryableFailure("residual", f"reconstruction residual {resid:.2e}")
    return triple


def power_root(v: np.ndarray, K: int, n: int, min_fit: float = 0.99):
    """Extract ``f`` from a vector approximating the n-fold power f x ... x f.

    Returns ``(f, fit)`` where ``f`` is the leading left singular vector of
    the K x K**(n-1) matricization, scaled so ``||f||**n = ||v||`` with the
    largest-magnitude entry positive, and ``fit = sigma_1 / ||v||``.  A fit
    below ``min_fit`` raises :class:`NotAPowerError`: the vector was not a
    symmetric rank-1 power, which signals an upstream condition failure.
    """
    if n < 2:
        raise InvalidArgumentError("power order must be at least 2")
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape[0] != K**n:
        raise InvalidArgumentError(f"vector length {v.shape[0]} is not {K}**{n}")
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        raise DegenerateInputError("zero vector has no power root")
    mat = v.reshape(K, K ** (n - 1))
    u, _, sigma = best_rank1(mat)
    fit = sigma / norm_v
    if fit < min_fit:
        raise NotAPowerError(
            f"power-root fit {fit:.6f} below {min_fit}; vector is not a symmetric power",
            fit=fit,
        )
    f = u * norm_v ** (1.0 / n)
    return f, float(fit)
