"""End-to-end algebraic CPD pipelines and the level-search driver.

Phase 1 intersects the null space of the structured unfolding with the
symmetric subspace and reads a matrix F off the resulting auxiliary tensor
with the pencil solver.  When the third factor has full column rank
(K = R) F is simply its transposed inverse; otherwise F collects the unit
normals of all hyperplanes spanned by K-1 columns of C ("unconventional
inverse").  Phases 2 and 3 turn F back into C and then into A and B, with
a computable check at the end of every phase: runtime certification
replaces genericity assumptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_RANK_TOL,
    FactorTriple,
    Tensor3,
    best_rank1,
    khatri_rao,
    mode3_compress,
    numerical_rank,
    rank1_fit,
    synthesize,
    unfold_r10,
)
from .errors import (
    AllLevelsRejectedError,
    ConditionViolationError,
    CpdError,
    InvalidArgumentError,
    RankDeficiencyError,
    RecoveryFailureError,
    VerificationFailureError,
)
from .gevd import PencilConfig, gevd_cpd, power_root
from .kernelspace import DEFAULT_GAP_MIN, DEFAULT_KERNEL_TOL, expand_and_fold, sym_kernel
from .structured import DEFAULT_MAX_GRAM_DIM, build_sym_gram

#: Reconstruction residual above which a result is rejected outright.
DEFAULT_VERIFY_TOL = 1e-6

#: Relative inner product below which two unit vectors count as orthogonal.
DEFAULT_ORTHO_TOL = 1e-7


@dataclass(frozen=True)
class FMatrix:
    """K x C(R, K-1) matrix whose columns are hyperplane normals of C.

    Every column is orthogonal to exactly K-1 columns of the third factor;
    for K = R it coincides with the transposed inverse of that factor up to
    column permutation and scaling.
    """

    f: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.f, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidArgumentError("FMatrix expects a 2-D array")
        arr.flags.writeable = False
        object.__setattr__(self, "f", arr)


@dataclass(frozen=True)
class CpdResult:
    """Recovered factors plus diagnostics of the run."""

    factors: FactorTriple
    l_used: int
    m: int
    kernel_dim: int
    residual: float
    phase_diagnostics: dict = field(default_factory=dict)


def _derived_seed(*parts) -> int:
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# phase 1: the F matrix


def _phase1_f(
    tc: Tensor3,
    R: int,
    m: int,
    l: int,
    seed: int,
    tol_kernel: float,
    gap_min: float,
    max_dim: int,
):
    K = tc.dims[2]
    expected = math.comb(R, K - 1)
    gram = build_sym_gram(tc, m, l, declared_rank=R, max_dim=max_dim)
    kb = sym_kernel(gram, expected, tol_kernel=tol_kernel, gap_min=gap_min)
    aux = expand_and_fold(kb, K, m, l)
    cfg = PencilConfig(mixing_seed=_derived_seed(seed, m, l, 1))
    triple = gevd_cpd(aux, expected, cfg)

    f = np.empty((K, expected))
    fits = np.empty(expected)
    for r in range(expected):
        vec = np.kron(triple.A[:, r], triple.B[:, r])
        f[:, r], fits[r] = power_root(vec, K, m + l)
    diag = {
        "kernel_gap": kb.gap,
        "kernel_dim": kb.n,
        "power_fit_min": float(fits.min()),
    }
    return FMatrix(f), kb, diag


# ---------------------------------------------------------------------------
# phase 2: the third factor from F


def recover_C_from_F(
    f: FMatrix,
    R: int,
    K: int,
    tol: float = DEFAULT_ORTHO_TOL,
    seed: int = 0,
    dedup_angle: float = 1e-4,
    budget_factor: int = 200,
    budget_cap: int = 1_000_000,
) -> np.ndarray:
    """Recover the third factor (up to column order and scale) from F.

    For K = R the matrix F is square and C is its transposed inverse.  For
    K < R a randomized hyperplane search is used: sample K-1 columns of F,
    take the unit normal of their span (when it has rank K-1), and accept
    the normal as a column of C exactly when it is orthogonal to
    C(R-1, K-2) columns of F; accepted normals are deduplicated by angle.
    The sample budget comes from the per-draw success probability
    ~ R ((K-1)/R)**(K-1).
    """
    fm = f.f if isinstance(f, FMatrix) else np.asarray(f, dtype=np.float64)
    n_cols = fm.shape[1]
    if fm.shape[0] != K:
        raise InvalidArgumentError(f"F has {fm.shape[0]} rows, expected {K}")
    if n_cols != math.comb(R, K - 1):
        raise InvalidArgumentError(
            f"F has {n_cols} columns, expected C({R},{K - 1}) = {math.comb(R, K - 1)}"
        )

    if K == R:
        s = np.linalg.svd(fm, compute_uv=False)
        if s[-1] <= DEFAULT_RANK_TOL * s[0]:
            raise RankDeficiencyError("square F is numerically singular")
        return np.linalg.inv(fm.T)

    norms = np.linalg.norm(fm, axis=0)
    if np.any(norms == 0.0):
        raise RecoveryFailureError("F contains a zero column")
    fu = fm / norms
    target = math.comb(R - 1, K - 2)
    p_success = min(1.0, R * ((K - 1) / R) ** (K - 1))
    budget = min(budget_cap, budget_factor * math.ceil(1.0 / p_success))
    rng = np.random.default_rng(seed)

    accepted: list[np.ndarray] = []
    samples = 0
    while samples < budget and len(accepted) < R:
        samples += 1
        pick = rng.choice(n_cols, size=K - 1, replace=False)
        u, s, _ = np.linalg.svd(fu[:, pick], full_matrices=True)
        if s[-1] <= 1e-9 * s[0]:
            continue
        x = u[:, -1]
        count = int(np.count_nonzero(np.abs(x @ fu) <= tol))
        if count != target:
            continue
        if any(math.acos(min(1.0, abs(float(x @ c)))) < dedup_angle for c in accepted):
            continue
        if x[np.argmax(np.abs(x))] < 0:
            x = -x
        accepted.append(x)
    if len(accepted) < R:
        raise RecoveryFailureError(
            f"hyperplane search found {len(accepted)}/{R} normals in {samples} samples; "
            "F is corrupted or the working assumptions fail"
        )
    return np.stack(accepted, axis=1)


# ---------------------------------------------------------------------------
# phase 3: the first two factors


def recover_AB(
    t: Tensor3,
    C: np.ndarray,
    F: FMatrix,
    rank1_fit_min: float = 0.999,
    tol: float = DEFAULT_RANK_TOL,
):
    """Recover A and B (unit-norm columns) from the tensor, C, and F.

    Multiplying the unfolding by F annihilates all magnitude bookkeeping:
    with L = C^T F, the product unfold(t) F equals (A o B) diag-scaled L,
    so a right pseudo-inverse returns the columnwise Kronecker product
    whose columns split into rank-1 factors.
    """
    fm = F.f if isinstance(F, FMatrix) else np.asarray(F, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    i_dim, j_dim, _ = t.dims
    R = C.shape[1]
    lam = C.T @ fm
    if numerical_rank(lam, tol) < R:
        raise RankDeficiencyError(
            "C^T F is rank deficient; the recovered C cannot reproduce the tensor"
        )
    ab = (unfold_r10(t) @ fm) @ np.linalg.pinv(lam)

    a = np.empty((i_dim, R))
    b = np.empty((j_dim, R))
    worst_fit = 1.0
    for r in range(R):
        block = ab[:, r].reshape(i_dim, j_dim)
        fit = rank1_fit(block)
        worst_fit = min(worst_fit, fit)
        if fit < rank1_fit_min:
            raise VerificationFailureError(
                f"column {r} of the recovered Khatri-Rao product has rank-1 fit "
                f"{fit:.6f} < {rank1_fit_min}"
            )
        u, v, _ = best_rank1(block)
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        a[:, r] = u
        b[:, r] = v
    return a, b, worst_fit


def _resolve_c(t: Tensor3, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Restore exact third-factor magnitudes by a least-squares solve."""
    kr = khatri_rao(a, b)
    ct, *_ = np.linalg.lstsq(kr, unfold_r10(t), rcond=None)
    return ct.T


# ---------------------------------------------------------------------------
# full pipelines


def _run_at_level(tc, R, m, l, seed, tol_kernel, gap_min, max_dim, verify_tol, ortho_tol):
    K = tc.dims[2]
    fmat, kb, diag = _phase1_f(tc, R, m, l, seed, tol_kernel, gap_min, max_dim)
    if K == R:
        c_dirs = recover_C_from_F(fmat, R, K)
    else:
        c_dirs = recover_C_from_F(
            fmat, R, K, tol=ortho_tol, seed=_derived_seed(seed, m, l, 2)
        )
    a, b, worst_fit = recover_AB(tc, c_dirs, fmat)
    c = _resolve_c(tc, a, b)
    factors = FactorTriple(A=a, B=b, C=c)
    residual = float(np.linalg.norm(synthesize(factors).data - tc.data)) / tc.norm()
    if residual > verify_tol:
        raise VerificationFailureError(
            f"reconstruction residual {residual:.3e} exceeds {verify_tol:.1e}",
            residual=residual,
        )
    diag["rank1_fit_min"] = worst_fit
    return CpdResult(
        factors=factors,
        l_used=l,
        m=m,
        kernel_dim=kb.n,
        residual=residual,
        phase_diagnostics=diag,
    )


def algorithm1(
    t: Tensor3,
    R: int,
    l: int,
    seed: int = 0,
    tol_kernel: float = DEFAULT_KERNEL_TOL,
    gap_min: float = DEFAULT_GAP_MIN,
    max_dim: int = DEFAULT_MAX_GRAM_DIM,
    verify_tol: float = DEFAULT_VERIFY_TOL,
) -> CpdResult:
    """Decompose a tensor whose third dimension equals its rank (K = R).

    The caller provides the mode-3-compressed tensor; the kernel-dimension
    check at the chosen level certifies the working assumptions at runtime
    and raises :class:`ConditionViolationError` when the level is too low.
    """
    if t.dims[2] != R:
        raise InvalidArgumentError(
            f"this path needs the third dimension ({t.dims[2]}) to equal the rank ({R}); "
            "compress mode 3 first or use the general pipeline"
        )
    return _run_at_level(
        t, R, 2, l, seed, tol_kernel, gap_min, max_dim, verify_tol, DEFAULT_ORTHO_TOL
    )


def algorithm2(
    t: Tensor3,
    R: int,
    l: int,
    seed: int = 0,
    tol_kernel: float = DEFAULT_KERNEL_TOL,
    gap_min: float = DEFAULT_GAP_MIN,
    max_dim: int = DEFAULT_MAX_GRAM_DIM,
    verify_tol: float = DEFAULT_VERIFY_TOL,
    ortho_tol: float = DEFAULT_ORTHO_TOL,
) -> CpdResult:
    """Decompose a tensor with K <= R (third factor full row rank).

    Uses slice minors of order m = R - K + 2; K = R delegates to
    :func:`algorithm1`, whose first phase is the m = 2 special case.
    """
    K = t.dims[2]
    if K > R:
        raise InvalidArgumentError(f"third dimension {K} exceeds the declared rank {R}")
    if K == R:
        return algorithm1(
            t, R, l, seed=seed, tol_kernel=tol_kernel, gap_min=gap_min,
            max_dim=max_dim, verify_tol=verify_tol,
        )
    m = R - K + 2
    if m > min(t.dims[0], t.dims[1]):
        raise ConditionViolationError(
            f"slice-minor order m={m} exceeds min(I, J)={min(t.dims[0], t.dims[1])}; "
            "the kernel condition cannot hold at any level"
        )
    return _run_at_level(
        t, R, m, l, seed, tol_kernel, gap_min, max_dim, verify_tol, ortho_tol
    )


def _compress_for_rank(t: Tensor3, R: int, rank_tol: float):
    """Mode-3 compression plus feasibility checks common to both drivers."""
    tc, basis = mode3_compress(t, tol=rank_tol)
    K = tc.dims[2]
    if K > R:
        raise ConditionViolationError(
            f"mode-3 numerical rank {K} exceeds the declared rank {R}; "
            "no exact decomposition of that rank exists"
        )
    m = R - K + 2
    if m > min(t.dims[0], t.dims[1]):
        raise ConditionViolationError(
            f"slice-minor order m={m} exceeds min(I, J); the kernel condition "
            "cannot hold for these dimensions and rank"
        )
    return tc, basis


def decompose_at_level(
    t: Tensor3,
    R: int,
    l: int,
    seed: int = 0,
    tol_kernel: float = DEFAULT_KERNEL_TOL,
    gap_min: float = DEFAULT_GAP_MIN,
    max_dim: int = DEFAULT_MAX_GRAM_DIM,
    verify_tol: float = DEFAULT_VERIFY_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> CpdResult:
    """Run the pipeline at one fixed level, compressing mode 3 first.

    Unlike :func:`auto_l` this propagates the failure of the chosen level
    directly instead of searching.
    """
    tc, basis = _compress_for_rank(t, R, rank_tol)
    res = algorithm2(
        tc, R, l, seed=seed, tol_kernel=tol_kernel, gap_min=gap_min,
        max_dim=max_dim, verify_tol=verify_tol,
    )
    factors = FactorTriple(A=res.factors.A, B=res.factors.B, C=basis @ res.factors.C)
    residual = float(np.linalg.norm(synthesize(factors).data - t.data)) / t.norm()
    if residual > verify_tol:
        raise VerificationFailureError(
            f"decompressed residual {residual:.3e} exceeds {verify_tol:.1e}",
            residual=residual,
        )
    return CpdResult(
        factors=factors,
        l_used=res.l_used,
        m=res.m,
        kernel_dim=res.kernel_dim,
        residual=residual,
        phase_diagnostics=res.phase_diagnostics,
    )


def auto_l(
    t: Tensor3,
    R: int,
    l_max: int = 3,
    seed: int = 0,
    tol_kernel: float = DEFAULT_KERNEL_TOL,
    gap_min: float = DEFAULT_GAP_MIN,
    max_dim: int = DEFAULT_MAX_GRAM_DIM,
    verify_tol: float = DEFAULT_VERIFY_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> CpdResult:
    """Try levels l = 0, 1, ..., l_max and return the first success.

    Compresses mode 3 to its numerical rank first, so the declared rank
    picks between the K = R and K < R pipelines.  Every rejected level is
    recorded (kernel dimension found, or the failing phase); if all levels
    fail an :class:`AllLevelsRejectedError` aggregates the records.
    """
    if l_max < 0:
        raise InvalidArgumentError("l_max must be >= 0")
    tc, basis = _compress_for_rank(t, R, rank_tol)

    norm_t = t.norm()
    per_level: dict[int, str] = {}
    for l in range(l_max + 1):
        try:
            res = algorithm2(
                tc, R, l, seed=seed, tol_kernel=tol_kernel, gap_min=gap_min,
                max_dim=max_dim, verify_tol=verify_tol,
            )
        except ConditionViolationError as exc:
            found = exc.found_dim if exc.found_dim is not None else "?"
            per_level[l] = f"kernel dimension {found} (expected {exc.expected_dim})"
            continue
        except CpdError as exc:
            per_level[l] = f"{type(exc).__name__}: {exc}"
            continue
        factors = FactorTriple(A=res.factors.A, B=res.factors.B, C=basis @ res.factors.C)
        residual = float(np.linalg.norm(synthesize(factors).data - t.data)) / norm_t
        if residual > verify_tol:
            per_level[l] = f"decompressed residual {residual:.3e}"
            continue
        diag = dict(res.phase_diagnostics)
        diag["rejections"] = dict(per_level)
        return CpdResult(
            factors=factors,
            l_used=l,
            m=res.m,
            kernel_dim=res.kernel_dim,
            residual=residual,
            phase_diagnostics=diag,
        )
    raise AllLevelsRejectedError(
        f"every level 0..{l_max} was rejected for dims {t.dims}, rank {R}: {per_level}",
        per_level,
    )


# ---------------------------------------------------------------------------
# optimization baseline (plumbing, for comparison runs only)


def als_baseline(t: Tensor3, R: int, n_inits: int = 20, n_iters: int = 500, seed: int = 0):
    """Classic alternating least squares from random Gaussian starts.

    Returns the best (factors, relative residual) over all restarts.  This
    is a deliberately plain baseline used to document how the optimization
    approach behaves on instances the algebraic pipeline handles directly.
    """
    i_dim, j_dim, k_dim = t.dims
    t1 = t.data.reshape(i_dim, j_dim * k_dim)
    t2 = np.moveaxis(t.data, 1, 0).reshape(j_dim, i_dim * k_dim)
    t3 = np.moveaxis(t.data, 2, 0).reshape(k_dim, i_dim * j_dim)
    norm_t = t.norm()
    if norm_t == 0.0:
        raise InvalidArgumentError("cannot fit a zero tensor")

    def solve_mode(unf, x, y):
        gram = (x.T @ x) * (y.T @ y)
        rhs = unf @ khatri_rao(x, y)
        sol, *_ = np.linalg.lstsq(gram, rhs.T, rcond=None)
        return sol.T

    best_resid = np.inf
    best = None
    for init in range(n_inits):
        rng = np.random.default_rng(np.random.SeedSequence((seed, init)))
        a = rng.standard_normal((i_dim, R))
        b = rng.standard_normal((j_dim, R))
        c = rng.standard_normal((k_dim, R))
        resid = np.inf
        for it in range(n_iters):
            a = solve_mode(t1, b, c)
            b = solve_mode(t2, a, c)
            c = solve_mode(t3, a, b)
            if it % 10 == 9 or it == n_iters - 1:
                resid = float(np.linalg.norm(c @ khatri_rao(a, b).T - t3)) / norm_t
                if resid < 1e-13:
                    break
        resid = float(np.linalg.norm(c @ khatri_rao(a, b).T - t3)) / norm_t
        if resid < best_resid:
            try:
                best = FactorTriple(A=a, B=b, C=c)
                best_resid = resid
            except InvalidArgumentError:
                pass  # collapsed column; keep the previous best
        if best_resid < 1e-13:
            break
    if best is None:
        raise RecoveryFailureError("every restart collapsed a factor column")
    return best, best_resid
