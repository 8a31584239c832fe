"""Checkable uniqueness certificates and generic identifiability bounds.

The decisive surrogate check is ``check_phi_u``: full column rank of the
skew-symmetrized factor map restricted to the row space of the symmetric
power of the third factor.  The underlying implication conditions are
quantified over all vectors and are not finitely decidable; only these
sufficient matrix-rank surrogates are exposed here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_RANK_TOL,
    FactorTriple,
    compound,
    has_full_column_rank,
    k_rank,
    khatri_rao,
    numerical_rank,
    synthesize,
)
from .errors import InvalidArgumentError, ResourceLimitError
from .structured import (
    DEFAULT_MAX_GRAM_DIM,
    build_sym_gram,
    s_matrix_compressed,
    sym_basis,
)

VERDICT_KRUSKAL = "unique-by-Kruskal"
VERDICT_RANK_CERT = "unique-by-Thm5.x"
VERDICT_ONE_FACTOR = "one-factor-unique"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class UniquenessReport:
    """Outcome of all uniqueness certificates for one factor triple.

    ``phi_u_full_rank`` maps ``(k, l_k)`` to the surrogate check result
    (``None`` when a size guard prevented the computation).  The verdict
    reports the strongest certificate found; "inconclusive" is a valid
    outcome and never implies non-uniqueness.
    """

    kruskal_holds: bool
    theorem_2_2_holds: bool
    phi_u_full_rank: dict = field(default_factory=dict)
    min_k_rank_ok: bool = False
    uniq_via_one_fm: bool = False
    verdict: str = VERDICT_INCONCLUSIVE

    def as_dict(self) -> dict:
        return {
            "kruskal_holds": self.kruskal_holds,
            "theorem_2_2_holds": self.theorem_2_2_holds,
            "phi_u_full_rank": {
                f"k={k},l={l}": v for (k, l), v in sorted(self.phi_u_full_rank.items())
            },
            "min_k_rank_ok": self.min_k_rank_ok,
            "uniq_via_one_fm": self.uniq_via_one_fm,
            "verdict": self.verdict,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)


def check_kruskal(f: FactorTriple, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Classical k-rank inequality: 2R + 2 <= k_A + k_B + k_C."""
    total = k_rank(f.A, tol) + k_rank(f.B, tol) + k_rank(f.C, tol)
    return 2 * f.R + 2 <= total


def _row_reduce(C: np.ndarray, tol: float) -> np.ndarray:
    """Project C onto an orthonormal basis of its row-space carrier."""
    rank = numerical_rank(C, tol)
    if rank == C.shape[0]:
        return C
    u, _, _ = np.linalg.svd(C, full_matrices=False)
    return u[:, :rank].T @ C


def check_phi_u(
    f: FactorTriple,
    k: int,
    l_k: int,
    tol: float = DEFAULT_RANK_TOL,
    max_dim: int = DEFAULT_MAX_GRAM_DIM,
) -> bool:
    """Full-column-rank surrogate at minor order ``k`` and level ``l_k``.

    Builds an orthonormal basis U of the row space of the symmetric power
    of C and tests whether the skew-symmetrized factor map of (A, B) keeps
    full column rank on range(U).  The map itself is never materialized:
    its Gram matrix is assembled by the streaming kernel on the synthetic
    tensor with identity third factor, then conjugated onto U.
    """
    A, B = f.A, f.B
    R = f.R
    if k < 1 or l_k < 0:
        raise InvalidArgumentError(f"need k >= 1 and l_k >= 0, got {k}, {l_k}")
    if k > min(A.shape[0], B.shape[0], R):
        return False
    C = _row_reduce(f.C, tol)
    n = k + l_k

    # Gram of the factor map via the identity-third-factor tensor
    t_ab = synthesize(FactorTriple(A=A, B=B, C=np.eye(R)))
    gram = build_sym_gram(t_ab, k, l_k, max_dim=max_dim)
    basis_r = sym_basis(R, n)
    scale = np.sqrt(basis_r.perm_counts)
    admissible = np.array(
        [len(set(tup)) >= k for tup in basis_r.tuples.tolist()], dtype=bool
    )
    phi_gram = (gram.q * scale[:, None] * scale[None, :])[np.ix_(admissible, admissible)]

    s_hat, _ = s_matrix_compressed(C, k, l_k)
    _, sv, vt = np.linalg.svd(s_hat, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        return False
    rank_s = int(np.count_nonzero(sv > tol * sv[0]))
    u = vt[:rank_s].T  # (M, rank_s)

    h = u.T @ phi_gram @ u
    evals = np.linalg.eigvalsh(h)
    smax = math.sqrt(max(float(evals[-1]), 0.0))
    smin = math.sqrt(max(float(evals[0]), 0.0))
    if smax == 0.0:
        return False
    return smin > tol * smax


def _theorem_2_2(f: FactorTriple, tol: float) -> bool:
    """Second-order compound condition plus full column rank of C."""
    if 2 > min(f.A.shape[0], f.B.shape[0], f.R):
        return False
    if not has_full_column_rank(f.C, tol):
        return False
    try:
        cmp_ab = khatri_rao(compound(f.A, 2), compound(f.B, 2))
    except ResourceLimitError:
        return False
    return has_full_column_rank(cmp_ab, tol)


def check_uniqueness(
    f: FactorTriple,
    l_schedule=None,
    l_max: int = 3,
    tol: float = DEFAULT_RANK_TOL,
    max_dim: int = DEFAULT_MAX_GRAM_DIM,
) -> UniquenessReport:
    """Evaluate all certificates and report the strongest verdict.

    ``l_schedule`` maps minor order k to the level used in its surrogate
    check (default 0 everywhere); the level of the top order m is raised
    automatically up to ``l_max`` until the check passes.  Third-factor
    uniqueness established by the rank surrogates upgrades to full CPD
    uniqueness through the pairwise k-rank condition ``uniq_via_one_fm``.
    """
    A, B, C = f.A, f.B, f.C
    R = f.R
    ka = k_rank(A, tol)
    kb = k_rank(B, tol)
    kc = k_rank(C, tol)
    kruskal = 2 * R + 2 <= ka + kb + kc
    thm22 = _theorem_2_2(f, tol)
    ab_full = has_full_column_rank(khatri_rao(A, B), tol)

    k_eff = numerical_rank(C, tol)
    m = R - k_eff + 2
    schedule = dict(l_schedule or {})
    phi_flags: dict[tuple[int, int], bool | None] = {}

    def run_check(k, l_k):
        try:
            return check_phi_u(f, k, l_k, tol=tol, max_dim=max_dim)
        except ResourceLimitError:
            return None

    m_feasible = m <= min(A.shape[0], B.shape[0], R)
    if m_feasible:
        for k in range(1, m):
            l_k = int(schedule.get(k, 0))
            phi_flags[(k, l_k)] = run_check(k, l_k)
        l_m = int(schedule.get(m, 0))
        while True:
            result = run_check(m, l_m)
            phi_flags[(m, l_m)] = result
            if result or result is None or l_m >= l_max:
                break
            l_m += 1

    lower_ok = m_feasible and all(
        phi_flags.get((k, int(schedule.get(k, 0)))) for k in range(1, m)
    )
    top_ok = m_feasible and any(
        v for (k, _), v in phi_flags.items() if k == m and v
    )
    min_k_rank_ok = min(ka, kb) >= m - 1
    third_unique = (
        kc >= 1 and ab_full and top_ok and (lower_ok or min_k_rank_ok)
    )
    uniq_one_fm = max(min(ka, kb - 1), min(ka - 1, kb)) + kc >= R + 1

    if third_unique and uniq_one_fm:
        verdict = VERDICT_RANK_CERT
    elif kruskal:
        verdict = VERDICT_KRUSKAL
    elif third_unique:
        verdict = VERDICT_ONE_FACTOR
    else:
        verdict = VERDICT_INCONCLUSIVE

    return UniquenessReport(
        kruskal_holds=kruskal,
        theorem_2_2_holds=thm22,
        phi_u_full_rank=phi_flags,
        min_k_rank_ok=min_k_rank_ok,
        uniq_via_one_fm=uniq_one_fm,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# generic (dimension-only) identifiability bounds


@dataclass(frozen=True)
class Bound:
    value: float
    note: str


def generic_bounds(I: int, J: int, K: int) -> dict[str, Bound]:
    """Dimension-only rank bounds under which generic uniqueness is known.

    Dimensions are sorted ascending internally; every bound is an upper
    limit on the rank R (inclusive) with an applicability note.
    """
    i, j, k = sorted((int(I), int(J), int(K)))
    if i < 2:
        raise InvalidArgumentError("all dimensions must be at least 2")

    out: dict[str, Bound] = {}
    out["generic_sqrt"] = Bound(
        value=(i + j + 2 * k - 2 - math.sqrt((i - j) ** 2 + 4 * k)) / 2,
        note="generic uniqueness for 2 <= I <= J <= K <= R",
    )
    out["generic_ratio"] = Bound(
        value=i * j * k / (i + j + k - 2) - k,
        note="complex scalars only; needs smallest dimension >= 3",
    )
    alpha = i.bit_length() - 1
    beta = j.bit_length() - 1
    out["generic_pow2"] = Bound(
        value=float(2 ** (alpha + beta - 2)),
        note="power-of-two bound; always <= IJ/4",
    )
    out["grid"] = Bound(
        value=float((i - 1) * (j - 1)),
        note="equals generic_sqrt when R = K; necessary over the complex field",
    )

    best_pairs = 0
    for r in range(2, k + 1):
        if r * (r - 1) <= i * (i - 1) * j * (j - 1) / 2:
            best_pairs = r
    out["compound_pairs"] = Bound(
        value=float(best_pairs),
        note="second-order compound counting bound, constrained to R <= K",
    )
    out["kruskal_generic"] = Bound(
        value=(i + j + k - 2) / 2,
        note="generic counterpart of the k-rank inequality",
    )

    best_m = 0
    for r in range(2, k + min(i, j)):
        m = max(2, r - k + 2)
        if m <= min(i, j) and math.comb(r, m) <= math.comb(i, m) * math.comb(j, m):
            best_m = r
    out["compound_m"] = Bound(
        value=float(best_m),
        note="column-count feasibility of the order-m compound condition, m = R-K+2",
    )
    return out
