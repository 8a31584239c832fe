"""Algebraic canonical polyadic decomposition of dense third-order tensors.

The library decomposes an I x J x K tensor into R rank-1 terms by purely
algebraic means: a structured Gram operator is assembled in streaming
fashion, its null space intersected with the symmetric subspace, and the
factors read off a generalized eigendecomposition; the same machinery
provides checkable uniqueness certificates.  See README.md for the CLI
(``cpd3 decompose/certify/bench``) and the file formats.
"""

from ._kernels import BACKEND as kernel_backend
from ._kernels import available_backends
from .algebraic import (
    CpdResult,
    FMatrix,
    algorithm1,
    algorithm2,
    als_baseline,
    auto_l,
    decompose_at_level,
    recover_AB,
    recover_C_from_F,
)
from .conditions import (
    Bound,
    UniquenessReport,
    check_kruskal,
    check_phi_u,
    check_uniqueness,
    generic_bounds,
)
from .core import (
    DEFAULT_RANK_TOL,
    FactorTriple,
    MatchReport,
    Tensor3,
    best_rank1,
    compound,
    contract_mode3,
    k_rank,
    khatri_rao,
    match_factors,
    mode3_compress,
    numerical_rank,
    synthesize,
    unfold_r10,
)
from .errors import (
    AllLevelsRejectedError,
    ConditionViolationError,
    CpdError,
    DegenerateInputError,
    InvalidArgumentError,
    MalformedFileError,
    NotAPowerError,
    RankDeficiencyError,
    RecoveryFailureError,
    ResourceLimitError,
    VerificationFailureError,
)
from .gevd import PencilConfig, gevd_cpd, power_root
from .io import read_factors, read_tensor, write_factors, write_gram, write_tensor
from .kernelspace import KernelBasis, expand_and_fold, sym_kernel
from .structured import (
    GramOperator,
    SymMultiset,
    SymTupleIndex,
    build_rml,
    build_sym_gram,
    count_tuples,
    enumerate_tuples,
    phi,
    s_matrix,
    s_matrix_compressed,
    sym_basis,
)

__version__ = "0.1.0"

__all__ = [
    "AllLevelsRejectedError",
    "Bound",
    "ConditionViolationError",
    "CpdError",
    "CpdResult",
    "DEFAULT_RANK_TOL",
    "DegenerateInputError",
    "FMatrix",
    "FactorTriple",
    "GramOperator",
    "InvalidArgumentError",
    "KernelBasis",
    "MalformedFileError",
    "MatchReport",
    "NotAPowerError",
    "PencilConfig",
    "RankDeficiencyError",
    "RecoveryFailureError",
    "ResourceLimitError",
    "SymMultiset",
    "SymTupleIndex",
    "Tensor3",
    "UniquenessReport",
    "VerificationFailureError",
    "algorithm1",
    "algorithm2",
    "als_baseline",
    "auto_l",
    "available_backends",
    "best_rank1",
    "build_rml",
    "build_sym_gram",
    "check_kruskal",
    "check_phi_u",
    "check_uniqueness",
    "compound",
    "contract_mode3",
    "count_tuples",
    "decompose_at_level",
    "enumerate_tuples",
    "expand_and_fold",
    "generic_bounds",
    "gevd_cpd",
    "k_rank",
    "kernel_backend",
    "khatri_rao",
    "match_factors",
    "mode3_compress",
    "numerical_rank",
    "phi",
    "power_root",
    "read_factors",
    "read_tensor",
    "recover_AB",
    "recover_C_from_F",
    "s_matrix",
    "s_matrix_compressed",
    "sym_basis",
    "sym_kernel",
    "synthesize",
    "unfold_r10",
    "write_factors",
    "write_gram",
    "write_tensor",
]
