"""Pure-NumPy implementation of the hot row-block kernel.

``row_block`` computes one nonredundant row of the determinant-augmented
unfolding restricted to the symmetric subspace.  The row is indexed by

* strictly increasing first-mode indices ``i_idx`` (length m) and
  second-mode indices ``j_idx`` (length m) feeding the m x m slice minors,
* ``l`` free index pairs ``(free_i[p], free_j[p])`` multiplying in plain
  tensor entries.

For each multiset of third-mode indices the raw products are folded
through ``sym_index`` (flat k-tuple -> multiset position) and scaled by
``col_scale``.  The Cython twin in ``_cyops.pyx`` computes the identical
quantity; keep the two in sync.
"""

from functools import reduce

import numpy as np


def row_block(t, i_idx, j_idx, free_i, free_j, perms, signs, sym_index, col_scale, out):
    m = len(i_idx)
    sub = t[np.ix_(i_idx, j_idx)]  # (m, m, K); sub[a, b] = t[i_a, j_b, :]
    det = None
    for p, sgn in zip(perms, signs):
        term = reduce(np.multiply.outer, (sub[p[b], b] for b in range(m)))
        det = sgn * term if det is None else det + sgn * term
    rho = det.reshape(-1)
    for fi, fj in zip(free_i, free_j):
        rho = np.multiply.outer(rho, t[fi, fj]).reshape(-1)
    folded = np.bincount(sym_index, weights=rho, minlength=col_scale.shape[0])
    np.multiply(folded, col_scale, out=out)
    return out
