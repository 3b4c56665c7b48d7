"""Pure-numpy scoring kernel (fallback when the extension is unavailable)."""

import numpy as np


def score_block(values, member, weights):
    """Weighted mismatch score of every row against one query.

    values:  int32 (n, a) matrix of value codes; Null is encoded as the last
             (always-zero) column index of ``member``.
    member:  uint8 (a, d) membership table, member[j, x] == 1 iff value x is
             in the query predicate of attribute j.
    weights: float64 (a,) positive weights.

    The accumulation runs attribute by attribute in index order; do not
    replace it with a single vectorized reduction, tie detection relies on
    the fixed summation order.
    """
    n, a = values.shape
    scores = np.zeros(n, dtype=np.float64)
    for j in range(a):
        scores += weights[j] * (1.0 - member[j, values[:, j]])
    return scores
