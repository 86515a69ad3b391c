"""Shared parameter contexts for the test suite.

Three contexts exercise qualitatively different corners: the symmetric dense
limit (alpha = 1/2, p = 1, unit moments), an asymmetric integer context with
growing moments, and an asymmetric context with non-integer rationals
everywhere.  ``context(i, count)`` returns (params, moments) with ``count``
even moments available.
"""

from fractions import Fraction as F

from bipcorr.model import ModelParams, MomentSequence

_CTX3_MOMENTS = [F(1, 2), F(3), F(7, 5), F(2), F(11, 3), F(9, 4), F(5), F(1, 7)]

CONTEXT_IDS = (1, 2, 3)


def context(index: int, count: int = 5):
    if index == 1:
        return ModelParams(F(1, 2), F(1)), MomentSequence([F(1)] * count)
    if index == 2:
        return (
            ModelParams(F(1, 3), F(2)),
            MomentSequence([F(j + 1) for j in range(1, count + 1)]),
        )
    if index == 3:
        if count > len(_CTX3_MOMENTS):
            raise ValueError(f"context 3 provides at most {len(_CTX3_MOMENTS)} moments")
        return ModelParams(F(2, 3), F(5, 2)), MomentSequence(_CTX3_MOMENTS[:count])
    raise ValueError(f"no context {index}")


# Coefficients frozen from the enumeration oracle; the recurrence engine must
# reproduce them exactly.  Keys are (k, m) with k <= m; both orders hold by
# symmetry.
ORACLE_TABLES = {
    1: {
        (2, 2): F(1),
        (2, 4): F(3),
        (4, 4): F(11),
        (2, 6): F(43, 4),
        (4, 6): F(177, 4),
        (2, 8): F(43),
    },
    2: {
        (2, 2): F(4, 3),
        (2, 4): F(56, 9),
        (4, 4): F(33),
        (2, 6): F(283, 9),
        (4, 6): F(4819, 27),
        (2, 8): F(13675, 81),
    },
    3: {
        (2, 2): F(16, 15),
        (2, 4): F(1424, 1125),
        (4, 4): F(1552, 375),
        (2, 6): F(5884, 1125),
        (4, 6): F(65572, 5625),
        (2, 8): F(645464, 50625),
    },
}
