"""Finite-size Monte Carlo and exact small-N evaluation of the correlators.

The limit coefficient n_{k,m} equals lim_N N * Cov(M_k, M_m), where
M_k = Tr(A^k) / N is the k-th spectral moment of one sampled matrix.  This
module measures that covariance at finite N, providing the third, statistical
route to the same numbers, plus an exact rational evaluation for tiny N used
to validate the sampler itself.

Sampling layout
---------------
A sampled matrix is determined by (seed, sample_index) alone.  Each sample
gets its own counter-based generator (Philox) keyed by the pair, and draws,
in this fixed order: presence uniforms for all cross pairs (row-major), then
weights for all cross pairs (row-major).  Worker threads therefore cannot
affect any sampled value, and estimates are bit-identical for any thread
count.

Spectral moments
----------------
The nonzero spectrum of a bipartite matrix is symmetric: the eigenvalues are
plus/minus the singular values of the cross block.  ``trace_moments`` with
``part_size`` set uses that block's singular values directly, which makes odd
moments exactly zero instead of rounding noise; without ``part_size`` it
falls back to a full symmetric eigendecomposition for arbitrary input.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .model import InvalidParamsError, ModelParams
from .rational import parse_scalar

_MASK64 = (1 << 64) - 1


class EigensolverError(RuntimeError):
    pass


class FiniteSizeCapError(ValueError):
    code = "finite_size_cap"


class WeightDistribution:
    """Symmetric weight law: sampler plus a printable name.

    Supported specs: ``rademacher``, ``constant:c``, ``gaussian:s``,
    ``two-point:v1,q,v2`` (value v1 with probability q, else v2; q and the
    values are rational literals).
    """

    def __init__(self, name: str):
        base, _, arg = name.partition(":")
        base = base.strip()
        self.name = name
        self._kind = base
        if base == "rademacher":
            if arg:
                raise ValueError("rademacher takes no argument")
        elif base == "constant":
            self._c = float(parse_scalar(arg))
        elif base == "gaussian":
            self._sigma = float(parse_scalar(arg))
        elif base == "two-point":
            parts = arg.split(",")
            if len(parts) != 3:
                raise ValueError("two-point needs v1,q,v2")
            self._v1, self._q, self._v2 = (parse_scalar(s) for s in parts)
            if not 0 <= self._q <= 1:
                raise ValueError(f"two-point probability out of range: {self._q}")
        else:
            raise ValueError(f"unknown weight distribution: {name!r}")

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self._kind == "rademacher":
            return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
        if self._kind == "constant":
            return np.full(shape, self._c)
        if self._kind == "gaussian":
            return rng.standard_normal(shape) * self._sigma
        u = rng.random(shape)
        return np.where(u < float(self._q), float(self._v1), float(self._v2))

    def two_point_values(self):
        """(v1, q, v2) as rationals; only for two-point laws."""
        if self._kind != "two-point":
            raise ValueError("not a two-point distribution")
        return self._v1, self._q, self._v2


@dataclass(frozen=True)
class EnsembleSpec:
    """One finite ensemble: size, limit parameters, weight law, seed."""

    matrix_size: int
    params: ModelParams
    dist: WeightDistribution
    seed: int

    @property
    def part1_size(self) -> int:
        alpha = Fraction(self.params.alpha)
        return (alpha.numerator * self.matrix_size) // alpha.denominator


def validate_ensemble(spec: EnsembleSpec) -> None:
    N = spec.matrix_size
    if N < 1:
        raise InvalidParamsError("bad_matrix_size", f"matrix size must be >= 1, got {N}")
    if not 0 < spec.params.alpha < 1:
        raise InvalidParamsError(
            "alpha_out_of_range", f"alpha out of range: {spec.params.alpha}"
        )
    if not 1 <= spec.params.p <= N:
        raise InvalidParamsError(
            "p_out_of_range", f"need 1 <= p <= N for finite size N={N}, got p={spec.params.p}"
        )
    if spec.seed < 0:
        raise InvalidParamsError("bad_seed", f"seed must be >= 0, got {spec.seed}")


def sample_matrix(spec: EnsembleSpec, sample_index: int) -> np.ndarray:
    """The matrix for (spec.seed, sample_index), independent of call history."""
    N = spec.matrix_size
    n1 = spec.part1_size
    n2 = N - n1
    key = np.array([spec.seed & _MASK64, sample_index & _MASK64], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    present = rng.random((n1, n2)) < float(spec.params.p) / N
    weights = spec.dist.sample(rng, (n1, n2))
    block = np.where(present, weights, 0.0) / math.sqrt(float(spec.params.p))
    A = np.zeros((N, N))
    A[:n1, n1:] = block
    A[n1:, :n1] = block.T
    return A


def trace_moments(A: np.ndarray, kmax: int, part_size: Optional[int] = None) -> np.ndarray:
    """Spectral moments M_k = Tr(A^k)/N for k = 1..kmax (index k-1)."""
    N = A.shape[0]
    out = np.zeros(kmax)
    if part_size is None:
        try:
            eigenvalues = np.linalg.eigvalsh(A)
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(f"eigendecomposition failed: {exc}") from exc
        for k in range(1, kmax + 1):
            out[k - 1] = np.sum(eigenvalues**k) / N
        return out
    try:
        singular = np.linalg.svd(A[:part_size, part_size:], compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"singular value decomposition failed: {exc}") from exc
    for k in range(2, kmax + 1, 2):
        out[k - 1] = 2.0 * np.sum(singular**k) / N
    return out


@dataclass(frozen=True)
class MCEstimate:
    """Batched estimate of N * Cov(M_k, M_m) at one finite size."""

    k: int
    m: int
    matrix_size: int
    samples: int
    batches: int
    mean: float
    stderr: float


def estimate_correlators(
    spec: EnsembleSpec,
    pairs: Sequence,
    samples: int,
    batches: int = 20,
    threads: int = 1,
) -> list:
    """One estimate per (k, m) pair, all from the same sample stream.

    The standard error comes from splitting the stream into ``batches``
    contiguous batches and treating the per-batch covariances as independent
    measurements; ``batches`` is clamped so every batch holds at least two
    samples.
    """
    validate_ensemble(spec)
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    for k, m in pairs:
        if k < 1 or m < 1:
            raise ValueError(f"moment indices must be >= 1, got ({k}, {m})")
    kmax = max(max(k, m) for k, m in pairs)
    even_needed = any(k % 2 == 0 and m % 2 == 0 for k, m in pairs)

    if even_needed:
        n1 = spec.part1_size

        def worker(index: int) -> np.ndarray:
            return trace_moments(sample_matrix(spec, index), kmax, part_size=n1)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(worker, range(samples), chunksize=16))
        else:
            rows = [worker(index) for index in range(samples)]
        moments = np.vstack(rows)

    batches_eff = max(1, min(batches, samples // 2))
    boundaries = np.array_split(np.arange(samples), batches_eff)
    out = []
    for k, m in pairs:
        if k % 2 != 0 or m % 2 != 0:
            # Odd moments vanish sample by sample (bipartite symmetry), so
            # the covariance is exactly zero; no sampling required.
            out.append(MCEstimate(k, m, spec.matrix_size, samples, batches_eff, 0.0, 0.0))
            continue
        x = moments[:, k - 1]
        y = moments[:, m - 1]
        values = []
        for chunk in boundaries:
            xc = x[chunk]
            yc = y[chunk]
            cov = float(np.sum((xc - xc.mean()) * (yc - yc.mean())) / (len(chunk) - 1))
            values.append(spec.matrix_size * cov)
        values = np.array(values)
        mean = float(values.mean())
        if batches_eff > 1:
            stderr = float(values.std(ddof=1) / math.sqrt(batches_eff))
        else:
            stderr = 0.0
        out.append(MCEstimate(k, m, spec.matrix_size, samples, batches_eff, mean, stderr))
    return out


def estimate_correlator(
    spec: EnsembleSpec, k: int, m: int, samples: int, batches: int = 20, threads: int = 1
) -> MCEstimate:
    return estimate_correlators(spec, [(k, m)], samples, batches=batches, threads=threads)[0]


# ---------------------------------------------------------------------------
# Exact finite-N correlator for two-point weights


def _matmul(a, b):
    rows = len(a)
    inner = len(b)
    cols = len(b[0]) if inner else 0
    return [
        [sum(a[i][t] * b[t][j] for t in range(inner)) for j in range(cols)]
        for i in range(rows)
    ]


def _trace(a) -> Fraction:
    return sum((a[i][i] for i in range(len(a))), Fraction(0))


def exact_finite_N(
    N: int,
    params: ModelParams,
    two_point: tuple,
    k: int,
    m: int,
) -> Fraction:
    """N * Cov(M_k, M_m) summed exactly over all edge configurations.

    ``two_point`` is (v1, q, v2): each present edge carries weight v1 with
    probability q, else v2.  Feasible only for N <= 6 (the configuration
    space is exponential in the number of cross pairs).
    """
    if N < 1:
        raise InvalidParamsError("bad_matrix_size", f"matrix size must be >= 1, got {N}")
    if N > 6:
        raise FiniteSizeCapError(
            f"exact finite-size evaluation is capped at N = 6, got N = {N}"
        )
    if not 0 < params.alpha < 1:
        raise InvalidParamsError("alpha_out_of_range", f"alpha out of range: {params.alpha}")
    if not 1 <= params.p <= N:
        raise InvalidParamsError(
            "p_out_of_range", f"need 1 <= p <= N for finite size N={N}, got p={params.p}"
        )
    if k < 1 or m < 1:
        raise ValueError(f"moment indices must be >= 1, got ({k}, {m})")
    if k % 2 != 0 or m % 2 != 0:
        return Fraction(0)

    v1, q, v2 = (Fraction(x) for x in two_point)
    if not 0 <= q <= 1:
        raise InvalidParamsError("bad_two_point", f"two-point probability out of range: {q}")
    p = Fraction(params.p)
    present = p / N
    states = [(Fraction(0), 1 - present)]
    if v1 == v2:
        states.append((v1, present))
    else:
        states.append((v1, present * q))
        states.append((v2, present * (1 - q)))
    states = [(value, prob) for value, prob in states if prob != 0]

    alpha = Fraction(params.alpha)
    n1 = (alpha.numerator * N) // alpha.denominator
    n2 = N - n1
    pair_count = n1 * n2

    jk, jm = k // 2, m // 2
    jmax = max(jk, jm)
    scale_k = Fraction(1) / (N * p**jk)
    scale_m = Fraction(1) / (N * p**jm)

    mean_k = mean_m = mean_km = Fraction(0)
    from itertools import product as _product

    for assignment in _product(states, repeat=pair_count):
        prob = Fraction(1)
        for _, state_prob in assignment:
            prob *= state_prob
        X = [
            [assignment[i * n2 + j][0] for j in range(n2)]
            for i in range(n1)
        ]
        Xt = [[X[i][j] for i in range(n1)] for j in range(n2)]
        gram = _matmul(X, Xt)  # n1 x n1; Tr(A^2j) = 2 * Tr(gram^j) before scaling
        traces = {}
        power = gram
        for j in range(1, jmax + 1):
            if j > 1:
                power = _matmul(power, gram)
            traces[j] = 2 * _trace(power)
        tk = traces[jk] * scale_k
        tm = traces[jm] * scale_m
        mean_k += prob * tk
        mean_m += prob * tm
        mean_km += prob * tk * tm
    return N * (mean_km - mean_k * mean_m)
