"""Packed sign-matrix multiplication.

A d x t matrix with +-1 entries is stored in column blocks of width
p = floor(log2 d).  Each block keeps one integer pattern code per row
(bit b of the code is the sign of block column b: 1 -> +1, 0 -> -1).
Multiplying a row vector by one block then costs d bucket additions plus
a fold over the 2**p buckets, instead of d*p multiply-adds.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as _sparse

from . import rng as _rng
from .errors import ParameterError
from .matrix import as_matrix


@dataclass
class MailmanBlock:
    """One column block: width p, one pattern code per input row."""

    p: int
    codes: np.ndarray  # (d,) integers in [0, 2**p)
    scale: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ParameterError("block width p must be at least 1")
        self.codes = np.asarray(self.codes, dtype=np.int64)
        if self.codes.ndim != 1 or self.codes.size == 0:
            raise ParameterError("codes must be a nonempty 1-D integer array")
        if self.codes.min() < 0 or self.codes.max() >= (1 << self.p):
            raise ParameterError(f"codes must lie in [0, 2**{self.p})")

    @property
    def d(self) -> int:
        return self.codes.size


@dataclass
class MailmanPlan:
    """Column blocks covering all t output coordinates of a d x t sign matrix."""

    d: int
    t: int
    blocks: list

    def __post_init__(self):
        if sum(b.p for b in self.blocks) != self.t:
            raise ParameterError("block widths must sum to t")
        for b in self.blocks:
            if b.d != self.d:
                raise ParameterError("all blocks must share the plan's d")


def block_widths(d: int, t: int) -> list:
    """Column-block widths: full blocks of floor(log2 d), then the remainder."""
    if d < 1 or t < 1:
        raise ParameterError("d and t must be positive")
    p_full = max(1, d.bit_length() - 1)
    widths = [p_full] * (t // p_full)
    if t % p_full:
        widths.append(t % p_full)
    return widths


def plan_blocks(d: int, t: int, seed: int) -> list:
    """Sample the pattern codes for every block of a d x t sign matrix.

    Block j draws from the (seed, block j) stream, so blocks can be
    generated independently and in any order.
    """
    scale = 1.0 / math.sqrt(t)
    blocks = []
    for j, p in enumerate(block_widths(d, t)):
        g = _rng.stream(seed, _rng.SIGN_BLOCK, j)
        codes = g.integers(0, 1 << p, size=d, dtype=np.int64)
        blocks.append(MailmanBlock(p=p, codes=codes, scale=scale))
    return blocks


def build_plan(d: int, t: int, seed: int) -> MailmanPlan:
    """Sample a packed d x t sign matrix, scaled by 1/sqrt(t)."""
    if d < 2:
        raise ParameterError("d must be at least 2 to form column blocks")
    if t < 1:
        raise ParameterError("t must be at least 1")
    return MailmanPlan(d=d, t=t, blocks=plan_blocks(d, t, seed))


def fold_buckets(buckets: np.ndarray) -> np.ndarray:
    """Multiply bucket sums by the full 2**p x p sign-pattern matrix.

    Output column b carries sum(+buckets where bit b set) - sum(rest).
    Works on any leading shape; the last axis must have length 2**p.
    The top output uses the high/low halves directly; lower bits reuse
    the running total (merging halves preserves the overall sum), which
    keeps the addition count within 2**(p+1) per row.
    """
    m = buckets.shape[-1]
    p = m.bit_length() - 1
    if m < 2 or m != (1 << p):
        raise ParameterError("bucket axis must have length 2**p with p >= 1")
    out = np.empty(buckets.shape[:-1] + (p,))
    v = buckets
    for b in range(p - 1, 0, -1):
        half = v.shape[-1] // 2
        out[..., b] = v[..., half:].sum(axis=-1)
        v = v[..., :half] + v[..., half:]
    out[..., 0] = v[..., 1] - v[..., 0]
    if p > 1:
        total = v[..., 0] + v[..., 1]
        out[..., 1:] = 2.0 * out[..., 1:] - total[..., None]
    return out


def block_row_multiply(block: MailmanBlock, x) -> np.ndarray:
    """Multiply the row vector x by one packed block: bucket, fold, scale."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != block.d:
        raise ParameterError(f"x must be a length-{block.d} vector")
    buckets = np.zeros(1 << block.p)
    np.add.at(buckets, block.codes, x)
    return block.scale * fold_buckets(buckets)


def block_row_multiply_counted(block: MailmanBlock, x):
    """Scalar reference path for block_row_multiply that counts additions.

    Returns (y, additions) where additions is every floating-point add or
    subtract performed.  The count is at most d + 2**(p+1) per call.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != block.d:
        raise ParameterError(f"x must be a length-{block.d} vector")
    adds = 0
    buckets = [0.0] * (1 << block.p)
    for code, value in zip(block.codes.tolist(), x.tolist()):
        buckets[code] += value
        adds += 1
    out = [0.0] * block.p
    v = buckets
    stashed = []
    for b in range(block.p - 1, 0, -1):
        half = len(v) // 2
        hi_sum = v[half]
        for u in v[half + 1:]:
            hi_sum += u
            adds += 1
        stashed.append((b, hi_sum))
        merged = []
        for lo_val, hi_val in zip(v[:half], v[half:]):
            merged.append(lo_val + hi_val)
            adds += 1
        v = merged
    out[0] = v[1] - v[0]
    adds += 1
    if block.p > 1:
        total = v[0] + v[1]
        adds += 1
        for b, hi_sum in stashed:
            out[b] = 2.0 * hi_sum - total
            adds += 1
    y = np.array([block.scale * value for value in out])
    return y, adds


def project_mailman(a, plan: MailmanPlan) -> np.ndarray:
    """Multiply every row of a by the packed sign matrix: a @ R, scaled.

    Per block: bucket accumulation (column j of a adds into bucket code_j,
    d additions per row), then the fold, then the scale.  The bucket step
    for all blocks runs as a single one-hot sparse product, and blocks of
    equal width fold together.
    """
    a = as_matrix(a)
    if a.shape[1] != plan.d:
        raise ParameterError(f"a has {a.shape[1]} columns, plan expects {plan.d}")
    n = a.shape[0]
    nb = len(plan.blocks)
    offsets = np.concatenate(([0], np.cumsum([1 << b.p for b in plan.blocks])))
    # one nonzero per (input column, block): row j feeds bucket codes[j]
    bucket_cols = np.stack(
        [b.codes + off for b, off in zip(plan.blocks, offsets[:-1])], axis=1
    ).reshape(-1)
    onehot = _sparse.csr_matrix(
        (np.ones(plan.d * nb), bucket_cols, np.arange(plan.d + 1) * nb),
        shape=(plan.d, int(offsets[-1])),
    )
    buckets = np.asarray(a @ onehot)
    out = np.empty((n, plan.t))
    tcol = 0
    i = 0
    while i < nb:
        p = plan.blocks[i].p
        j = i
        while j < nb and plan.blocks[j].p == p:
            j += 1
        g = j - i
        seg = buckets[:, offsets[i]:offsets[j]].reshape(n, g, 1 << p)
        folded = fold_buckets(seg)
        folded *= np.array([b.scale for b in plan.blocks[i:j]])[None, :, None]
        out[:, tcol:tcol + g * p] = folded.reshape(n, g * p)
        tcol += g * p
        i = j
    return out


def densify(plan_or_blocks, scaled: bool = False) -> np.ndarray:
    """Expand packed blocks into the dense d x t sign matrix.

    Entries are +-1 (bit b of a code set -> +1 in block column b), times
    the block scale when scaled=True.
    """
    blocks = plan_or_blocks.blocks if hasattr(plan_or_blocks, "blocks") else plan_or_blocks
    if not blocks:
        raise ParameterError("no blocks to densify")
    d = blocks[0].d
    t = sum(b.p for b in blocks)
    dense = np.empty((d, t))
    offset = 0
    for block in blocks:
        bits = (block.codes[:, None] >> np.arange(block.p)[None, :]) & 1
        cols = bits.astype(np.float64) * 2.0 - 1.0
        if scaled:
            cols *= block.scale
        dense[:, offset:offset + block.p] = cols
        offset += block.p
    return dense
