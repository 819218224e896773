"""Concrete isometric embeddings built on the interleaving maps.

This module houses four families.  The complex sequence system spans a
copy of c0 inside the functions on [1, w^2] vanishing at the right end.
The diagonal map f -> U(f, f) embeds real functions on [1, w^a] into
[1, w^(a (+) a)].  Its complex variant stacks U(f, f) and U(f, i f) on a
doubled interval.  Constant extension moves functions between ordinal
intervals without touching their values.  Every family ships witness
points, the codomain locations where the embedded function reports plain
or quarter-turn averages of prescribed source values.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .funcspace import (
    COMPLEX,
    REAL,
    StepFun,
    WitnessPoint,
    assemble,
    common_refinement,
)
from .ordinal import (
    OMEGA,
    TWO,
    ZERO,
    Ordinal,
    add,
    from_int,
    mul_nat,
    natural_sum,
    omega_pow,
    power_ceil_exponent,
)
from .overlap import overlap_map, witness_point

__all__ = [
    "EmbeddingError",
    "EmbeddingDomainError",
    "Embedding",
    "c0_basis",
    "c0_sum",
    "c0_witnesses",
    "embed_real",
    "embed_complex",
    "interval_extend",
    "c0_embedding",
    "real_embedding",
    "complex_embedding",
    "interval_embedding",
]


class EmbeddingError(Exception):
    """Base error for the embeddings layer."""


class EmbeddingDomainError(EmbeddingError):
    """An argument lies outside the domain an embedding accepts."""


_OMEGA_SQ = omega_pow(TWO)

_KINDS = ("c0", "real_spr", "complex_spr", "interval_extension")


def _as_exponent(a: Union[Ordinal, int]) -> Ordinal:
    if isinstance(a, Ordinal):
        return a
    if isinstance(a, bool) or not isinstance(a, int):
        raise TypeError("expected an Ordinal or a nonnegative int")
    if a < 0:
        raise EmbeddingDomainError("exponent must be >= 0")
    return from_int(a)


def _index(n, name: str) -> int:
    if isinstance(n, bool) or not isinstance(n, int):
        raise TypeError(f"{name} must be an int")
    if n < 1:
        raise EmbeddingDomainError(f"{name} must be >= 1")
    return n


@dataclass(frozen=True)
class Embedding:
    """An isometric embedding packaged with its witness machinery.

    apply is the underlying map into functions on [1, top].  witnesses
    takes a source pair and returns the codomain points whose values are
    pinned to averages of the pair; each returned point satisfies its
    defining identity for every function in the domain.  spr_constant is
    the stability constant the construction is claimed to achieve, None
    when the claim is a threshold certificate rather than a single
    number, and provenance says where the claim comes from.
    """

    kind: str
    source: str
    top: Ordinal
    apply: Callable[..., StepFun]
    witnesses: Callable[..., Tuple[WitnessPoint, ...]]
    spr_constant: Optional[float]
    provenance: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise EmbeddingDomainError(f"unknown embedding kind {self.kind!r}")


def c0_basis(n: Union[int, bool]) -> StepFun:
    """Nth vector of the complex sequence system on [1, w^2].

    The function takes the value 1 at the integer n, the value 1/2 on the
    block (w*n, w*(n+1)], and the values 1/2 and i/2 at the isolated
    points w*(m-1) + (2n-1) and w*(m-1) + 2n for each m between 2 and n.
    It vanishes everywhere else, in particular at w^2.
    """
    n = _index(n, "n")
    pieces = []
    if n > 1:
        pieces.append((from_int(n - 1), 0.0))
    pieces.append((from_int(n), 1.0))
    pieces.append((OMEGA, 0.0))
    for m in range(2, n + 1):
        base = mul_nat(OMEGA, m - 1)
        pieces.append((add(base, from_int(2 * n - 2)), 0.0))
        pieces.append((add(base, from_int(2 * n - 1)), 0.5))
        pieces.append((add(base, from_int(2 * n)), 0.5j))
        pieces.append((mul_nat(OMEGA, m), 0.0))
    pieces.append((mul_nat(OMEGA, n + 1), 0.5))
    pieces.append((_OMEGA_SQ, 0.0))
    return StepFun(COMPLEX, _OMEGA_SQ, pieces)


@lru_cache(maxsize=64)
def _c0_table(n: int):
    # One shared refinement per dimension keeps repeated sums cheap: the
    # bulk samplers form thousands of combinations of the same basis.
    funs = [c0_basis(k) for k in range(1, n + 1)]
    ends, rows = common_refinement(funs)
    return ends, np.asarray(rows, dtype=complex)


def c0_sum(coeffs: Sequence[complex]) -> StepFun:
    """Combination sum_k coeffs[k-1] * c0_basis(k) as a single StepFun."""
    vec = np.asarray(list(coeffs), dtype=complex)
    if vec.ndim != 1 or vec.size == 0:
        raise EmbeddingDomainError("need a nonempty vector of coefficients")
    ends, table = _c0_table(int(vec.size))
    values = vec @ table
    return StepFun(COMPLEX, _OMEGA_SQ, zip(ends, values.tolist()))


def c0_witnesses(m: int, n: int) -> Tuple[WitnessPoint, ...]:
    """Witness points tying together the sequence entries m and n, m < n.

    Four points come back.  The integers m and n report the entries
    themselves, the point w*m + 2n - 1 reports the plain average of the
    two entries, and w*m + 2n reports the quarter-turn average where the
    second entry is multiplied by i.
    """
    m = _index(m, "m")
    n = _index(n, "n")
    if m >= n:
        raise EmbeddingDomainError(f"pair witnesses need m < n, got {m} >= {n}")
    om, on = from_int(m), from_int(n)
    base = mul_nat(OMEGA, m)
    return (
        WitnessPoint(om, "plain", (om, om)),
        WitnessPoint(on, "plain", (on, on)),
        WitnessPoint(add(base, from_int(2 * n - 1)), "plain", (om, on)),
        WitnessPoint(add(base, from_int(2 * n)), "rotated", (om, on)),
    )


def embed_real(a: Union[Ordinal, int], f: StepFun) -> StepFun:
    """Diagonal interleaving T f = U(f, f) for real f on [1, w^a].

    The result lives on [1, w^(a (+) a)].  T is linear because the
    interleaving is jointly additive and homogeneous, and isometric
    because the witness for the pair (s, s) recovers f(s) exactly while
    the output never exceeds the average cap.
    """
    if f.field != REAL:
        raise EmbeddingDomainError("embed_real takes a real function")
    a = _as_exponent(a)
    return overlap_map(a, a, f, f)


def embed_complex(a: Union[Ordinal, int], f: StepFun) -> StepFun:
    """Two-copy interleaving of complex f on the doubled interval.

    Copy one carries U(f, f) on (0, w^(a (+) a)] and copy two carries
    U(f, i f) on the translate (w^(a (+) a), w^(a (+) a) * 2].  The pair
    witness for (s, t) then reads (f(s) + f(t)) / 2 in copy one, and its
    shift into copy two reads (f(s) + i f(t)) / 2.
    """
    if f.field != COMPLEX:
        raise EmbeddingDomainError("embed_complex takes a complex function")
    a = _as_exponent(a)
    first = overlap_map(a, a, f, f)
    rotated = StepFun._trusted(
        COMPLEX, f.top, f.ends, tuple(1j * v for v in f.values)
    )
    second = overlap_map(a, a, f, rotated)
    half = first.top
    top = mul_nat(half, 2)
    return assemble(top, [(ZERO, half, first), (half, top, second)])


def interval_extend(f: StepFun, b: Union[Ordinal, int]) -> StepFun:
    """Extend f on [1, w^a] to [1, w^b] by the constant f(w^a), a < b.

    The extension is positive, linear, isometric and carries the constant
    one function to the constant one function.  Every source point keeps
    its value, so evaluation at t recovers f(t) for all t up to w^a.
    """
    b = _as_exponent(b)
    a = power_ceil_exponent(f.top)
    if omega_pow(a) != f.top:
        raise EmbeddingDomainError(f"domain top {f.top} is not a power of w")
    if not a < b:
        raise EmbeddingDomainError(f"need a strictly larger target, got {a} -> {b}")
    tail = f.values[-1]
    return assemble(omega_pow(b), [(ZERO, f.top, f)], tail_rule=tail, field=f.field)


def c0_embedding(n: int) -> Embedding:
    """Embedding of complex coefficient vectors of length up to n."""
    n = _index(n, "n")

    def apply(coeffs: Sequence[complex]) -> StepFun:
        vec = list(coeffs)
        if len(vec) > n:
            raise EmbeddingDomainError(f"at most {n} coefficients, got {len(vec)}")
        return c0_sum(vec)

    return Embedding(
        kind="c0",
        source=f"complex coefficient vectors of length <= {n}",
        top=_OMEGA_SQ,
        apply=apply,
        witnesses=c0_witnesses,
        spr_constant=None,
        provenance="sequence system with plain and quarter-turn averaging "
        "points for every index pair; certified through the complex "
        "separation threshold, uniformly in n",
    )


def real_embedding(a: Union[Ordinal, int]) -> Embedding:
    """Diagonal embedding of real functions on [1, w^a]."""
    a = _as_exponent(a)
    top = omega_pow(natural_sum(a, a))

    def apply(f: StepFun) -> StepFun:
        return embed_real(a, f)

    def witnesses(s, t) -> Tuple[WitnessPoint, ...]:
        return (
            witness_point(a, a, s, s),
            witness_point(a, a, t, t),
            witness_point(a, a, s, t),
        )

    return Embedding(
        kind="real_spr",
        source=f"real step functions on [1, {omega_pow(a)}]",
        top=top,
        apply=apply,
        witnesses=witnesses,
        spr_constant=3.0,
        provenance="for unit vectors some witness sees both |Tf| and |Tg| "
        "at or above 1/3, which is the 3-SPR threshold",
    )


def complex_embedding(a: Union[Ordinal, int]) -> Embedding:
    """Two-copy embedding of complex functions on [1, w^a]."""
    a = _as_exponent(a)
    half = omega_pow(natural_sum(a, a))
    top = mul_nat(half, 2)

    def apply(f: StepFun) -> StepFun:
        return embed_complex(a, f)

    def witnesses(s, t) -> Tuple[WitnessPoint, ...]:
        wp = witness_point(a, a, s, t)
        return (wp, WitnessPoint(add(half, wp.point), "rotated", wp.source))

    return Embedding(
        kind="complex_spr",
        source=f"complex step functions on [1, {omega_pow(a)}]",
        top=top,
        apply=apply,
        witnesses=witnesses,
        spr_constant=None,
        provenance="plain averages in the first copy and quarter-turn "
        "averages in the second give every pair the certificate the "
        "complex separation threshold requires, uniformly in the exponent",
    )


def interval_embedding(a: Union[Ordinal, int], b: Union[Ordinal, int]) -> Embedding:
    """Constant-extension embedding from [1, w^a] into [1, w^b]."""
    a = _as_exponent(a)
    b = _as_exponent(b)
    if not a < b:
        raise EmbeddingDomainError(f"need a strictly larger target, got {a} -> {b}")
    dom_top = omega_pow(a)

    def apply(f: StepFun) -> StepFun:
        if f.top != dom_top:
            raise EmbeddingDomainError(f"expected a function on [1, {dom_top}]")
        return interval_extend(f, b)

    def witnesses(s, t) -> Tuple[WitnessPoint, ...]:
        points = []
        for p in (s, t):
            p = p if isinstance(p, Ordinal) else from_int(p)
            if not p <= dom_top:
                raise EmbeddingDomainError(f"{p} is outside [1, {dom_top}]")
            points.append(WitnessPoint(p, "plain", (p, p)))
        return tuple(points)

    return Embedding(
        kind="interval_extension",
        source=f"step functions on [1, {dom_top}]",
        top=omega_pow(b),
        apply=apply,
        witnesses=witnesses,
        spr_constant=None,
        provenance="constant extension is a positive unital isometry that "
        "keeps every source value in place, so stability constants of "
        "embedded subspaces carry over unchanged",
    )
