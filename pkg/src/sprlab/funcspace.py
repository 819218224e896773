"""Locally constant functions on ordinal intervals [1, tau].

A StepFun is a finite list of clopen pieces (end_{i-1}, end_i] with constant
scalar values, the last end being tau.  Such functions are continuous, are
closed under all lattice and algebra operations used elsewhere in the
package, and are dense among continuous functions on the interval, so every
computation here is exact up to floating-point scalar error.

Values are immutable; operations return new objects and never mutate.  The
random generator is always an explicit argument.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

from .ordinal import (
    ZERO,
    ONE,
    Ordinal,
    add,
    cb_rank,
    from_int,
    left_subtract,
    mul_nat,
    omega_pow,
    ordinal_from_json,
    ordinal_to_json,
    predecessor,
)

__all__ = [
    "FuncSpaceError",
    "FieldError",
    "DomainError",
    "Scalar",
    "StepFun",
    "WitnessPoint",
    "REAL",
    "COMPLEX",
    "eval_at",
    "sup_norm",
    "linear_combine",
    "modulus",
    "meet",
    "join",
    "pointwise_mul",
    "conjugate",
    "re_part",
    "restrict",
    "assemble",
    "indicator_interval",
    "indicator_point",
    "constant",
    "random_stepfun",
    "random_point",
    "approx_equal",
    "common_refinement",
    "validate_invariants",
    "stepfun_to_json",
    "stepfun_from_json",
]

REAL = "real"
COMPLEX = "complex"
_FIELDS = (REAL, COMPLEX)


class FuncSpaceError(Exception):
    """Base class for function-space errors."""


class FieldError(FuncSpaceError):
    """Scalar-field misuse: mismatched tags, or a lattice op on complex data."""


class DomainError(FuncSpaceError):
    """Bad interval bounds, mismatched tops, or a point outside the domain."""


def _ord(x: Union[Ordinal, int], name: str = "ordinal") -> Ordinal:
    if isinstance(x, Ordinal):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return from_int(x)
    raise TypeError(f"{name} must be an Ordinal or int, got {type(x).__name__}")


def _check_field(field: str) -> str:
    if field not in _FIELDS:
        raise FieldError(f"unknown field tag {field!r}")
    return field


@dataclass(frozen=True)
class Scalar:
    """A double-precision scalar tagged with its field.

    Real-tagged scalars always carry a zero imaginary part; the constructor
    enforces it.
    """

    field: str
    re: float
    im: float = 0.0

    def __post_init__(self):
        _check_field(self.field)
        object.__setattr__(self, "re", float(self.re))
        object.__setattr__(self, "im", float(self.im))
        if self.field == REAL and self.im != 0.0:
            raise FieldError("real scalars cannot have an imaginary part")

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def of(cls, field: str, z: Union[complex, float, int, "Scalar"]) -> "Scalar":
        if isinstance(z, Scalar):
            if z.field != field:
                raise FieldError(f"expected a {field} scalar, got {z.field}")
            return z
        z = complex(z)
        return cls(field, z.real, z.imag)

    def to_json(self) -> list:
        return [self.re, self.im]


@dataclass(frozen=True)
class WitnessPoint:
    """A codomain point certifying where an embedding exposes source values.

    kind is "plain" for points carrying (f(s)+g(t))/2 and "rotated" for the
    quarter-turn variant; source records the pair (s, t) it came from.
    """

    point: Ordinal
    kind: str
    source: Tuple[Ordinal, Ordinal]

    def __post_init__(self):
        if self.kind not in ("plain", "rotated"):
            raise DomainError(f"unknown witness kind {self.kind!r}")


def _coerce_value(field: str, v) -> complex:
    if isinstance(v, Scalar):
        if v.field != field:
            raise FieldError(f"expected a {field} value, got {v.field}")
        return v.value
    z = complex(v)
    if field == REAL and z.imag != 0.0:
        raise FieldError("real functions cannot take complex values")
    return z


class StepFun:
    """A locally constant function on [1, top], stored as canonical pieces.

    ``ends`` and ``values`` are parallel tuples; piece i is constant on the
    clopen interval (ends[i-1], ends[i]] with ends[-1] == top (and an
    implicit 0 before the first end).  Construction validates that ends are
    strictly increasing and end at top, and merges adjacent equal values, so
    two StepFuns are pointwise equal iff they compare structurally equal.
    """

    __slots__ = ("field", "top", "ends", "values", "_end_keys", "_hash_cache")

    def __init__(self, field: str, top: Union[Ordinal, int], pieces: Iterable):
        field = _check_field(field)
        top = _ord(top, "top")
        if top < ONE:
            raise DomainError("top must be at least 1")
        m_ends: list = []
        m_vals: list = []
        prev_key = None
        for piece in pieces:
            end, value = piece
            end = _ord(end, "piece end")
            val = _coerce_value(field, value)
            if prev_key is not None and end.key <= prev_key:
                raise DomainError("piece ends must be strictly increasing")
            prev_key = end.key
            if m_vals and m_vals[-1] == val:
                m_ends[-1] = end
            else:
                m_ends.append(end)
                m_vals.append(val)
        if not m_ends:
            raise DomainError("a StepFun needs at least one piece")
        if m_ends[-1] != top:
            raise DomainError(f"last piece must end at top ({top}), got {m_ends[-1]}")
        self.field = field
        self.top = top
        self.ends = tuple(m_ends)
        self.values = tuple(m_vals)
        self._end_keys = [e.key for e in m_ends]
        self._hash_cache = None

    @classmethod
    def _trusted(cls, field: str, top: Ordinal, ends: tuple, values: tuple) -> "StepFun":
        # Fast path for internal callers that guarantee canonical pieces.
        self = object.__new__(cls)
        self.field = field
        self.top = top
        self.ends = ends
        self.values = values
        self._end_keys = [e.key for e in ends]
        self._hash_cache = None
        return self

    def eval(self, p: Union[Ordinal, int]) -> complex:
        """Raw value at p, for 1 <= p <= top."""
        p = _ord(p, "point")
        if p < ONE or p > self.top:
            raise DomainError(f"{p} is outside [1, {self.top}]")
        return self.values[bisect_left(self._end_keys, p.key)]

    @property
    def piece_count(self) -> int:
        return len(self.ends)

    def pieces(self) -> Iterable[Tuple[Ordinal, complex]]:
        return zip(self.ends, self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFun):
            return NotImplemented
        return (
            self.field == other.field
            and self.top == other.top
            and self.ends == other.ends
            and self.values == other.values
        )

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self) -> int:
        h = self._hash_cache
        if h is None:
            h = hash((self.field, self.top, self.ends, self.values))
            self._hash_cache = h
        return h

    def __repr__(self) -> str:
        inside = ", ".join(f"({e}]={v}" for e, v in self.pieces())
        return f"StepFun<{self.field}>[1,{self.top}]{{{inside}}}"


def constant(top: Union[Ordinal, int], value, field: str = REAL) -> StepFun:
    """The constant function on [1, top]."""
    return StepFun(field, top, [(top, value)])


def eval_at(f: StepFun, p: Union[Ordinal, int]) -> Scalar:
    """Value of f at p as a tagged Scalar; p must lie in [1, f.top]."""
    z = f.eval(p)
    return Scalar(f.field, z.real, z.imag)


def sup_norm(f: StepFun) -> float:
    """Supremum norm: every piece is attained, so the max over values is exact."""
    return max(abs(v) for v in f.values)


def common_refinement(fs: Sequence[StepFun]) -> Tuple[Tuple[Ordinal, ...], list]:
    """Shared partition of a family on one domain.

    Returns (ends, rows) where ends is the union of all piece ends and
    rows[j] is the tuple of values of fs[j] on each refined piece.
    """
    if not fs:
        raise DomainError("need at least one function")
    top = fs[0].top
    for f in fs[1:]:
        if f.top != top:
            raise DomainError("functions live on different intervals")
        if f.field != fs[0].field:
            raise FieldError("functions have different scalar fields")
    seen = {}
    for f in fs:
        for e in f.ends:
            seen.setdefault(e.key, e)
    ends = tuple(seen[k] for k in sorted(seen))
    rows = []
    for f in fs:
        ptr = 0
        vals = []
        for e in ends:
            while f._end_keys[ptr] < e.key:
                ptr += 1
            vals.append(f.values[ptr])
        rows.append(tuple(vals))
    return ends, rows


def _from_refined(field: str, top: Ordinal, ends, values) -> StepFun:
    return StepFun(field, top, zip(ends, values))


def linear_combine(coeffs: Sequence, fs: Sequence[StepFun]) -> StepFun:
    """Pointwise sum of coeffs[i] * fs[i]; all inputs share field and top."""
    if len(coeffs) != len(fs):
        raise DomainError("one coefficient per function")
    if not fs:
        raise DomainError("need at least one function")
    field = fs[0].field
    cs = [_coerce_value(field, c) for c in coeffs]
    ends, rows = common_refinement(fs)
    out = [sum(c * row[i] for c, row in zip(cs, rows)) for i in range(len(ends))]
    return _from_refined(field, fs[0].top, ends, out)


def modulus(f: StepFun) -> StepFun:
    """|f|, pointwise; always real-tagged."""
    return StepFun(REAL, f.top, zip(f.ends, (abs(v) for v in f.values)))


def _binary(f: StepFun, g: StepFun, op) -> StepFun:
    ends, (vf, vg) = common_refinement([f, g])
    return _from_refined(f.field, f.top, ends, [op(a, b) for a, b in zip(vf, vg)])


def meet(f: StepFun, g: StepFun) -> StepFun:
    """Pointwise minimum; defined for real functions only."""
    if f.field != REAL or g.field != REAL:
        raise FieldError("meet needs real values; take modulus first")
    return _binary(f, g, lambda a, b: a if a.real <= b.real else b)


def join(f: StepFun, g: StepFun) -> StepFun:
    """Pointwise maximum; defined for real functions only."""
    if f.field != REAL or g.field != REAL:
        raise FieldError("join needs real values; take modulus first")
    return _binary(f, g, lambda a, b: a if a.real >= b.real else b)


def pointwise_mul(f: StepFun, g: StepFun) -> StepFun:
    return _binary(f, g, lambda a, b: a * b)


def conjugate(f: StepFun) -> StepFun:
    return StepFun(f.field, f.top, zip(f.ends, (v.conjugate() for v in f.values)))


def re_part(f: StepFun) -> StepFun:
    """Pointwise real part; always real-tagged."""
    return StepFun(REAL, f.top, zip(f.ends, (complex(v.real, 0.0) for v in f.values)))


def restrict(f: StepFun, lo: Union[Ordinal, int], hi: Union[Ordinal, int]) -> StepFun:
    """Restriction of f to the clopen interval (lo, hi], re-indexed to start at 1.

    Requires 0 <= lo < hi <= f.top.  The result lives on
    [1, left_subtract(lo, hi)] and satisfies
    eval(result, p) == eval(f, add(lo, p)) across its domain.
    """
    lo, hi = _ord(lo, "lo"), _ord(hi, "hi")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got {lo} and {hi}")
    if hi > f.top:
        raise DomainError(f"{hi} is beyond the domain end {f.top}")
    if lo == ZERO and hi == f.top:
        return f
    new_top = left_subtract(lo, hi)
    start = bisect_right(f._end_keys, lo.key)
    ends = []
    vals = []
    for i in range(start, len(f.ends)):
        e = f.ends[i]
        if e >= hi:
            ends.append(new_top)
            vals.append(f.values[i])
            break
        ends.append(left_subtract(lo, e))
        vals.append(f.values[i])
    # A restriction of canonical pieces is canonical: kept ends stay strictly
    # increasing under the shift and adjacent values still differ.
    return StepFun._trusted(f.field, new_top, tuple(ends), tuple(vals))


def assemble(
    top: Union[Ordinal, int],
    blocks: Sequence[Tuple],
    tail_rule=None,
    field: Optional[str] = None,
) -> StepFun:
    """Glue functions on disjoint clopen intervals into one StepFun on [1, top].

    Each block is (lo, hi, content) placing content on (lo, hi]: a StepFun
    content must live on [1, left_subtract(lo, hi)] and is translated there,
    a scalar content is a constant.  Any part of (0, top] not covered takes
    the tail_rule constant; a gap without tail_rule is an error, as are
    overlapping or degenerate (lo == hi) blocks.  The field is inferred from
    the first StepFun block unless given explicitly.
    """
    top = _ord(top, "top")
    if field is None:
        for _, _, content in blocks:
            if isinstance(content, StepFun):
                field = content.field
                break
        else:
            raise FieldError("no StepFun block to infer the field from; pass field=")
    field = _check_field(field)

    norm = []
    for lo, hi, content in blocks:
        lo, hi = _ord(lo, "block lo"), _ord(hi, "block hi")
        if lo == hi:
            raise DomainError(f"degenerate block at {lo}")
        if lo > hi:
            raise DomainError(f"block bounds out of order: {lo} > {hi}")
        if hi > top:
            raise DomainError(f"block end {hi} is beyond top {top}")
        norm.append((lo, hi, content))
    norm.sort(key=lambda b: b[0].key)

    out = []
    cursor = ZERO

    def fill_gap(upto: Ordinal) -> None:
        if cursor < upto:
            if tail_rule is None:
                raise DomainError(f"gap ({cursor}, {upto}] has no tail rule")
            out.append((upto, _coerce_value(field, tail_rule)))

    for lo, hi, content in norm:
        if lo < cursor:
            raise DomainError(f"blocks overlap near {lo}")
        fill_gap(lo)
        if isinstance(content, StepFun):
            if content.field != field:
                raise FieldError("block field differs from the assembly field")
            span = left_subtract(lo, hi)
            if content.top != span:
                raise DomainError(
                    f"block on ({lo}, {hi}] needs a function on [1, {span}], "
                    f"got [1, {content.top}]"
                )
            for e, v in content.pieces():
                out.append((add(lo, e), v))
        else:
            out.append((hi, _coerce_value(field, content)))
        cursor = hi
    fill_gap(top)
    return StepFun(field, top, out)


def indicator_interval(
    top: Union[Ordinal, int], lo: Union[Ordinal, int], hi: Union[Ordinal, int], field: str = REAL
) -> StepFun:
    """Characteristic function of the clopen interval (lo, hi] inside [1, top]."""
    top, lo, hi = _ord(top, "top"), _ord(lo, "lo"), _ord(hi, "hi")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got {lo} and {hi}")
    if hi > top:
        raise DomainError(f"{hi} is beyond top {top}")
    pieces = []
    if lo > ZERO:
        pieces.append((lo, 0.0))
    pieces.append((hi, 1.0))
    if hi < top:
        pieces.append((top, 0.0))
    return StepFun(field, top, pieces)


def indicator_point(top: Union[Ordinal, int], p: Union[Ordinal, int], field: str = REAL) -> StepFun:
    """Characteristic function of the singleton {p}; p must be an isolated point.

    {p} equals the clopen interval (p-1, p] exactly when p is a successor,
    which is the cb_rank(p) == 0 condition.
    """
    top, p = _ord(top, "top"), _ord(p, "p")
    if p < ONE or p > top:
        raise DomainError(f"{p} is outside [1, {top}]")
    if cb_rank(p) != ZERO:
        raise DomainError(f"{p} is a limit point; its singleton is not clopen")
    return indicator_interval(top, predecessor(p), p, field)


def approx_equal(f: StepFun, g: StepFun, tol: float = 1e-12) -> bool:
    """Pointwise agreement within tol over the common refinement."""
    if f.top != g.top or f.field != g.field:
        return False
    _, (vf, vg) = common_refinement([f, g])
    return all(abs(a - b) <= tol for a, b in zip(vf, vg))


def validate_invariants(f: StepFun) -> None:
    """Re-check the representation invariants from the raw data; raises on failure."""
    if f.field not in _FIELDS:
        raise FuncSpaceError("bad field tag")
    if not f.ends or f.ends[-1] != f.top:
        raise FuncSpaceError("last end must equal top")
    for a, b in zip(f.ends, f.ends[1:]):
        if not a < b:
            raise FuncSpaceError("ends must increase strictly")
    for a, b in zip(f.values, f.values[1:]):
        if a == b:
            raise FuncSpaceError("adjacent equal values are not canonical")
    if f.field == REAL and any(v.imag != 0.0 for v in f.values):
        raise FuncSpaceError("real function carries imaginary values")


# -- randomized generation ---------------------------------------------------


def _random_at_most(rng, bound: Ordinal) -> Ordinal:
    """A random ordinal in [0, bound], biased toward structural variety."""
    if bound == ZERO or rng.random() < 0.12:
        return bound
    terms = bound.terms
    i = int(rng.integers(0, len(terms)))
    exp, coeff = terms[i]
    head = terms[:i]
    c2 = int(rng.integers(0, coeff))
    if c2:
        head = head + ((exp, c2),)
    acc = ZERO
    for e, c in head:
        acc = add(acc, mul_nat(omega_pow(e), c))
    return add(acc, _random_tail_below_pow(rng, exp))


def _random_tail_below_pow(rng, exp: Ordinal) -> Ordinal:
    """A random ordinal strictly below w^exp (0 when exp is 0)."""
    if exp == ZERO:
        return ZERO
    n_terms = int(rng.integers(0, 3))
    if n_terms == 0:
        return ZERO
    picked = {}
    for _ in range(n_terms):
        e = _random_at_most(rng, exp)
        if e >= exp:
            e = ZERO
        picked[e.key] = e
    acc = ZERO
    for k in sorted(picked, reverse=True):
        acc = add(acc, mul_nat(omega_pow(picked[k]), int(rng.integers(1, 4))))
    return acc


def _coerce_point_rank(rng, p: Ordinal, top: Ordinal) -> Ordinal:
    """Rewrite p's tail so its CB rank hits a randomly chosen stratum."""
    r = _random_at_most(rng, cb_rank(top))
    keep = tuple(t for t in p.terms if t[0] > r)
    acc = ZERO
    for e, c in keep:
        acc = add(acc, mul_nat(omega_pow(e), c))
    cand = add(acc, mul_nat(omega_pow(r), int(rng.integers(1, 3))))
    if ONE <= cand <= top:
        return cand
    return omega_pow(r)


def random_stepfun(
    rng,
    top: Union[Ordinal, int],
    field: str = REAL,
    max_pieces: int = 6,
    value_law: Optional[Callable] = None,
) -> StepFun:
    """A random canonical StepFun on [1, top], deterministic in the given rng.

    Breakpoints are stratified so that limit points of every CB rank up to
    cb_rank(top) occur; values default to standard normal components.
    """
    top = _ord(top, "top")
    field = _check_field(field)
    if max_pieces < 1:
        raise DomainError("max_pieces must be at least 1")
    if value_law is None:
        if field == REAL:
            value_law = lambda r: float(r.standard_normal())
        else:
            value_law = lambda r: complex(r.standard_normal(), r.standard_normal())
    want = int(rng.integers(1, max_pieces + 1))
    cuts = {}
    attempts = 0
    while len(cuts) < want - 1 and attempts < 8 * max_pieces:
        attempts += 1
        p = _random_at_most(rng, top)
        if rng.random() < 0.5:
            p = _coerce_point_rank(rng, p, top)
        if ZERO < p < top:
            cuts[p.key] = p
    ends = [cuts[k] for k in sorted(cuts)] + [top]
    return StepFun(field, top, [(e, value_law(rng)) for e in ends])


def random_point(rng, top: Union[Ordinal, int]) -> Ordinal:
    """A random ordinal in [1, top], stratified across CB ranks like the cuts."""
    top = _ord(top, "top")
    p = _random_at_most(rng, top)
    if rng.random() < 0.5:
        p = _coerce_point_rank(rng, p, top)
    return p if p >= ONE else ONE


# -- JSON ---------------------------------------------------------------------


def stepfun_to_json(f: StepFun) -> dict:
    return {
        "field": f.field,
        "top": ordinal_to_json(f.top),
        "pieces": [
            {"end": ordinal_to_json(e), "value": [v.real, v.imag]} for e, v in f.pieces()
        ],
    }


def stepfun_from_json(data: dict) -> StepFun:
    """Parse and fully validate the JSON form, including canonicity."""
    if not isinstance(data, dict):
        raise DomainError("expected an object")
    try:
        field = data["field"]
        top = ordinal_from_json(data["top"])
        raw = data["pieces"]
    except KeyError as missing:
        raise DomainError(f"missing key {missing}") from None
    _check_field(field)
    if not isinstance(raw, list):
        raise DomainError("pieces must be a list")
    pieces = []
    prev = None
    for item in raw:
        if not isinstance(item, dict) or "end" not in item or "value" not in item:
            raise DomainError("each piece needs an end and a value")
        val = item["value"]
        if not isinstance(val, list) or len(val) != 2:
            raise DomainError("values are [re, im] pairs")
        z = complex(float(val[0]), float(val[1]))
        if prev is not None and prev == z:
            raise DomainError("adjacent equal values are not canonical")
        prev = z
        pieces.append((ordinal_from_json(item["end"]), z))
    return StepFun(field, top, pieces)
