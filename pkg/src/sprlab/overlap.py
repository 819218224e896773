"""Transfinite overlapping maps between ordinal-interval function spaces.

overlap_map(a, b, f, g) produces a function on [1, w^(a (+) b)] every value of
which is an average (f(s) + g(t)) / 2, arranged so that every pair (s, t) is
represented somewhere (witness_point) and every output point decomposes back
(decompose_point).  The construction recurses through a fixed case table on
the shapes of a and b (zero, successor, limit), shrinking a (+) b at every
step; fundamental sequences are the canonical ones from the ordinal module.

Inputs are locally constant, so all but finitely many recursion branches see
constant restrictions; those collapse to a single tail piece carrying
(f(top) + g(top)) / 2, which keeps every representation finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

from .ordinal import (
    ONE,
    ZERO,
    Ordinal,
    add,
    ceil_div_pow,
    classify,
    format_ordinal,
    from_int,
    fundamental_seq,
    least_seq_index_reaching,
    left_subtract,
    natural_sum,
    omega_pow,
    pow_times,
    power_ceil_exponent,
    predecessor,
    sup_natural_sum,
)
from .funcspace import (
    StepFun,
    WitnessPoint,
    approx_equal,
    linear_combine,
    random_point,
    random_stepfun,
    restrict,
    sup_norm,
)

__all__ = [
    "OverlapError",
    "OverlapDomainError",
    "RecursionBudgetError",
    "DecompositionError",
    "OverlapCase",
    "CaseInterval",
    "PropertyCheck",
    "overlap_map",
    "overlap_case_tree",
    "dump_case_tree",
    "witness_point",
    "decompose_point",
    "check_overlap_properties",
    "recursion_limit",
    "set_recursion_limit",
    "debug_tail_offset",
    "set_debug_tail_offset",
]


class OverlapError(Exception):
    """Base class for overlap-map errors."""


class OverlapDomainError(OverlapError):
    """Inputs do not live on the required intervals, or a point is out of range."""


class RecursionBudgetError(OverlapError):
    """The case recursion exceeded the configured depth cap."""


class DecompositionError(OverlapError):
    """An internally built decomposition failed validation: a bug, never bad input."""


_recursion_limit = 256

# Verification hook: a nonzero offset corrupts every finite-tail constant, so
# the self-check suites must detect it.  Normal operation keeps it at 0.0.
_tail_offset = 0.0


def recursion_limit() -> int:
    return _recursion_limit


def set_recursion_limit(limit: int) -> None:
    global _recursion_limit
    if not isinstance(limit, int) or limit < 1:
        raise OverlapDomainError("recursion limit must be a positive integer")
    _recursion_limit = limit


def debug_tail_offset() -> float:
    return _tail_offset


def set_debug_tail_offset(offset: float) -> None:
    """Install a deliberate error on tail values; only verification code should."""
    global _tail_offset
    _tail_offset = float(offset)


@dataclass(frozen=True)
class CaseInterval:
    """One region of a case decomposition.

    kind is "recurse" for a sub-map block, "constant" for an explicit constant
    region (tails and degenerate strips), and "skipped" for an empty region
    (lo == hi) that the case table mentions but this instance does not need.
    """

    lo: Ordinal
    hi: Ordinal
    kind: str
    note: str = ""


@dataclass(frozen=True)
class OverlapCase:
    """The decomposition instantiated by one overlap_map recursion step."""

    tag: str
    a: Ordinal
    b: Ordinal
    intervals: Tuple[CaseInterval, ...]
    children: Tuple["OverlapCase", ...] = ()

    def validate(self) -> None:
        """Check that the non-skipped intervals tile (0, w^(a (+) b)] in order."""
        cursor = ZERO
        for iv in self.intervals:
            if iv.kind == "skipped":
                if iv.lo != iv.hi:
                    raise DecompositionError(f"skipped interval ({iv.lo}, {iv.hi}] not empty")
                continue
            if iv.lo != cursor:
                raise DecompositionError(
                    f"decomposition gap or overlap at {iv.lo} (expected {cursor})"
                )
            if not iv.lo < iv.hi:
                raise DecompositionError(f"bad interval ({iv.lo}, {iv.hi}]")
            cursor = iv.hi
        top = omega_pow(natural_sum(self.a, self.b))
        if cursor != top:
            raise DecompositionError(f"decomposition stops at {cursor}, not {top}")
        for child in self.children:
            child.validate()

    def to_json(self) -> dict:
        return {
            "tag": self.tag,
            "a": format_ordinal(self.a),
            "b": format_ordinal(self.b),
            "intervals": [
                {
                    "lo": format_ordinal(iv.lo),
                    "hi": format_ordinal(iv.hi),
                    "kind": iv.kind,
                    "note": iv.note,
                }
                for iv in self.intervals
            ],
            "children": [c.to_json() for c in self.children],
        }


def _ord(x: Union[Ordinal, int], name: str) -> Ordinal:
    if isinstance(x, Ordinal):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return from_int(x)
    raise TypeError(f"{name} must be an Ordinal or int")


def _max_break(f: StepFun) -> Ordinal:
    """The largest interior piece end (0 when f is a single constant piece)."""
    return f.ends[-2] if len(f.ends) >= 2 else ZERO


def _cut_index(limit_ord: Ordinal, bound: Ordinal) -> int:
    """Least n >= 1 with w^(limit_ord[n]) >= bound; needs bound < w^limit_ord."""
    if bound == ZERO:
        return 1
    return least_seq_index_reaching(limit_ord, power_ceil_exponent(bound))


def _least_n(pred: Callable[[int], bool]) -> int:
    """Least n >= 1 satisfying a monotone predicate."""
    if pred(1):
        return 1
    hi = 1
    while not pred(hi):
        hi *= 2
        if hi > 1 << 30:  # pragma: no cover - guards a broken predicate
            raise DecompositionError("unbounded search in case decomposition")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


# A segment is (lo, hi, kind, payload, child_case); payload is a StepFun for
# kind "recurse", a complex constant for kind "constant", None for "skipped".
_Seg = Tuple[Ordinal, Ordinal, str, object, Optional[OverlapCase]]


def _finish(tag, a, b, f, g, segs: List[_Seg], record: bool):
    top = omega_pow(natural_sum(a, b))
    cursor = ZERO
    ends: list = []
    vals: list = []
    for lo, hi, kind, payload, _child in segs:
        if kind == "skipped":
            if lo != hi:
                raise DecompositionError(f"skipped interval ({lo}, {hi}] not empty")
            continue
        if lo != cursor or not lo < hi:
            raise DecompositionError(f"gap or overlap at ({lo}, {hi}], cursor {cursor}")
        cursor = hi
        if kind == "constant":
            v = complex(payload)
            if vals and vals[-1] == v:
                ends[-1] = hi
            else:
                ends.append(hi)
                vals.append(v)
            continue
        if add(lo, payload.top) != hi:
            raise DecompositionError(f"block on ({lo}, {hi}] spans [1, {payload.top}]")
        shift = lo != ZERO
        for e, v in zip(payload.ends, payload.values):
            e2 = add(lo, e) if shift else e
            if vals and vals[-1] == v:
                ends[-1] = e2
            else:
                ends.append(e2)
                vals.append(v)
    if cursor != top:
        raise DecompositionError(f"decomposition stops at {cursor}, not {top}")
    result = StepFun._trusted(f.field, top, tuple(ends), tuple(vals))
    case = None
    if record:
        case = OverlapCase(
            tag,
            a,
            b,
            tuple(
                CaseInterval(lo, hi, kind, _seg_note(kind, payload))
                for lo, hi, kind, payload, _ in segs
            ),
            tuple(child for *_x, child in segs if child is not None),
        )
    return result, case


def _seg_note(kind: str, payload) -> str:
    if kind == "constant":
        return f"value {payload}"
    if kind == "recurse":
        return ""
    return "empty"


def _tail_value(f: StepFun, g: StepFun) -> complex:
    return 0.5 * (f.values[-1] + g.values[-1]) + _tail_offset


def _u(a: Ordinal, b: Ordinal, f: StepFun, g: StepFun, depth: int, record: bool,
       memo=None):
    if depth <= 0:
        raise RecursionBudgetError(f"depth cap {_recursion_limit} hit at ({a}, {b})")
    if f.field != g.field:
        raise OverlapDomainError("mixed scalar fields")
    if f.top != omega_pow(a) or g.top != omega_pow(b):
        raise OverlapDomainError(
            f"need domains [1, w^({a})] and [1, w^({b})], got "
            f"[1, {f.top}] and [1, {g.top}]"
        )
    if memo is None:
        return _u_cases(a, b, f, g, depth, record, memo)
    key = (a, b, f, g)
    hit = memo.get(key)
    if hit is not None:
        return hit, None
    result, case = _u_cases(a, b, f, g, depth, record, memo)
    memo[key] = result
    return result, case


def _u_cases(a: Ordinal, b: Ordinal, f: StepFun, g: StepFun, depth: int,
             record: bool, memo):
    if a > b:
        sub, child = _u(b, a, g, f, depth - 1, record, memo)
        case = None
        if record:
            case = OverlapCase(
                "swap", a, b, (CaseInterval(ZERO, sub.top, "recurse"),), (child,)
            )
        return sub, case

    if len(f.values) == 1 and len(g.values) == 1:
        # Finite-tail collapse: with both inputs constant, every region of
        # every case carries the same average, so the whole output does.
        top = omega_pow(natural_sum(a, b))
        value = complex(_tail_value(f, g))
        result = StepFun._trusted(f.field, top, (top,), (value,))
        case = None
        if record:
            case = OverlapCase(
                "tail", a, b, (CaseInterval(ZERO, top, "constant", f"value {value}"),)
            )
        return result, case

    if a == ZERO:
        c = f.values[0]
        result = StepFun._trusted(
            g.field, g.top, g.ends, tuple(0.5 * (c + v) for v in g.values)
        )
        case = None
        if record:
            case = OverlapCase(
                "base", a, b, (CaseInterval(ZERO, g.top, "constant", "half-sum with f(1)"),)
            )
        return result, case

    a_kind, b_kind = classify(a), classify(b)
    if a_kind == "successor" and b_kind == "successor":
        tag = "succ-succ-diag" if a == b else "succ-succ"
        return _case_succ_succ(tag, a, b, f, g, depth, record, memo)
    if a_kind == "successor":
        return _case_succ_limit(a, b, f, g, depth, record, memo)
    if a == b:
        return _case_limit_base(a, b, f, g, depth, record, memo)
    if b_kind == "successor":
        return _case_limit_succ(a, b, f, g, depth, record, memo)
    return _case_limit_limit(a, b, f, g, depth, record, memo)


def _case_succ_succ(tag, a, b, f, g, depth, record, memo):
    alpha, beta = predecessor(a), predecessor(b)
    d1 = add(natural_sum(alpha, beta), ONE)  # block width exponent
    top = omega_pow(natural_sum(a, b))
    n_tail = 1 + max(ceil_div_pow(_max_break(f), alpha), ceil_div_pow(_max_break(g), beta))
    segs: List[_Seg] = []
    for n in range(1, n_tail):
        f_tail = restrict(f, pow_times(alpha, n - 1), f.top)
        g_chunk = restrict(g, pow_times(beta, n - 1), pow_times(beta, n))
        sub1, c1 = _u(a, beta, f_tail, g_chunk, depth - 1, record, memo)
        segs.append((pow_times(d1, 2 * n - 2), pow_times(d1, 2 * n - 1), "recurse", sub1, c1))
        f_chunk = restrict(f, pow_times(alpha, n - 1), pow_times(alpha, n))
        g_tail = restrict(g, pow_times(beta, n), g.top)
        sub2, c2 = _u(alpha, b, f_chunk, g_tail, depth - 1, record, memo)
        segs.append((pow_times(d1, 2 * n - 1), pow_times(d1, 2 * n), "recurse", sub2, c2))
    segs.append((pow_times(d1, 2 * n_tail - 2), top, "constant", _tail_value(f, g), None))
    return _finish(tag, a, b, f, g, segs, record)


def _case_succ_limit(a, b, f, g, depth, record, memo):
    alpha = predecessor(a)
    d = natural_sum(alpha, b)
    top = omega_pow(add(d, ONE))
    gamma = sup_natural_sum(a, b)
    cf = 1 + ceil_div_pow(_max_break(f), alpha)
    mg = _cut_index(b, _max_break(g))
    segs: List[_Seg] = []

    n_low = max(cf, 1 + mg)
    prev = ZERO
    for n in range(1, n_low):
        bn, bn_prev = fundamental_seq(b, n), (fundamental_seq(b, n - 1) if n > 1 else ZERO)
        hi = omega_pow(natural_sum(a, bn))
        f_tail = restrict(f, pow_times(alpha, n - 1), f.top)
        g_chunk = restrict(g, omega_pow(bn_prev) if n > 1 else ZERO, omega_pow(bn))
        sub, c = _u(a, bn, f_tail, g_chunk, depth - 1, record, memo)
        segs.append((prev, hi, "recurse", sub, c))
        prev = hi
    # Beyond the explicit blocks both restrictions are constant, and the
    # region [w^gamma, w^d] takes the same average, so one piece covers all.
    if gamma > d:  # pragma: no cover - the sup never exceeds the natural sum
        raise DecompositionError(f"case landmark {gamma} above block exponent {d}")
    segs.append((prev, omega_pow(d), "constant", _tail_value(f, g), None))

    n_high = max(cf, mg)
    prev = omega_pow(d)
    for n in range(1, n_high):
        hi = pow_times(d, n + 1)
        f_chunk = restrict(f, pow_times(alpha, n - 1), pow_times(alpha, n))
        g_tail = restrict(g, omega_pow(fundamental_seq(b, n)), g.top)
        sub, c = _u(alpha, b, f_chunk, g_tail, depth - 1, record, memo)
        segs.append((prev, hi, "recurse", sub, c))
        prev = hi
    segs.append((prev, top, "constant", _tail_value(f, g), None))
    return _finish("succ-limit", a, b, f, g, segs, record)


def _case_limit_base(a, b, f, g, depth, record, memo):
    top = omega_pow(natural_sum(a, a))
    m = max(_cut_index(a, _max_break(f)), _cut_index(a, _max_break(g)))
    segs: List[_Seg] = []
    prev = ZERO
    for n in range(1, m + 1):
        an, an_prev = fundamental_seq(a, n), (fundamental_seq(a, n - 1) if n > 1 else ZERO)
        block = omega_pow(natural_sum(an, a))
        lo_chunk = omega_pow(an_prev) if n > 1 else ZERO
        f_tail = restrict(f, lo_chunk, f.top)
        g_chunk = restrict(g, lo_chunk, omega_pow(an))
        sub1, c1 = _u(a, an, f_tail, g_chunk, depth - 1, record, memo)
        segs.append((prev, block, "recurse", sub1, c1))
        f_chunk = restrict(f, lo_chunk, omega_pow(an))
        g_tail = restrict(g, omega_pow(an), g.top)
        sub2, c2 = _u(an, a, f_chunk, g_tail, depth - 1, record, memo)
        segs.append((block, pow_times(natural_sum(an, a), 2), "recurse", sub2, c2))
        prev = pow_times(natural_sum(an, a), 2)
    segs.append((prev, top, "constant", _tail_value(f, g), None))
    return _finish("limit-base", a, b, f, g, segs, record)


def _case_limit_succ(a, b, f, g, depth, record, memo):
    beta = predecessor(b)
    d = natural_sum(a, beta)
    top = omega_pow(add(d, ONE))
    mf = _cut_index(a, _max_break(f))
    cg = ceil_div_pow(_max_break(g), beta)
    segs: List[_Seg] = []

    n_low = max(1 + mf, cg, 1)
    prev = ZERO
    for n in range(1, n_low):
        an, an_prev = fundamental_seq(a, n), (fundamental_seq(a, n - 1) if n > 1 else ZERO)
        hi = omega_pow(natural_sum(an, b))
        f_chunk = restrict(f, omega_pow(an_prev) if n > 1 else ZERO, omega_pow(an))
        g_tail = restrict(g, pow_times(beta, n), g.top)
        sub, c = _u(an, b, f_chunk, g_tail, depth - 1, record, memo)
        segs.append((prev, hi, "recurse", sub, c))
        prev = hi
    segs.append((prev, omega_pow(d), "constant", _tail_value(f, g), None))

    n_high = max(1 + mf, 1 + cg)
    prev = omega_pow(d)
    for n in range(1, n_high):
        hi = pow_times(d, n + 1)
        an_prev = fundamental_seq(a, n - 1) if n > 1 else ZERO
        f_tail = restrict(f, omega_pow(an_prev) if n > 1 else ZERO, f.top)
        g_chunk = restrict(g, pow_times(beta, n - 1), pow_times(beta, n))
        sub, c = _u(a, beta, f_tail, g_chunk, depth - 1, record, memo)
        segs.append((prev, hi, "recurse", sub, c))
        prev = hi
    segs.append((prev, top, "constant", _tail_value(f, g), None))
    return _finish("limit-succ", a, b, f, g, segs, record)


def _case_limit_limit(a, b, f, g, depth, record, memo):
    top = omega_pow(natural_sum(a, b))
    mf = _cut_index(a, _max_break(f))
    mg = _cut_index(b, _max_break(g))
    n_tail = 1 + max(mf, mg)
    segs: List[_Seg] = []
    prev = ZERO
    gamma_prev = None
    for n in range(1, n_tail):
        an, bn = fundamental_seq(a, n), fundamental_seq(b, n)
        an_prev = fundamental_seq(a, n - 1) if n > 1 else ZERO
        bn_prev = fundamental_seq(b, n - 1) if n > 1 else ZERO
        gamma_n = max(natural_sum(an, b), natural_sum(a, bn))
        if gamma_prev is not None and not gamma_prev < gamma_n:
            raise DecompositionError("case sequence gamma_n failed to increase strictly")
        gamma_prev = gamma_n
        c_n = omega_pow(gamma_n)

        f_tail = restrict(f, omega_pow(an_prev) if n > 1 else ZERO, f.top)
        g_chunk = restrict(g, omega_pow(bn_prev) if n > 1 else ZERO, omega_pow(bn))
        sub1, ch1 = _u(a, bn, f_tail, g_chunk, depth - 1, record, memo)
        mid1 = add(prev, omega_pow(natural_sum(a, bn)))
        segs.append((prev, mid1, "recurse", sub1, ch1))
        if mid1 == c_n:
            segs.append((mid1, c_n, "skipped", None, None))
        else:
            strip1 = 0.5 * (f.values[-1] + g.eval(omega_pow(bn)))
            segs.append((mid1, c_n, "constant", strip1, None))

        f_chunk = restrict(f, omega_pow(an_prev) if n > 1 else ZERO, omega_pow(an))
        g_tail = restrict(g, omega_pow(bn), g.top)
        sub3, ch3 = _u(an, b, f_chunk, g_tail, depth - 1, record, memo)
        mid2 = add(c_n, omega_pow(natural_sum(an, b)))
        segs.append((c_n, mid2, "recurse", sub3, ch3))
        hi = pow_times(gamma_n, 2)
        if mid2 == hi:
            segs.append((mid2, hi, "skipped", None, None))
        else:
            strip2 = 0.5 * (f.eval(omega_pow(an)) + g.values[-1])
            segs.append((mid2, hi, "constant", strip2, None))
        prev = hi
    segs.append((prev, top, "constant", _tail_value(f, g), None))
    return _finish("limit-limit", a, b, f, g, segs, record)


def overlap_map(
    a: Union[Ordinal, int], b: Union[Ordinal, int], f: StepFun, g: StepFun
) -> StepFun:
    """The overlapping map applied to f on [1, w^a] and g on [1, w^b].

    The result lives on [1, w^(a (+) b)] where (+) is the natural sum.  See
    check_overlap_properties for the five contracts it satisfies.
    """
    a, b = _ord(a, "a"), _ord(b, "b")
    # The memo is per call: identical sub-problems reappear many times once
    # restrictions collapse to shared constants, and results are immutable.
    result, _ = _u(a, b, f, g, _recursion_limit, False, {})
    return result


def overlap_case_tree(
    a: Union[Ordinal, int], b: Union[Ordinal, int], f: StepFun, g: StepFun
) -> Tuple[StepFun, OverlapCase]:
    """overlap_map plus the recorded, validated case-decomposition tree."""
    a, b = _ord(a, "a"), _ord(b, "b")
    result, case = _u(a, b, f, g, _recursion_limit, True)
    case.validate()
    return result, case


def dump_case_tree(
    a: Union[Ordinal, int], b: Union[Ordinal, int], f: StepFun, g: StepFun
) -> dict:
    """JSON form of the case tree, for debugging and the command line."""
    _, case = overlap_case_tree(a, b, f, g)
    return case.to_json()


# -- witness points and decomposition ----------------------------------------


def _check_point(p: Ordinal, top: Ordinal, name: str) -> None:
    if p < ONE or p > top:
        raise OverlapDomainError(f"{name} = {p} is outside [1, {top}]")


def _lsp(limit_ord: Ordinal, x: Ordinal) -> int:
    """Least n >= 1 with w^(limit_ord[n]) >= x, for 1 <= x < w^limit_ord."""
    return least_seq_index_reaching(limit_ord, power_ceil_exponent(x))


def _w(a: Ordinal, b: Ordinal, s: Ordinal, t: Ordinal, depth: int) -> Ordinal:
    if depth <= 0:
        raise RecursionBudgetError("depth cap hit in witness recursion")
    if a > b:
        return _w(b, a, t, s, depth - 1)
    if a == ZERO:
        return t
    wa, wb = omega_pow(a), omega_pow(b)
    if s == wa and t == wb:
        return omega_pow(natural_sum(a, b))
    a_kind, b_kind = classify(a), classify(b)

    if a_kind == "successor" and b_kind == "successor":
        alpha, beta = predecessor(a), predecessor(b)
        d1 = add(natural_sum(alpha, beta), ONE)
        if t < wb:
            j = ceil_div_pow(t, beta)
            if s > pow_times(alpha, j - 1):
                inner = _w(a, beta, left_subtract(pow_times(alpha, j - 1), s),
                           left_subtract(pow_times(beta, j - 1), t), depth - 1)
                return add(pow_times(d1, 2 * j - 2), inner)
            i = ceil_div_pow(s, alpha)
        else:
            i = ceil_div_pow(s, alpha)
        inner = _w(alpha, b, left_subtract(pow_times(alpha, i - 1), s),
                   left_subtract(pow_times(beta, i), t), depth - 1)
        return add(pow_times(d1, 2 * i - 1), inner)

    if a_kind == "successor":  # b limit
        alpha = predecessor(a)
        d = natural_sum(alpha, b)
        if t < wb:
            j = _lsp(b, t)
            if s > pow_times(alpha, j - 1):
                lo = omega_pow(natural_sum(a, fundamental_seq(b, j - 1))) if j > 1 else ZERO
                t_base = omega_pow(fundamental_seq(b, j - 1)) if j > 1 else ZERO
                inner = _w(a, fundamental_seq(b, j),
                           left_subtract(pow_times(alpha, j - 1), s),
                           left_subtract(t_base, t), depth - 1)
                return add(lo, inner)
            i = ceil_div_pow(s, alpha)
        else:
            i = ceil_div_pow(s, alpha)
        inner = _w(alpha, b, left_subtract(pow_times(alpha, i - 1), s),
                   left_subtract(omega_pow(fundamental_seq(b, i)), t), depth - 1)
        return add(pow_times(d, i), inner)

    if a == b:  # both limit, diagonal
        if t < wb:
            j = _lsp(a, t)
            base_j = omega_pow(fundamental_seq(a, j - 1)) if j > 1 else ZERO
            if s > base_j:
                lo = (
                    pow_times(natural_sum(fundamental_seq(a, j - 1), a), 2)
                    if j > 1
                    else ZERO
                )
                inner = _w(a, fundamental_seq(a, j), left_subtract(base_j, s),
                           left_subtract(base_j, t), depth - 1)
                return add(lo, inner)
            i = _lsp(a, s)
        else:
            i = _lsp(a, s)
        base_i = omega_pow(fundamental_seq(a, i - 1)) if i > 1 else ZERO
        inner = _w(fundamental_seq(a, i), a, left_subtract(base_i, s),
                   left_subtract(omega_pow(fundamental_seq(a, i)), t), depth - 1)
        return add(omega_pow(natural_sum(fundamental_seq(a, i), a)), inner)

    if b_kind == "successor":  # a limit, b = beta + 1 > a
        beta = predecessor(b)
        d = natural_sum(a, beta)
        if t < wb:
            j = ceil_div_pow(t, beta)
            base_j = omega_pow(fundamental_seq(a, j - 1)) if j > 1 else ZERO
            if s > base_j:
                inner = _w(a, beta, left_subtract(base_j, s),
                           left_subtract(pow_times(beta, j - 1), t), depth - 1)
                return add(pow_times(d, j), inner)
            i = _lsp(a, s)
        else:
            i = _lsp(a, s)
        base_i = omega_pow(fundamental_seq(a, i - 1)) if i > 1 else ZERO
        lo = omega_pow(natural_sum(fundamental_seq(a, i - 1), b)) if i > 1 else ZERO
        inner = _w(fundamental_seq(a, i), b, left_subtract(base_i, s),
                   left_subtract(pow_times(beta, i), t), depth - 1)
        return add(lo, inner)

    # both limit, a < b
    if t < wb:
        j = _lsp(b, t)
        base_j = omega_pow(fundamental_seq(a, j - 1)) if j > 1 else ZERO
        if s > base_j:
            gamma_prev = (
                max(
                    natural_sum(fundamental_seq(a, j - 1), b),
                    natural_sum(a, fundamental_seq(b, j - 1)),
                )
                if j > 1
                else None
            )
            lo = pow_times(gamma_prev, 2) if j > 1 else ZERO
            t_base = omega_pow(fundamental_seq(b, j - 1)) if j > 1 else ZERO
            inner = _w(a, fundamental_seq(b, j), left_subtract(base_j, s),
                       left_subtract(t_base, t), depth - 1)
            return add(lo, inner)
        i = _lsp(a, s)
    else:
        i = _lsp(a, s)
    base_i = omega_pow(fundamental_seq(a, i - 1)) if i > 1 else ZERO
    gamma_i = max(
        natural_sum(fundamental_seq(a, i), b), natural_sum(a, fundamental_seq(b, i))
    )
    inner = _w(fundamental_seq(a, i), b, left_subtract(base_i, s),
               left_subtract(omega_pow(fundamental_seq(b, i)), t), depth - 1)
    return add(omega_pow(gamma_i), inner)


def witness_point(
    a: Union[Ordinal, int],
    b: Union[Ordinal, int],
    s: Union[Ordinal, int],
    t: Union[Ordinal, int],
) -> WitnessPoint:
    """A point r where overlap_map(a, b, f, g) takes the value (f(s)+g(t))/2.

    The identity holds for every pair of inputs, because r is derived purely
    from the case geometry.
    """
    a, b = _ord(a, "a"), _ord(b, "b")
    s, t = _ord(s, "s"), _ord(t, "t")
    _check_point(s, omega_pow(a), "s")
    _check_point(t, omega_pow(b), "t")
    r = _w(a, b, s, t, _recursion_limit)
    return WitnessPoint(r, "plain", (s, t))


def _d(a: Ordinal, b: Ordinal, r: Ordinal, depth: int) -> Tuple[Ordinal, Ordinal]:
    if depth <= 0:
        raise RecursionBudgetError("depth cap hit in decomposition recursion")
    if a > b:
        t, s = _d(b, a, r, depth - 1)
        return s, t
    if a == ZERO:
        return ONE, r
    top = omega_pow(natural_sum(a, b))
    if r == top:
        return omega_pow(a), omega_pow(b)
    a_kind, b_kind = classify(a), classify(b)

    if a_kind == "successor" and b_kind == "successor":
        alpha, beta = predecessor(a), predecessor(b)
        d1 = add(natural_sum(alpha, beta), ONE)
        m = ceil_div_pow(r, d1)
        r1 = left_subtract(pow_times(d1, m - 1), r)
        if m % 2 == 1:
            n = (m + 1) // 2
            s1, t1 = _d(a, beta, r1, depth - 1)
            return add(pow_times(alpha, n - 1), s1), add(pow_times(beta, n - 1), t1)
        n = m // 2
        s1, t1 = _d(alpha, b, r1, depth - 1)
        return add(pow_times(alpha, n - 1), s1), add(pow_times(beta, n), t1)

    if a_kind == "successor":  # b limit
        alpha = predecessor(a)
        d = natural_sum(alpha, b)
        wd = omega_pow(d)
        if r > wd:
            n = ceil_div_pow(r, d) - 1
            s1, t1 = _d(alpha, b, left_subtract(pow_times(d, n), r), depth - 1)
            return add(pow_times(alpha, n - 1), s1), add(omega_pow(fundamental_seq(b, n)), t1)
        gamma = sup_natural_sum(a, b)
        if r >= omega_pow(gamma):
            return omega_pow(a), omega_pow(b)
        e = power_ceil_exponent(r)
        j = _least_n(lambda n: natural_sum(a, fundamental_seq(b, n)) >= e)
        lo = omega_pow(natural_sum(a, fundamental_seq(b, j - 1))) if j > 1 else ZERO
        s1, t1 = _d(a, fundamental_seq(b, j), left_subtract(lo, r), depth - 1)
        t_base = omega_pow(fundamental_seq(b, j - 1)) if j > 1 else ZERO
        return add(pow_times(alpha, j - 1), s1), add(t_base, t1)

    if a == b:  # limit diagonal
        n = _least_n(
            lambda k: pow_times(natural_sum(fundamental_seq(a, k), a), 2) >= r
        )
        an = fundamental_seq(a, n)
        an_prev = fundamental_seq(a, n - 1) if n > 1 else ZERO
        block = omega_pow(natural_sum(an, a))
        lo1 = pow_times(natural_sum(an_prev, a), 2) if n > 1 else ZERO
        base = omega_pow(an_prev) if n > 1 else ZERO
        if r <= block:
            s1, t1 = _d(a, an, left_subtract(lo1, r), depth - 1)
            return add(base, s1), add(base, t1)
        s1, t1 = _d(an, a, left_subtract(block, r), depth - 1)
        return add(base, s1), add(omega_pow(an), t1)

    if b_kind == "successor":  # a limit, b successor
        beta = predecessor(b)
        d = natural_sum(a, beta)
        wd = omega_pow(d)
        if r > wd:
            n = ceil_div_pow(r, d) - 1
            s1, t1 = _d(a, beta, left_subtract(pow_times(d, n), r), depth - 1)
            base = omega_pow(fundamental_seq(a, n - 1)) if n > 1 else ZERO
            return add(base, s1), add(pow_times(beta, n - 1), t1)
        gamma = sup_natural_sum(b, a)
        if r >= omega_pow(gamma):
            return omega_pow(a), omega_pow(b)
        e = power_ceil_exponent(r)
        j = _least_n(lambda n: natural_sum(fundamental_seq(a, n), b) >= e)
        lo = omega_pow(natural_sum(fundamental_seq(a, j - 1), b)) if j > 1 else ZERO
        s1, t1 = _d(fundamental_seq(a, j), b, left_subtract(lo, r), depth - 1)
        base = omega_pow(fundamental_seq(a, j - 1)) if j > 1 else ZERO
        return add(base, s1), add(pow_times(beta, j), t1)

    # both limit, a < b
    gamma = max(sup_natural_sum(b, a), sup_natural_sum(a, b))
    if r >= omega_pow(gamma):
        return omega_pow(a), omega_pow(b)

    def gamma_at(k: int) -> Ordinal:
        return max(
            natural_sum(fundamental_seq(a, k), b), natural_sum(a, fundamental_seq(b, k))
        )

    n = _least_n(lambda k: pow_times(gamma_at(k), 2) >= r)
    an, bn = fundamental_seq(a, n), fundamental_seq(b, n)
    a_base = omega_pow(fundamental_seq(a, n - 1)) if n > 1 else ZERO
    b_base = omega_pow(fundamental_seq(b, n - 1)) if n > 1 else ZERO
    c_n = omega_pow(gamma_at(n))
    lo0 = pow_times(gamma_at(n - 1), 2) if n > 1 else ZERO
    mid1 = add(lo0, omega_pow(natural_sum(a, bn)))
    if r <= mid1:
        s1, t1 = _d(a, bn, left_subtract(lo0, r), depth - 1)
        return add(a_base, s1), add(b_base, t1)
    if r <= c_n:
        return omega_pow(a), omega_pow(bn)
    mid2 = add(c_n, omega_pow(natural_sum(an, b)))
    if r <= mid2:
        s1, t1 = _d(an, b, left_subtract(c_n, r), depth - 1)
        return add(a_base, s1), add(omega_pow(bn), t1)
    return omega_pow(an), omega_pow(b)


def decompose_point(
    a: Union[Ordinal, int], b: Union[Ordinal, int], r: Union[Ordinal, int]
) -> Tuple[Ordinal, Ordinal]:
    """The source pair (s, t) whose average overlap_map(a, b, f, g) takes at r.

    Valid for every pair of inputs, like witness_point.
    """
    a, b = _ord(a, "a"), _ord(b, "b")
    r = _ord(r, "r")
    _check_point(r, omega_pow(natural_sum(a, b)), "r")
    return _d(a, b, r, _recursion_limit)


# -- property checking ---------------------------------------------------------


@dataclass
class PropertyCheck:
    """Outcome of sampling one contract of the overlap map."""

    name: str
    passed: bool
    checked: int
    failed: int = 0
    counterexample: Optional[str] = None

    def record_failure(self, description: str) -> None:
        self.failed += 1
        self.passed = False
        if self.counterexample is None:
            self.counterexample = description


def check_overlap_properties(
    a: Union[Ordinal, int],
    b: Union[Ordinal, int],
    sample_budget: int,
    rng,
    field: str = "real",
    max_pieces: int = 5,
    tol: float = 1e-12,
) -> List[PropertyCheck]:
    """Sample the five contracts of overlap_map on random inputs.

    Per sampled tuple: additivity and homogeneity hold within tol, the norm
    is bounded by the average of the input norms, witness points expose the
    requested pair, and every output point (and every output value, by finite
    range enumeration) decomposes as an average of input values.
    """
    a, b = _ord(a, "a"), _ord(b, "b")
    wa, wb = omega_pow(a), omega_pow(b)
    checks = {
        name: PropertyCheck(name, True, 0)
        for name in ("additivity", "homogeneity", "norm_bound", "witness", "decompose")
    }

    def sample(top):
        return random_stepfun(rng, top, field, max_pieces)

    for _ in range(sample_budget):
        f1, f2 = sample(wa), sample(wa)
        g1, g2 = sample(wb), sample(wb)
        u11 = overlap_map(a, b, f1, g1)

        c = checks["additivity"]
        c.checked += 1
        lhs = overlap_map(a, b, linear_combine([1, 1], [f1, f2]), linear_combine([1, 1], [g1, g2]))
        rhs = linear_combine([1, 1], [u11, overlap_map(a, b, f2, g2)])
        if not approx_equal(lhs, rhs, tol):
            c.record_failure(f"additivity off for a={a}, b={b}: f1={f1!r}, g1={g1!r}")

        c = checks["homogeneity"]
        c.checked += 1
        if field == "real":
            lam = float(rng.standard_normal())
        else:
            lam = complex(rng.standard_normal(), rng.standard_normal())
        lhs = overlap_map(a, b, linear_combine([lam], [f1]), linear_combine([lam], [g1]))
        rhs = linear_combine([lam], [u11])
        if not approx_equal(lhs, rhs, tol):
            c.record_failure(f"homogeneity off for lambda={lam}: f={f1!r}, g={g1!r}")

        c = checks["norm_bound"]
        c.checked += 1
        if sup_norm(u11) > 0.5 * (sup_norm(f1) + sup_norm(g1)) + tol:
            c.record_failure(f"norm bound broken: f={f1!r}, g={g1!r}")

        c = checks["witness"]
        c.checked += 1
        s, t = random_point(rng, wa), random_point(rng, wb)
        w = witness_point(a, b, s, t)
        want = 0.5 * (f1.eval(s) + g1.eval(t))
        if abs(u11.eval(w.point) - want) > tol:
            c.record_failure(f"witness failed at s={s}, t={t}, r={w.point}: f={f1!r}, g={g1!r}")

        c = checks["decompose"]
        c.checked += 1
        r = random_point(rng, u11.top)
        s_r, t_r = decompose_point(a, b, r)
        want = 0.5 * (f1.eval(s_r) + g1.eval(t_r))
        ok = abs(u11.eval(r) - want) <= tol
        if ok:
            averages = [0.5 * (v + w_) for v in f1.values for w_ in g1.values]
            for value in u11.values:
                if not any(abs(value - av) <= tol for av in averages):
                    ok = False
                    break
        if not ok:
            c.record_failure(f"decomposition failed at r={r}: f={f1!r}, g={g1!r}")

    return list(checks.values())
