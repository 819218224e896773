"""Exact arithmetic on ordinals below epsilon_0, in Cantor normal form.

Every ordinal here is a finite sum ``w^e1*c1 + ... + w^ek*ck`` with strictly
decreasing exponents (themselves ordinals of the same kind) and positive
integer coefficients; the empty sum is 0.  Besides ordinal and natural sums,
base-omega powers and left subtraction, the module fixes canonical
fundamental sequences for limit ordinals and computes the Cantor-Bendixson
rank of a point inside an ordinal interval.

Values are immutable and totally ordered.  Each value caches a structural
sort key, so a comparison costs one flat tuple comparison.  Coefficients are
plain Python integers and never overflow.
"""

from __future__ import annotations

from typing import Iterable, Tuple, Union

__all__ = [
    "Ordinal",
    "OrdinalError",
    "OrdinalParseError",
    "OrdinalUnderflowError",
    "OrdinalDomainError",
    "OrdinalDepthError",
    "ZERO",
    "ONE",
    "TWO",
    "OMEGA",
    "from_int",
    "compare",
    "add",
    "natural_sum",
    "nat_double",
    "omega_pow",
    "left_subtract",
    "mul_nat",
    "classify",
    "predecessor",
    "fundamental_seq",
    "sup_natural_sum",
    "cb_rank",
    "parse_ordinal",
    "format_ordinal",
    "ordinal_to_json",
    "ordinal_from_json",
    "pow_times",
    "ceil_div_pow",
    "power_ceil_exponent",
    "least_seq_index_reaching",
    "exponent_depth_limit",
    "set_exponent_depth_limit",
]

DEFAULT_EXPONENT_DEPTH_LIMIT = 16

_depth_limit = DEFAULT_EXPONENT_DEPTH_LIMIT


class OrdinalError(Exception):
    """Base class for ordinal arithmetic errors."""


class OrdinalParseError(OrdinalError):
    """Raised on malformed ordinal expressions; carries the offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class OrdinalUnderflowError(OrdinalError):
    """Raised by left_subtract(a, b) when a > b."""


class OrdinalDomainError(OrdinalError):
    """Raised when an argument is outside an operation's domain."""


class OrdinalDepthError(OrdinalError):
    """Raised when exponent nesting exceeds the configured limit."""


def exponent_depth_limit() -> int:
    return _depth_limit


def set_exponent_depth_limit(limit: int) -> None:
    """Set the maximum exponent nesting depth (default 16).

    The representable universe is capped strictly below epsilon_0; the limit
    bounds towers like w^w^...^w.  Lowering the limit does not invalidate
    values built earlier.
    """
    global _depth_limit
    if not isinstance(limit, int) or limit < 1:
        raise OrdinalDomainError("depth limit must be a positive integer")
    _depth_limit = limit
    _clear_memos()


TermSeq = Tuple[Tuple["Ordinal", int], ...]


class Ordinal:
    """An ordinal below epsilon_0 in Cantor normal form.

    Instances are immutable.  ``terms`` is the normal form as a tuple of
    (exponent, coefficient) pairs with exponents strictly decreasing and
    coefficients >= 1; the empty tuple is 0.  Equal ordinals always have
    identical term sequences, so ``==`` is structural equality.

    The class supports the usual comparison operators, ``a + b`` for the
    (non-commutative) ordinal sum, and ``a * k`` for right multiplication
    by a natural number.  Integer operands are coerced.
    """

    __slots__ = ("_terms", "_key", "_depth", "_hash")

    def __init__(self, terms: Iterable[Tuple[Union["Ordinal", int], int]] = ()):
        norm = []
        prev = None
        for exp, coeff in terms:
            if isinstance(exp, int):
                exp = from_int(exp)
            elif not isinstance(exp, Ordinal):
                raise TypeError("exponent must be an Ordinal or int")
            if isinstance(coeff, bool) or not isinstance(coeff, int):
                raise TypeError("coefficient must be an int")
            if coeff < 1:
                raise OrdinalDomainError("coefficients must be >= 1")
            if prev is not None and prev <= exp._key:
                raise OrdinalDomainError("exponents must be strictly decreasing")
            prev = exp._key
            norm.append((exp, coeff))
        _init(self, tuple(norm))

    @property
    def terms(self) -> TermSeq:
        """The normal form, highest exponent first."""
        return self._terms

    @property
    def key(self):
        """Opaque structural key; sorts exactly like the ordinal order."""
        return self._key

    @property
    def depth(self) -> int:
        """Exponent nesting depth (0 for 0, 1 for naturals, 2 for w)."""
        return self._depth

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def as_int(self) -> int:
        """The value as a plain integer, or raise if it is >= w."""
        if not self._terms:
            return 0
        if len(self._terms) == 1 and self._terms[0][0].is_zero:
            return self._terms[0][1]
        raise OrdinalDomainError(f"{self} is not a natural number")

    def is_nat(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and self._terms[0][0].is_zero)

    # -- comparisons -------------------------------------------------------

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._key == other._key

    def __ne__(self, other) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._key != other._key

    def __lt__(self, other) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._key < other._key

    def __le__(self, other) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._key <= other._key

    def __gt__(self, other) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._key > other._key

    def __ge__(self, other) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self._key >= other._key

    def __hash__(self) -> int:
        return self._hash

    # -- arithmetic sugar --------------------------------------------------

    def __add__(self, other) -> "Ordinal":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return add(self, other)

    def __radd__(self, other) -> "Ordinal":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return add(other, self)

    def __mul__(self, k) -> "Ordinal":
        if isinstance(k, bool) or not isinstance(k, int):
            return NotImplemented
        return mul_nat(self, k)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __str__(self) -> str:
        return format_ordinal(self)

    def __repr__(self) -> str:
        return f"Ordinal({format_ordinal(self)!r})"


def _init(o: Ordinal, terms: TermSeq) -> None:
    depth = 0
    for exp, _ in terms:
        if exp._depth + 1 > depth:
            depth = exp._depth + 1
    if depth > _depth_limit:
        raise OrdinalDepthError(
            f"exponent nesting depth {depth} exceeds the limit {_depth_limit}"
        )
    o._terms = terms
    o._key = tuple((exp._key, coeff) for exp, coeff in terms)
    o._depth = depth
    o._hash = hash(o._key)


def _mk(terms: TermSeq) -> Ordinal:
    # Internal fast constructor: terms must already be in normal form.
    o = object.__new__(Ordinal)
    _init(o, terms)
    return o


def _coerce(x) -> Union[Ordinal, None]:
    if type(x) is Ordinal:
        return x
    if isinstance(x, Ordinal):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return from_int(x)
    return None


def _require(x, name: str = "argument") -> Ordinal:
    o = _coerce(x)
    if o is None:
        raise TypeError(f"{name} must be an Ordinal or int, got {type(x).__name__}")
    return o


# Memo tables for the arithmetic the transfinite constructions hammer on.
# Keys are interned operand tuples; tables are cleared when they grow past
# the cap and whenever the exponent depth limit changes (depth errors must
# not be bypassed by stale entries).
_MEMO_CAP = 1 << 17
_memo_add: dict = {}
_memo_nat: dict = {}
_memo_sub: dict = {}
_memo_pow: dict = {}
_memo_mul: dict = {}
_memo_fs: dict = {}
_ALL_MEMOS = (_memo_add, _memo_nat, _memo_sub, _memo_pow, _memo_mul, _memo_fs)


def _memo_put(memo: dict, key, value):
    if len(memo) >= _MEMO_CAP:
        memo.clear()
    memo[key] = value
    return value


def _clear_memos() -> None:
    for memo in _ALL_MEMOS:
        memo.clear()


def from_int(n: int) -> Ordinal:
    """The finite ordinal n (n >= 0)."""
    if isinstance(n, bool) or not isinstance(n, int):
        raise TypeError("expected an int")
    if n < 0:
        raise OrdinalDomainError("ordinals are nonnegative")
    if n == 0:
        return ZERO
    if n == 1:
        return ONE
    if n == 2:
        return TWO
    return _mk(((ZERO, n),))


ZERO = object.__new__(Ordinal)
_init(ZERO, ())
ONE = _mk(((ZERO, 1),))
TWO = _mk(((ZERO, 2),))
OMEGA = _mk(((ONE, 1),))


def compare(a: Union[Ordinal, int], b: Union[Ordinal, int]) -> str:
    """Three-way comparison: returns "less", "equal" or "greater"."""
    a, b = _require(a, "a"), _require(b, "b")
    if a._key < b._key:
        return "less"
    if a._key == b._key:
        return "equal"
    return "greater"


def add(a: Union[Ordinal, int], b: Union[Ordinal, int]) -> Ordinal:
    """Ordinal sum a + b (non-commutative; left tail may be absorbed)."""
    if type(a) is not Ordinal:
        a = _require(a, "a")
    if type(b) is not Ordinal:
        b = _require(b, "b")
    if not b._terms:
        return a
    if not a._terms:
        return b
    memo_key = (a, b)
    hit = _memo_add.get(memo_key)
    if hit is not None:
        return hit
    eb, cb = b._terms[0]
    keep = len(a._terms)
    while keep > 0 and a._terms[keep - 1][0]._key < eb._key:
        keep -= 1
    if keep > 0 and a._terms[keep - 1][0]._key == eb._key:
        merged = (eb, a._terms[keep - 1][1] + cb)
        out = _mk(a._terms[: keep - 1] + (merged,) + b._terms[1:])
    else:
        out = _mk(a._terms[:keep] + b._terms)
    return _memo_put(_memo_add, memo_key, out)


def natural_sum(a: Union[Ordinal, int], b: Union[Ordinal, int]) -> Ordinal:
    """Natural (Hessenberg) sum: merge the normal forms coefficient-wise.

    Commutative, associative and strictly monotone in each argument.
    """
    if type(a) is not Ordinal:
        a = _require(a, "a")
    if type(b) is not Ordinal:
        b = _require(b, "b")
    if not a._terms:
        return b
    if not b._terms:
        return a
    memo_key = (a, b)
    hit = _memo_nat.get(memo_key)
    if hit is not None:
        return hit
    ta, tb = a._terms, b._terms
    i = j = 0
    out = []
    while i < len(ta) and j < len(tb):
        ea, ca = ta[i]
        eb, cb = tb[j]
        if ea._key > eb._key:
            out.append(ta[i])
            i += 1
        elif ea._key < eb._key:
            out.append(tb[j])
            j += 1
        else:
            out.append((ea, ca + cb))
            i += 1
            j += 1
    out.extend(ta[i:])
    out.extend(tb[j:])
    return _memo_put(_memo_nat, memo_key, _mk(tuple(out)))


def nat_double(a: Union[Ordinal, int]) -> Ordinal:
    """Double every coefficient of the normal form (equals a natural-sum of a with itself)."""
    a = _require(a)
    return _mk(tuple((e, 2 * c) for e, c in a._terms))


def omega_pow(a: Union[Ordinal, int]) -> Ordinal:
    """The power w**a; omega_pow(0) is 1."""
    if type(a) is not Ordinal:
        a = _require(a)
    hit = _memo_pow.get(a)
    if hit is not None:
        return hit
    return _memo_put(_memo_pow, a, _mk(((a, 1),)))


def left_subtract(a: Union[Ordinal, int], b: Union[Ordinal, int]) -> Ordinal:
    """The unique r with a + r == b, for a <= b.

    Raises OrdinalUnderflowError when a > b.
    """
    if type(a) is not Ordinal:
        a = _require(a, "a")
    if type(b) is not Ordinal:
        b = _require(b, "b")
    memo_key = (a, b)
    hit = _memo_sub.get(memo_key)
    if hit is not None:
        return hit
    ta, tb = a._terms, b._terms
    i = 0
    while i < len(ta) and i < len(tb):
        (ea, ca), (eb, cb) = ta[i], tb[i]
        if ea._key != eb._key:
            if ea._key < eb._key:
                # All remaining terms of a are below w^eb and get absorbed,
                # so the rest of b is the difference.
                return _memo_put(_memo_sub, memo_key, _mk(tb[i:]))
            raise OrdinalUnderflowError(f"{a} > {b}")
        if ca != cb:
            if ca < cb:
                return _memo_put(_memo_sub, memo_key, _mk(((eb, cb - ca),) + tb[i + 1 :]))
            raise OrdinalUnderflowError(f"{a} > {b}")
        i += 1
    if i == len(ta):
        return _memo_put(_memo_sub, memo_key, _mk(tb[i:]))
    raise OrdinalUnderflowError(f"{a} > {b}")


def mul_nat(a: Union[Ordinal, int], k: int) -> Ordinal:
    """Right product a*k for a natural k >= 1: scales the leading coefficient."""
    if type(a) is not Ordinal:
        a = _require(a)
    if isinstance(k, bool) or not isinstance(k, int):
        raise TypeError("k must be an int")
    if k < 1:
        raise OrdinalDomainError("k must be >= 1")
    if not a._terms or k == 1:
        return a
    memo_key = (a, k)
    hit = _memo_mul.get(memo_key)
    if hit is not None:
        return hit
    (e0, c0), rest = a._terms[0], a._terms[1:]
    return _memo_put(_memo_mul, memo_key, _mk(((e0, c0 * k),) + rest))


def classify(a: Union[Ordinal, int]) -> str:
    """Return "zero", "successor" or "limit"."""
    a = _require(a)
    if not a._terms:
        return "zero"
    return "successor" if a._terms[-1][0].is_zero else "limit"


def predecessor(a: Union[Ordinal, int]) -> Ordinal:
    """The b with b + 1 == a; defined only for successor ordinals."""
    a = _require(a)
    if classify(a) != "successor":
        raise OrdinalDomainError(f"{a} is not a successor")
    e, c = a._terms[-1]
    if c > 1:
        return _mk(a._terms[:-1] + ((e, c - 1),))
    return _mk(a._terms[:-1])


def fundamental_seq(a: Union[Ordinal, int], n: int) -> Ordinal:
    """The n-th member (n >= 1) of the canonical fundamental sequence of a limit.

    Write a = xi + w^beta * k with w^beta * k the final term of the normal
    form.  If beta = gamma + 1 the value is xi + w^beta*(k-1) + w^gamma * n;
    if beta is itself a limit it is xi + w^beta*(k-1) + w^(beta[n]).  The
    sequence is strictly increasing with supremum a.
    """
    if type(a) is not Ordinal:
        a = _require(a)
    if isinstance(n, bool) or not isinstance(n, int):
        raise TypeError("n must be an int")
    if n < 1:
        raise OrdinalDomainError("n must be >= 1")
    memo_key = (a, n)
    hit = _memo_fs.get(memo_key)
    if hit is not None:
        return hit
    if classify(a) != "limit":
        raise OrdinalDomainError(f"{a} is not a limit ordinal")
    beta, k = a._terms[-1]
    prefix = a._terms[:-1] if k == 1 else a._terms[:-1] + ((beta, k - 1),)
    if classify(beta) == "successor":
        step = (predecessor(beta), n)
    else:
        step = (fundamental_seq(beta, n), 1)
    return _memo_put(_memo_fs, memo_key, _mk(prefix + (step,)))


def sup_natural_sum(d: Union[Ordinal, int], b: Union[Ordinal, int]) -> Ordinal:
    """Least upper bound of { natural_sum(d, b[n]) : n >= 1 } for a limit b.

    Closed form: let w^e be the final term of b's normal form (e >= 1).  The
    terms of d with exponent below e are washed out in the limit, while the
    rest rides along, so the bound equals natural_sum(d_high, b) where d_high
    keeps only the terms of d with exponent >= e.  The LUB property tests in
    the suite validate this closed form.
    """
    d, b = _require(d, "d"), _require(b, "b")
    if classify(b) != "limit":
        raise OrdinalDomainError(f"{b} is not a limit ordinal")
    e = b._terms[-1][0]
    keep = []
    for term in d._terms:
        if term[0]._key >= e._key:
            keep.append(term)
        else:
            break
    return natural_sum(_mk(tuple(keep)), b)


def cb_rank(p: Union[Ordinal, int]) -> Ordinal:
    """Cantor-Bendixson rank of the point p >= 1 inside any interval [1, t], t >= p.

    Equals the final exponent of the normal form: isolated points (rank 0)
    are exactly the successors, w has rank 1, w^a has rank a.
    """
    p = _require(p)
    if not p._terms:
        raise OrdinalDomainError("the rank of 0 is undefined; points start at 1")
    return p._terms[-1][0]


# -- geometry helpers used by the transfinite constructions ----------------


def pow_times(e: Union[Ordinal, int], m: int) -> Ordinal:
    """w^e * m, with m >= 0 (0 gives the ordinal 0)."""
    if m == 0:
        return ZERO
    return mul_nat(omega_pow(e), m)


def ceil_div_pow(x: Union[Ordinal, int], e: Union[Ordinal, int]) -> int:
    """Least natural m with w^e * m >= x; requires x < w^(e+1)."""
    x, e = _require(x, "x"), _require(e, "e")
    q = 0
    rest = False
    for exp, coeff in x._terms:
        if exp._key > e._key:
            raise OrdinalDomainError(f"{x} is not below w^({e})*w")
        if exp._key == e._key:
            q = coeff
        else:
            rest = True
            break
    return q + 1 if rest else q


def power_ceil_exponent(t: Union[Ordinal, int]) -> Ordinal:
    """Least exponent x with w^x >= t, for t >= 1."""
    t = _require(t)
    if not t._terms:
        raise OrdinalDomainError("t must be >= 1")
    (e0, c0) = t._terms[0]
    if c0 == 1 and len(t._terms) == 1:
        return e0
    return add(e0, ONE)


def least_seq_index_reaching(a: Union[Ordinal, int], target: Union[Ordinal, int]) -> int:
    """Least n >= 1 with fundamental_seq(a, n) >= target; requires target < a."""
    a, target = _require(a, "a"), _require(target, "target")
    if not target._key < a._key:
        raise OrdinalDomainError("target must be below the limit")
    if fundamental_seq(a, 1)._key >= target._key:
        return 1
    hi = 1
    while True:
        hi *= 2
        if fundamental_seq(a, hi)._key >= target._key:
            break
        if hi > 1 << 62:  # pragma: no cover - defensive
            raise OrdinalError("fundamental sequence failed to reach target")
    lo = hi // 2  # fs(a, lo) < target <= fs(a, hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fundamental_seq(a, mid)._key >= target._key:
            hi = mid
        else:
            lo = mid
    return hi


# -- parsing and formatting -------------------------------------------------

# Grammar (ASCII, whitespace ignored):
#   expr := term ("+" term)*
#   term := nat | "w" pow? mult?
#   pow  := "^" (nat | "w" | "(" expr ")")
#   mult := "*" nat          (nat >= 1 here)
# Sums are folded left-to-right with `add`, so non-normal input like "1+w"
# normalizes to w.


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self) -> str:
        ch = self.peek()
        self.pos += 1
        return ch

    def nat(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise OrdinalParseError("expected a number", start)
        return int(self.text[start : self.pos])


def parse_ordinal(text: str) -> Ordinal:
    """Parse an ordinal expression such as "w^2*3+w+1".

    Accepts non-normal sums and normalizes them; raises OrdinalParseError
    with the offending position on malformed input, and on a zero
    coefficient after "*".
    """
    if not isinstance(text, str):
        raise TypeError("expected a string")
    sc = _Scanner(text)
    value = _parse_expr(sc)
    sc.skip_ws()
    if sc.pos != len(text):
        raise OrdinalParseError(f"unexpected {text[sc.pos]!r}", sc.pos)
    return value


def _parse_expr(sc: _Scanner) -> Ordinal:
    value = _parse_term(sc)
    while sc.peek() == "+":
        sc.take()
        value = add(value, _parse_term(sc))
    return value


def _parse_term(sc: _Scanner) -> Ordinal:
    ch = sc.peek()
    if ch.isdigit():
        return from_int(sc.nat())
    if ch != "w":
        raise OrdinalParseError(
            "expected a number or 'w'" if ch else "unexpected end of input", sc.pos
        )
    sc.take()
    exponent = ONE
    if sc.peek() == "^":
        sc.take()
        ch = sc.peek()
        if ch == "w":
            sc.take()
            exponent = OMEGA
        elif ch == "(":
            sc.take()
            exponent = _parse_expr(sc)
            if sc.peek() != ")":
                raise OrdinalParseError("expected ')'", sc.pos)
            sc.take()
        elif ch.isdigit():
            exponent = from_int(sc.nat())
        else:
            raise OrdinalParseError("expected an exponent", sc.pos)
    coeff = 1
    if sc.peek() == "*":
        sc.take()
        at = sc.pos
        coeff = sc.nat()
        if coeff < 1:
            raise OrdinalParseError("coefficient must be >= 1", at)
    return mul_nat(omega_pow(exponent), coeff)


def format_ordinal(a: Union[Ordinal, int]) -> str:
    """Render the normal form in the ASCII grammar ("w" for omega)."""
    a = _require(a)
    if not a._terms:
        return "0"
    parts = []
    for e, c in a._terms:
        if e.is_zero:
            parts.append(str(c))
            continue
        if e == ONE:
            body = "w"
        elif e.is_nat():
            body = f"w^{e.as_int()}"
        elif e == OMEGA:
            body = "w^w"
        else:
            body = f"w^({format_ordinal(e)})"
        parts.append(body if c == 1 else f"{body}*{c}")
    return "+".join(parts)


def ordinal_to_json(a: Union[Ordinal, int]):
    """JSON form: naturals are plain ints, larger values a list of [exponent, coefficient]."""
    a = _require(a)
    if a.is_nat():
        return a.as_int()
    return [[ordinal_to_json(e), c] for e, c in a._terms]


def ordinal_from_json(data) -> Ordinal:
    """Inverse of ordinal_to_json; validates normal form."""
    if isinstance(data, bool):
        raise OrdinalDomainError("booleans are not ordinals")
    if isinstance(data, int):
        return from_int(data)
    if not isinstance(data, list):
        raise OrdinalDomainError(f"cannot decode {type(data).__name__} as an ordinal")
    terms = []
    for item in data:
        if not isinstance(item, list) or len(item) != 2:
            raise OrdinalDomainError("each term must be a [exponent, coefficient] pair")
        exp, coeff = item
        if isinstance(coeff, bool) or not isinstance(coeff, int):
            raise OrdinalDomainError("coefficients must be integers")
        terms.append((ordinal_from_json(exp), coeff))
    return Ordinal(terms)
