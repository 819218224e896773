"""Overlap maps: frozen values, transcription oracles, witness/decompose identities."""

from __future__ import annotations

import numpy as np
import pytest

import oracles
from sprlab.ordinal import (
    OMEGA,
    ONE,
    ZERO,
    add,
    mul_nat,
    natural_sum,
    omega_pow,
    parse_ordinal,
)
from sprlab.funcspace import (
    COMPLEX,
    REAL,
    StepFun,
    constant,
    indicator_interval,
    indicator_point,
    random_point,
    random_stepfun,
    sup_norm,
    validate_invariants,
)
from sprlab.overlap import (
    OverlapDomainError,
    RecursionBudgetError,
    check_overlap_properties,
    decompose_point,
    dump_case_tree,
    overlap_case_tree,
    overlap_map,
    recursion_limit,
    set_debug_tail_offset,
    set_recursion_limit,
    witness_point,
)

o = parse_ordinal
W = OMEGA
TOL = 1e-12

EXPONENTS = [ZERO, ONE, o("2"), o("w"), o("w+1"), o("w*2"), o("w^2")]


def rnd(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def tuple_to_ordinal(p):
    """Coefficient tuple from the oracle helpers to a package ordinal."""
    out = ZERO
    for e in range(4, -1, -1):
        if p[e]:
            out = add(out, mul_nat(omega_pow(e), p[e]))
    return out


def as_point_fun(f):
    return lambda p: f.eval(tuple_to_ordinal(p))


def criterion_grid():
    """All w*j+k with j, k <= 32, plus the limit points w*j."""
    pts = [(k, j, 0, 0, 0) for j in range(33) for k in range(1, 33)]
    pts += [(0, j, 0, 0, 0) for j in range(1, 33)]
    return pts


class TestBaseAndConstants:
    def test_width_zero_first_argument_averages_in(self):
        f = constant(ONE, 4.0)
        g = random_stepfun(rnd(0), o("w^2"), REAL, 6)
        h = overlap_map(0, 2, f, g)
        assert h.top == g.top
        for p in list(g.ends) + [ONE, o("w+3")]:
            assert h.eval(p) == 0.5 * (4.0 + g.eval(p))

    def test_two_constants_collapse_to_one_piece(self):
        f = constant(omega_pow(o("w")), 2.0 + 1.0j, COMPLEX)
        g = constant(omega_pow(o("w*2")), -1.0j, COMPLEX)
        h = overlap_map(o("w"), o("w*2"), f, g)
        assert h.piece_count == 1
        assert h.top == omega_pow(o("w*3"))
        assert h.values[0] == 0.5 * ((2.0 + 1.0j) + (-1.0j))

    def test_swap_is_definitional(self):
        rng = rnd(1)
        for a, b in [(ONE, o("2")), (o("2"), o("w")), (o("w"), o("w+1"))]:
            f = random_stepfun(rng, omega_pow(a), COMPLEX, 5)
            g = random_stepfun(rng, omega_pow(b), COMPLEX, 5)
            assert overlap_map(b, a, g, f) == overlap_map(a, b, f, g)

    def test_top_value_is_average_of_top_values(self):
        rng = rnd(2)
        for a, b in [(ONE, ONE), (ONE, o("w")), (o("w"), o("w"))]:
            f = random_stepfun(rng, omega_pow(a), COMPLEX, 5)
            g = random_stepfun(rng, omega_pow(b), COMPLEX, 5)
            h = overlap_map(a, b, f, g)
            assert h.top == omega_pow(natural_sum(a, b))
            assert abs(h.eval(h.top) - 0.5 * (f.eval(f.top) + g.eval(g.top))) <= TOL


class TestFrozenInterleaving:
    """Values pinned by hand from the two-block layout on [1, w^2].

    f is the indicator of {1} and g is identically 1; odd blocks freeze g
    at one integer and walk the tail of f, even blocks do the opposite.
    """

    @pytest.fixture()
    def h(self):
        f = indicator_point(W, 1)
        g = constant(W, 1.0)
        return overlap_map(1, 1, f, g)

    @pytest.mark.parametrize(
        "point,expected",
        [
            ("1", 1.0),
            ("2", 0.5),
            ("w", 0.5),
            ("w+1", 1.0),
            ("w*2", 1.0),
            ("w*2+5", 0.5),
            ("w^2", 0.5),
        ],
    )
    def test_pinned_value(self, h, point, expected):
        assert h.eval(o(point)) == expected


class TestTranscriptionOracle:
    """The map must match the straight-line second route pointwise."""

    PAIRS = [
        (1, 1, "w", "w", oracles.overlap_1_1, (0, 0, 1, 0, 0)),
        (1, 2, "w", "w^2", oracles.overlap_1_2, (0, 0, 0, 1, 0)),
        (2, 2, "w^2", "w^2", oracles.overlap_2_2, (0, 0, 0, 0, 1)),
    ]

    @pytest.mark.parametrize("a,b,ftop,gtop,oracle,top_t", PAIRS)
    def test_matches_on_criterion_grid(self, a, b, ftop, gtop, oracle, top_t):
        rng = rnd(1000 + 10 * a + b)
        pts = criterion_grid() + [top_t]
        ords = [tuple_to_ordinal(p) for p in pts]
        for _ in range(10):
            f = random_stepfun(rng, o(ftop), COMPLEX, 5)
            g = random_stepfun(rng, o(gtop), COMPLEX, 5)
            h = overlap_map(a, b, f, g)
            fw, gw = as_point_fun(f), as_point_fun(g)
            for p, q in zip(pts, ords):
                assert abs(h.eval(q) - oracle(fw, gw, p)) <= TOL

    def test_matches_deep_into_higher_blocks(self):
        """The criterion grid only sees the first block of the level-2 and
        level-3 layouts, so push a sparser grid through all of them."""
        rng = rnd(77)
        deep12 = [
            (k, q, p, 0, 0) for p in range(7) for q in range(7) for k in range(7)
        ]
        deep22 = [
            (k, q, p, s, 0)
            for s in range(5)
            for p in range(5)
            for q in range(5)
            for k in range(5)
        ]
        for pts, (a, b, ftop, gtop, oracle, top_t) in (
            (deep12, self.PAIRS[1]),
            (deep22, self.PAIRS[2]),
        ):
            pts = [p for p in pts if any(p)] + [top_t]
            ords = [tuple_to_ordinal(p) for p in pts]
            for _ in range(5):
                f = random_stepfun(rng, o(ftop), COMPLEX, 5)
                g = random_stepfun(rng, o(gtop), COMPLEX, 5)
                h = overlap_map(a, b, f, g)
                fw, gw = as_point_fun(f), as_point_fun(g)
                for p, q in zip(pts, ords):
                    assert abs(h.eval(q) - oracle(fw, gw, p)) <= TOL


class TestWitness:
    def test_identity_on_random_tuples(self):
        """1000 random (a, b, s, t, f, g) draws over exponents {0, 1, 2, w}."""
        rng = rnd(3)
        exps = [ZERO, ONE, o("2"), o("w")]
        cache = {}
        for _ in range(1000):
            a = exps[int(rng.integers(0, 4))]
            b = exps[int(rng.integers(0, 4))]
            f = random_stepfun(rng, omega_pow(a), COMPLEX, 4)
            g = random_stepfun(rng, omega_pow(b), COMPLEX, 4)
            s = random_point(rng, f.top)
            t = random_point(rng, g.top)
            wp = witness_point(a, b, s, t)
            assert wp.kind == "plain" and wp.source == (s, t)
            h = overlap_map(a, b, f, g)
            assert abs(h.eval(wp.point) - 0.5 * (f.eval(s) + g.eval(t))) <= TOL
            cache[(a, b)] = (f, g, h)

    def test_corners(self):
        a, b = ONE, o("w")
        top = omega_pow(natural_sum(a, b))
        assert witness_point(a, b, omega_pow(a), omega_pow(b)).point == top
        assert witness_point(0, 0, 1, 1).point == ONE

    def test_rejects_out_of_range_sources(self):
        with pytest.raises(OverlapDomainError):
            witness_point(1, 1, ZERO, ONE)
        with pytest.raises(OverlapDomainError):
            witness_point(1, 1, o("w+1"), ONE)


class TestDecompose:
    def test_identity_on_random_points(self):
        rng = rnd(4)
        exps = [ZERO, ONE, o("2"), o("w")]
        for _ in range(1000):
            a = exps[int(rng.integers(0, 4))]
            b = exps[int(rng.integers(0, 4))]
            f = random_stepfun(rng, omega_pow(a), COMPLEX, 4)
            g = random_stepfun(rng, omega_pow(b), COMPLEX, 4)
            h = overlap_map(a, b, f, g)
            r = random_point(rng, h.top)
            s, t = decompose_point(a, b, r)
            assert ONE <= s <= f.top and ONE <= t <= g.top
            assert abs(h.eval(r) - 0.5 * (f.eval(s) + g.eval(t))) <= TOL

    def test_round_trip_witnesses_agree_in_value(self):
        """decompose(witness(s, t)) may pick a different pair, but both pairs
        must explain the same output value."""
        rng = rnd(5)
        for _ in range(300):
            a, b = o("2"), o("w")
            f = random_stepfun(rng, omega_pow(a), COMPLEX, 4)
            g = random_stepfun(rng, omega_pow(b), COMPLEX, 4)
            h = overlap_map(a, b, f, g)
            s = random_point(rng, f.top)
            t = random_point(rng, g.top)
            r = witness_point(a, b, s, t).point
            s2, t2 = decompose_point(a, b, r)
            v1 = 0.5 * (f.eval(s) + g.eval(t))
            v2 = 0.5 * (f.eval(s2) + g.eval(t2))
            assert abs(h.eval(r) - v1) <= TOL
            assert abs(v1 - v2) <= TOL

    def test_top_decomposes_to_tops(self):
        a, b = o("w"), o("w*2")
        top = omega_pow(natural_sum(a, b))
        assert decompose_point(a, b, top) == (omega_pow(a), omega_pow(b))

    def test_rejects_out_of_range(self):
        with pytest.raises(OverlapDomainError):
            decompose_point(1, 1, ZERO)
        with pytest.raises(OverlapDomainError):
            decompose_point(1, 1, add(omega_pow(o("2")), 1))


class TestContracts:
    @pytest.mark.parametrize("a,b", [(0, 1), (1, 1), (1, 2), (2, 2), (1, "w"), ("w", "w")])
    def test_sampled_contracts_hold(self, a, b):
        rng = rnd(600)
        for field in (REAL, COMPLEX):
            checks = check_overlap_properties(o(str(a)), o(str(b)), 40, rng, field=field)
            assert {c.name for c in checks} == {
                "additivity",
                "homogeneity",
                "norm_bound",
                "witness",
                "decompose",
            }
            for c in checks:
                assert c.passed, f"{c.name}: {c.counterexample}"
                assert c.checked == 40 and c.failed == 0

    @pytest.mark.parametrize("a,b", [("w", "w+1"), ("w+1", "w+2")])
    def test_sampled_contracts_hold_above_omega(self, a, b):
        rng = rnd(601)
        for c in check_overlap_properties(o(a), o(b), 15, rng, field=COMPLEX, max_pieces=3):
            assert c.passed, f"{c.name}: {c.counterexample}"

    def test_output_is_canonical_and_bounded(self):
        # Unconstrained breakpoints above w breed outputs with 10^5+ pieces,
        # so the random draws stop at w+1; bigger exponents get hand-built
        # inputs in the flavor test below.
        rng = rnd(6)
        safe = EXPONENTS[:5]
        for _ in range(60):
            a = safe[int(rng.integers(0, len(safe)))]
            b = safe[int(rng.integers(0, len(safe)))]
            f = random_stepfun(rng, omega_pow(a), COMPLEX, 4)
            g = random_stepfun(rng, omega_pow(b), COMPLEX, 4)
            h = overlap_map(a, b, f, g)
            validate_invariants(h)
            assert sup_norm(h) <= 0.5 * (sup_norm(f) + sup_norm(g)) + TOL

    def test_nonnegative_inputs_attain_the_norm_cap(self):
        # Disjoint supports do not tame the output. Some point still pairs
        # the peak of f with the peak of g, so the cap 0.5*(|f| + |g|) is
        # hit exactly for nonnegative inputs.
        f = indicator_interval(W, ZERO, ONE)
        g = indicator_interval(W, ONE, W)
        h = overlap_map(1, 1, f, g)
        assert abs(sup_norm(h) - 1.0) <= TOL
        wp = witness_point(ONE, ONE, ONE, o("2"))
        assert abs(h.eval(wp.point) - 1.0) <= TOL


class TestCaseTree:
    def test_tree_result_equals_plain_result(self):
        rng = rnd(7)
        for a, b in [(ONE, ONE), (ONE, o("w")), (o("w"), o("w")), (o("2"), o("w+1"))]:
            f = random_stepfun(rng, omega_pow(a), COMPLEX, 4)
            g = random_stepfun(rng, omega_pow(b), COMPLEX, 4)
            h1 = overlap_map(a, b, f, g)
            h2, case = overlap_case_tree(a, b, f, g)
            assert h1 == h2
            case.validate()

    def test_expected_tags(self):
        rng = rnd(8)

        def root_tag(a, b):
            f = random_stepfun(rng, omega_pow(o(a)), REAL, 4)
            g = random_stepfun(rng, omega_pow(o(b)), REAL, 4)
            _, case = overlap_case_tree(o(a), o(b), f, g)
            return case.tag

        assert root_tag("0", "w") in ("base", "tail")
        assert root_tag("1", "1") in ("succ-succ-diag", "tail")
        assert root_tag("1", "2") in ("succ-succ", "tail")
        assert root_tag("1", "w") in ("succ-limit", "tail")
        assert root_tag("w", "w") in ("limit-base", "tail")
        assert root_tag("w", "w+1") in ("limit-succ", "tail")
        assert root_tag("w", "w*2") in ("limit-limit", "tail")

    def test_swap_recorded(self):
        f = random_stepfun(rnd(9), omega_pow(o("2")), REAL, 4)
        g = random_stepfun(rnd(10), omega_pow(ONE), REAL, 4)
        _, case = overlap_case_tree(o("2"), ONE, f, g)
        assert case.tag == "swap"
        assert len(case.children) == 1

    def test_json_shape(self):
        f = indicator_point(W, 2)
        g = constant(W, 1.0)
        data = dump_case_tree(1, 1, f, g)
        assert set(data) == {"tag", "a", "b", "intervals", "children"}
        assert data["a"] == "1" and data["b"] == "1"
        assert all(
            set(iv) == {"lo", "hi", "kind", "note"} for iv in data["intervals"]
        )
        kinds = {iv["kind"] for iv in data["intervals"]}
        assert kinds <= {"recurse", "constant", "skipped"}


class TestDiagnostics:
    def test_domain_mismatch(self):
        f = constant(W, 1.0)
        with pytest.raises(OverlapDomainError):
            overlap_map(2, 1, f, f)
        with pytest.raises(OverlapDomainError):
            overlap_map(1, 1, f, constant(W, 1.0, COMPLEX))

    def test_depth_cap(self):
        keep = recursion_limit()
        set_recursion_limit(2)
        try:
            f = random_stepfun(rnd(11), omega_pow(o("w")), REAL, 5)
            g = random_stepfun(rnd(12), omega_pow(o("w")), REAL, 5)
            with pytest.raises(RecursionBudgetError):
                overlap_map(o("w"), o("w"), f, g)
        finally:
            set_recursion_limit(keep)

    def test_injected_tail_error_is_caught(self):
        """The self-check suite must notice a 1e-3 corruption of tail values."""
        rng = rnd(13)
        set_debug_tail_offset(1e-3)
        try:
            checks = check_overlap_properties(o("w"), o("w"), 10, rng, field=REAL)
            assert any(not c.passed for c in checks)
        finally:
            set_debug_tail_offset(0.0)
        checks = check_overlap_properties(o("w"), o("w"), 10, rng, field=REAL)
        assert all(c.passed for c in checks)

    def test_limit_inputs_of_every_flavor_round_trip(self):
        """Exercise composite limit exponents with hand-placed breakpoints.

        Breakpoints are kept at small ranks on purpose: a single random break
        near the top of [1, w^(w^2)] already makes the output astronomically
        wide, which is correct but useless as a test.
        """
        rng = rnd(14)

        def two_piece(top, brk):
            z = rng.standard_normal(4)
            return StepFun(
                COMPLEX, top, [(brk, z[0] + 1j * z[1]), (top, z[2] + 1j * z[3])]
            )

        flavors = [
            ("w", "w^2", "w^2", "w^(w+1)"),
            ("w*2", "w*2", "w^(w+1)", "w^w"),
            ("w^2", "w^2+w", "w^(w*2)", "w^(w^2+1)"),
        ]
        for a, b, fbrk, gbrk in flavors:
            f = two_piece(omega_pow(o(a)), o(fbrk))
            g = two_piece(omega_pow(o(b)), o(gbrk))
            h, case = overlap_case_tree(o(a), o(b), f, g)
            case.validate()
            validate_invariants(h)
            assert h == overlap_map(o(a), o(b), f, g)
            for _ in range(20):
                r = random_point(rng, h.top)
                s, t = decompose_point(o(a), o(b), r)
                assert abs(h.eval(r) - 0.5 * (f.eval(s) + g.eval(t))) <= TOL
