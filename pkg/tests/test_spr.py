"""Tests for the phase retrieval functionals, estimator and certificates."""

import json
import math

import numpy as np
import pytest

from sprlab.embeddings import (
    c0_embedding,
    complex_embedding,
    embed_complex,
    embed_real,
    real_embedding,
)
from sprlab.funcspace import (
    COMPLEX,
    REAL,
    StepFun,
    indicator_interval,
    linear_combine,
    random_stepfun,
    sup_norm,
)
from sprlab.ordinal import ZERO, from_int, omega_pow, parse_ordinal
from sprlab.spr import (
    DELTA0,
    REAL_RATIO_BOUND,
    SEPARATION_THRESHOLD,
    CertificateResult,
    SprDomainError,
    SprReport,
    check_complex_certificate,
    check_real_certificate,
    check_relaxed_overlap_hypothesis,
    dist_up_to_phase,
    estimate_spr_constant,
    modulus_gap,
    overlap_norm,
    product_norm,
    re_corr_norm,
    report_csv_rows,
    report_from_json,
    report_to_json,
    reverify_report,
    spr_ratio,
    worker_cap,
)

from oracles import circle_distance_dense

TOL = 1e-9
W = parse_ordinal("w")
TWO = from_int(2)


def pair_on_two(f_values, g_values, field):
    ends = [from_int(1), from_int(2)]
    f = StepFun(field, TWO, zip(ends, f_values))
    g = StepFun(field, TWO, zip(ends, g_values))
    return f, g


def unit_random(rng, top, field):
    for _ in range(32):
        f = random_stepfun(rng, top, field, 5)
        n = sup_norm(f)
        if n > 1e-6:
            return linear_combine([1.0 / n], [f])
    raise AssertionError("random draw kept returning near-zero functions")


class TestDistUpToPhase:
    def test_exact_phase_multiple_scores_zero(self):
        rng = np.random.default_rng(3)
        f = random_stepfun(rng, omega_pow(TWO), COMPLEX, 6)
        lam = complex(np.exp(1j * 1.234))
        g = linear_combine([lam], [f])
        assert dist_up_to_phase(f, g) <= TOL

    def test_real_sign_flip_scores_zero(self):
        rng = np.random.default_rng(4)
        f = random_stepfun(rng, W, REAL, 6)
        g = linear_combine([-1.0], [f])
        assert dist_up_to_phase(f, g) == 0.0

    def test_real_pair_picks_the_better_sign(self):
        f, g = pair_on_two([1.0, 0.75], [1.0, -0.75], REAL)
        # Direct: max(0, 1.5) = 1.5.  Flipped: max(2, 0) = 2.
        assert dist_up_to_phase(f, g) == 1.5

    def test_agrees_with_dense_circle_scan(self):
        rng = np.random.default_rng(8)
        top = omega_pow(TWO)
        for _ in range(30):
            f = unit_random(rng, top, COMPLEX)
            g = unit_random(rng, top, COMPLEX)
            got = dist_up_to_phase(f, g)
            from sprlab.spr import _refined

            fv, gv = _refined(f, g)
            dense = circle_distance_dense(fv, gv)
            # The refined search may only beat the dense scan; the scan
            # itself reads high near a kink by a few parts in 1e6.
            assert got <= dense + TOL
            assert abs(got - dense) <= 5e-6

    def test_symmetric_up_to_tolerance(self):
        rng = np.random.default_rng(9)
        top = W
        for _ in range(20):
            f = random_stepfun(rng, top, COMPLEX, 5)
            g = random_stepfun(rng, top, COMPLEX, 5)
            assert abs(dist_up_to_phase(f, g) - dist_up_to_phase(g, f)) <= 2 * TOL

    def test_invariant_under_rotating_one_argument(self):
        rng = np.random.default_rng(10)
        top = W
        for _ in range(20):
            f = random_stepfun(rng, top, COMPLEX, 5)
            g = random_stepfun(rng, top, COMPLEX, 5)
            lam = complex(np.exp(1j * rng.uniform(0.0, 2 * math.pi)))
            rotated = linear_combine([lam], [g])
            assert abs(
                dist_up_to_phase(f, rotated) - dist_up_to_phase(f, g)
            ) <= 1e-8

    def test_scales_under_doubling(self):
        rng = np.random.default_rng(11)
        for field in (REAL, COMPLEX):
            for _ in range(10):
                f = random_stepfun(rng, W, field, 5)
                g = random_stepfun(rng, W, field, 5)
                f2 = linear_combine([2.0], [f])
                g2 = linear_combine([2.0], [g])
                for norm in (modulus_gap, overlap_norm):
                    assert norm(f2, g2) == 2.0 * norm(f, g)
                for norm in (product_norm, re_corr_norm):
                    assert norm(f2, g2) == 4.0 * norm(f, g)
                d1 = dist_up_to_phase(f, g)
                d2 = dist_up_to_phase(f2, g2)
                if field == REAL:
                    assert d2 == 2.0 * d1
                else:
                    # The circle search resolves the minimum to tol only,
                    # so doubling matches to a few tol.
                    assert d2 == pytest.approx(2.0 * d1, abs=4e-9)

    def test_dominates_the_modulus_gap(self):
        rng = np.random.default_rng(12)
        for field in (REAL, COMPLEX):
            for _ in range(25):
                f = random_stepfun(rng, W, field, 5)
                g = random_stepfun(rng, W, field, 5)
                assert modulus_gap(f, g) <= dist_up_to_phase(f, g) + 2 * TOL

    def test_rejects_bad_inputs(self):
        f = indicator_interval(TWO, ZERO, from_int(1), REAL)
        g = indicator_interval(TWO, ZERO, from_int(1), COMPLEX)
        with pytest.raises(SprDomainError):
            dist_up_to_phase(f, g)
        h = indicator_interval(W, ZERO, from_int(1), REAL)
        with pytest.raises(SprDomainError):
            dist_up_to_phase(f, h)
        with pytest.raises(SprDomainError):
            dist_up_to_phase(f, f, tol=0.0)
        with pytest.raises(TypeError):
            dist_up_to_phase(f, f, tol="tight")
        with pytest.raises(TypeError):
            dist_up_to_phase(f, f, tol=True)


class TestModulusFunctionals:
    def test_disjoint_supports_kill_overlap_and_product(self):
        f = indicator_interval(TWO, ZERO, from_int(1), REAL)
        g = indicator_interval(TWO, from_int(1), TWO, REAL)
        assert overlap_norm(f, g) == 0.0
        assert product_norm(f, g) == 0.0

    def test_equal_functions_have_zero_gap(self):
        rng = np.random.default_rng(21)
        f = random_stepfun(rng, omega_pow(TWO), COMPLEX, 6)
        assert modulus_gap(f, f) == 0.0

    def test_quarter_turn_annihilates_the_real_correlation(self):
        rng = np.random.default_rng(22)
        f = random_stepfun(rng, W, COMPLEX, 6)
        g = linear_combine([1j], [f])
        # Fused multiply-adds leave a residue near 1e-17 where exact
        # arithmetic gives zero.
        assert re_corr_norm(f, g) <= 1e-15

    def test_frozen_values_on_a_two_piece_pair(self):
        f, g = pair_on_two([3.0, -1.0], [2.0, 2.0], REAL)
        assert modulus_gap(f, g) == 1.0
        assert overlap_norm(f, g) == 2.0
        assert product_norm(f, g) == 6.0
        assert re_corr_norm(f, g) == 6.0

    def test_norm_bounds_hold_on_random_pairs(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            f = random_stepfun(rng, W, COMPLEX, 5)
            g = random_stepfun(rng, W, COMPLEX, 5)
            nf, ng = sup_norm(f), sup_norm(g)
            slack = 1e-12
            assert overlap_norm(f, g) <= min(nf, ng) + slack
            assert modulus_gap(f, g) <= max(nf, ng) + slack
            assert product_norm(f, g) <= nf * ng + slack
            assert re_corr_norm(f, g) <= product_norm(f, g) + slack


class TestSprRatio:
    def test_phase_multiple_scores_one(self):
        rng = np.random.default_rng(31)
        f = random_stepfun(rng, W, COMPLEX, 6)
        g = linear_combine([complex(np.exp(0.7j))], [f])
        assert spr_ratio(f, g) == 1.0

    def test_equal_modulus_pair_with_genuine_distance_scores_inf(self):
        # Sum and difference of disjoint indicators share their modulus
        # while staying a fixed distance apart for every phase.
        u = indicator_interval(TWO, ZERO, from_int(1), COMPLEX)
        v = indicator_interval(TWO, from_int(1), TWO, COMPLEX)
        f = linear_combine([1.0, 1.0], [u, v])
        g = linear_combine([1.0, -1.0], [u, v])
        assert modulus_gap(f, g) == 0.0
        assert dist_up_to_phase(f, g) == pytest.approx(math.sqrt(2.0), abs=1e-9)
        assert spr_ratio(f, g) == math.inf

    def test_real_equal_modulus_pair_scores_inf(self):
        u = indicator_interval(TWO, ZERO, from_int(1), REAL)
        v = indicator_interval(TWO, from_int(1), TWO, REAL)
        f = linear_combine([1.0, 1.0], [u, v])
        g = linear_combine([1.0, -1.0], [u, v])
        assert modulus_gap(f, g) == 0.0
        assert dist_up_to_phase(f, g) == 2.0
        assert spr_ratio(f, g) == math.inf

    def test_matches_the_quotient_when_the_gap_is_healthy(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            f = random_stepfun(rng, W, COMPLEX, 5)
            g = random_stepfun(rng, W, COMPLEX, 5)
            gap = modulus_gap(f, g)
            if gap <= TOL:
                continue
            want = dist_up_to_phase(f, g) / gap
            assert spr_ratio(f, g) == pytest.approx(want, rel=1e-12)

    def test_never_drops_below_one(self):
        rng = np.random.default_rng(33)
        for field in (REAL, COMPLEX):
            for _ in range(25):
                f = random_stepfun(rng, W, field, 5)
                g = random_stepfun(rng, W, field, 5)
                assert spr_ratio(f, g) >= 1.0 - 1e-7


class TestEstimate:
    def test_real_diagonal_stays_under_the_chained_bound(self):
        report = estimate_spr_constant(real_embedding(1), 1, 2000, 42)
        assert report.field == REAL
        assert report.samples == 2000
        assert report.seed == 42
        assert 1.0 <= report.worst_ratio <= REAL_RATIO_BOUND * (1 + TOL)
        cert = report.certificates[0]
        assert cert.name == "real_overlap"
        assert cert.threshold == pytest.approx(1.0 / 3.0)
        assert cert.passed
        assert cert.worst_value >= 1.0 / 3.0 - 1e-9
        assert cert.checked == 2000
        assert reverify_report(report)

    def test_complex_doubled_interval_certificate_passes(self):
        report = estimate_spr_constant(complex_embedding(1), 1, 1500, 5)
        assert report.field == COMPLEX
        assert math.isfinite(report.worst_ratio)
        cert = report.certificates[0]
        assert cert.name == "complex_re_correlation"
        assert cert.threshold == DELTA0
        assert cert.passed
        assert cert.checked + cert.rejected == report.samples
        assert cert.checked > 0
        assert cert.worst_value >= DELTA0
        assert reverify_report(report)

    def test_sequence_span_keeps_a_finite_worst_ratio(self):
        report = estimate_spr_constant(c0_embedding(6), 6, 1000, 21)
        assert report.field == COMPLEX
        assert math.isfinite(report.worst_ratio)
        assert report.worst_ratio >= 1.0
        assert reverify_report(report)

    def test_ordinal_exponent_is_accepted(self):
        report = estimate_spr_constant(real_embedding(W), W, 400, 7)
        assert report.samples == 400
        assert report.certificates[0].passed

    def test_zero_budget_yields_an_empty_report(self):
        report = estimate_spr_constant(real_embedding(1), 1, 0, 13)
        assert report.samples == 0
        assert report.worst_ratio == 0.0
        assert report.worst_pair is None
        assert report.certificates == ()
        assert reverify_report(report)

    def test_same_seed_reproduces_the_report_byte_for_byte(self):
        first = estimate_spr_constant(complex_embedding(1), 1, 600, 77)
        second = estimate_spr_constant(complex_embedding(1), 1, 600, 77)
        a = json.dumps(report_to_json(first), sort_keys=True)
        b = json.dumps(report_to_json(second), sort_keys=True)
        assert a == b

    def test_worker_count_does_not_change_the_report(self, monkeypatch):
        monkeypatch.setenv("SPRLAB_THREADS", "1")
        serial = estimate_spr_constant(real_embedding(1), 1, 600, 19)
        monkeypatch.setenv("SPRLAB_THREADS", "4")
        threaded = estimate_spr_constant(real_embedding(1), 1, 600, 19)
        assert json.dumps(report_to_json(serial), sort_keys=True) == json.dumps(
            report_to_json(threaded), sort_keys=True
        )

    def test_live_generator_is_accepted_and_leaves_seed_unset(self):
        gen = np.random.default_rng(55)
        report = estimate_spr_constant(real_embedding(1), 1, 200, gen)
        assert report.seed is None
        assert report.samples == 200

    def test_rejects_bad_rng_and_budget(self):
        with pytest.raises(SprDomainError):
            estimate_spr_constant(real_embedding(1), 1, 10, "seed")
        with pytest.raises(SprDomainError):
            estimate_spr_constant(real_embedding(1), 1, 10, True)
        with pytest.raises(TypeError):
            estimate_spr_constant(real_embedding(1), 1, 2.5, 1)
        with pytest.raises(SprDomainError):
            estimate_spr_constant(c0_embedding(4), 0, 10, 1)


class TestWorkerCap:
    def test_env_override_wins(self, monkeypatch):
        monkeypatch.setenv("SPRLAB_THREADS", "5")
        assert worker_cap() == 5

    def test_silly_values_fall_back_and_clamp(self, monkeypatch):
        monkeypatch.setenv("SPRLAB_THREADS", "not-a-number")
        assert worker_cap() >= 1
        monkeypatch.setenv("SPRLAB_THREADS", "0")
        assert worker_cap() >= 1
        monkeypatch.setenv("SPRLAB_THREADS", "700")
        assert worker_cap() == 64


class TestRealCertificate:
    def build_unit_image_pairs(self, count, seed):
        rng = np.random.default_rng(seed)
        pairs = []
        for _ in range(count):
            f = unit_random(rng, W, REAL)
            g = unit_random(rng, W, REAL)
            pairs.append((embed_real(1, f), embed_real(1, g)))
        return pairs

    def test_diagonal_images_pass_at_three(self):
        result = check_real_certificate(self.build_unit_image_pairs(40, 101), 3.0)
        assert result.passed
        assert result.checked == 40
        assert result.worst_value >= 1.0 / 3.0 - 1e-9

    def test_disjoint_unit_pair_fails_at_three(self):
        f = indicator_interval(TWO, ZERO, from_int(1), REAL)
        g = indicator_interval(TWO, from_int(1), TWO, REAL)
        result = check_real_certificate([(f, g)], 3.0)
        assert not result.passed
        assert result.worst_value == 0.0
        assert result.worst_pair is not None

    def test_infinite_constant_is_vacuous(self):
        f = indicator_interval(TWO, ZERO, from_int(1), REAL)
        g = indicator_interval(TWO, from_int(1), TWO, REAL)
        result = check_real_certificate([(f, g)], math.inf)
        assert result.passed
        assert result.threshold == 0.0

    def test_empty_batch_passes_vacuously(self):
        result = check_real_certificate([], 3.0)
        assert result.passed
        assert result.checked == 0
        assert result.worst_value == math.inf

    def test_rejects_unnormalized_pairs_and_bad_constant(self):
        f = indicator_interval(TWO, ZERO, from_int(1), REAL)
        big = linear_combine([2.0], [f])
        with pytest.raises(SprDomainError):
            check_real_certificate([(big, f)], 3.0)
        with pytest.raises(SprDomainError):
            check_real_certificate([(f, f)], 0.0)
        with pytest.raises(SprDomainError):
            check_real_certificate([(f, f)], -1.0)


class TestComplexCertificate:
    def build_entries(self, count, seed):
        rng = np.random.default_rng(seed)
        entries = []
        while len(entries) < count:
            f = unit_random(rng, W, COMPLEX)
            g = unit_random(rng, W, COMPLEX)
            entries.append((f, g, embed_complex(1, f), embed_complex(1, g)))
        return entries

    def test_separated_pairs_clear_the_default_threshold(self):
        entries = self.build_entries(30, 202)
        result = check_complex_certificate(entries)
        assert result.passed
        assert result.threshold == DELTA0
        assert result.checked + result.rejected == 30
        assert result.checked > 0
        assert result.worst_value >= DELTA0

    def test_near_phase_pair_is_rejected_not_counted(self):
        rng = np.random.default_rng(203)
        f = unit_random(rng, W, COMPLEX)
        g = linear_combine([complex(np.exp(0.4j))], [f])
        entries = [(f, g, embed_complex(1, f), embed_complex(1, g))]
        result = check_complex_certificate(entries)
        assert result.rejected == 1
        assert result.checked == 0
        assert result.passed
        assert result.worst_value == math.inf
        assert result.worst_pair is None

    def test_default_separation_matches_the_advertised_threshold(self):
        assert SEPARATION_THRESHOLD == pytest.approx(0.2)

    def test_rejects_nonpositive_parameters(self):
        with pytest.raises(SprDomainError):
            check_complex_certificate([], separation=0.0)
        with pytest.raises(SprDomainError):
            check_complex_certificate([], delta=-1e-9)

    def test_threshold_constant_is_frozen(self):
        # Half of the smaller ceiling, cubed; the cube wins the minimum.
        ceiling_a = (math.sqrt(12.0) / 5.0 - 0.5) / 30.0
        ceiling_b = 1.0 / (25.0 * math.sqrt(12.0))
        c = 0.5 * min(ceiling_a, ceiling_b)
        expected = min(c**3, 0.25 * ((math.sqrt(12.0) / 5.0 - 0.5) / 5.0 - 6.0 * c))
        assert DELTA0 == expected
        assert DELTA0 == pytest.approx(3.3189802425405686e-08, rel=1e-15)
        assert 0.0 < DELTA0 < 1e-6


class TestRelaxedHypothesis:
    def test_sequence_system_witnesses_pass(self):
        result = check_relaxed_overlap_hypothesis(c0_embedding(6), 6, range(1, 7))
        assert result.passed
        assert result.checked == 15
        assert result.worst_value <= 1e-12

    def test_doubled_interval_witnesses_pass(self):
        grid = [from_int(1), from_int(2), from_int(5), W]
        result = check_relaxed_overlap_hypothesis(complex_embedding(1), 1, grid)
        assert result.passed
        assert result.checked == 16
        assert result.worst_value <= 1e-12

    def test_missing_rotated_witnesses_fail(self):
        import dataclasses

        base = c0_embedding(4)
        stripped = dataclasses.replace(
            base,
            witnesses=lambda m, n: tuple(
                w for w in base.witnesses(m, n) if w.kind != "rotated"
            ),
        )
        result = check_relaxed_overlap_hypothesis(stripped, 4, range(1, 5))
        assert not result.passed
        assert result.worst_value == math.inf

    def test_rejects_real_embeddings_and_thin_grids(self):
        with pytest.raises(SprDomainError):
            check_relaxed_overlap_hypothesis(real_embedding(1), 1, [1, 2])
        with pytest.raises(SprDomainError):
            check_relaxed_overlap_hypothesis(c0_embedding(4), 4, [3])
        with pytest.raises(SprDomainError):
            check_relaxed_overlap_hypothesis(c0_embedding(4), 4, [0, 2])


class TestReportSerialization:
    def test_round_trip_preserves_the_report(self):
        report = estimate_spr_constant(real_embedding(1), 1, 500, 404)
        data = report_to_json(report)
        back = report_from_json(json.loads(json.dumps(data)))
        assert report_to_json(back) == data
        assert reverify_report(back)

    def test_infinite_ratio_survives_the_round_trip(self):
        u = indicator_interval(TWO, ZERO, from_int(1), COMPLEX)
        v = indicator_interval(TWO, from_int(1), TWO, COMPLEX)
        f = linear_combine([1.0, 1.0], [u, v])
        g = linear_combine([1.0, -1.0], [u, v])
        report = SprReport(
            field=COMPLEX,
            samples=1,
            worst_ratio=spr_ratio(f, g),
            worst_pair=(f, g),
            certificates=(),
            seed=0,
            tolerances={"tol": TOL},
        )
        data = report_to_json(report)
        assert data["worst_ratio"] == "inf"
        back = report_from_json(data)
        assert back.worst_ratio == math.inf
        assert reverify_report(back)

    def test_tampered_certificate_fails_replay(self):
        rng = np.random.default_rng(405)
        f = unit_random(rng, W, REAL)
        pair = (embed_real(1, f), embed_real(1, f))
        fake = CertificateResult(
            name="real_overlap",
            threshold=1.0 / 3.0,
            passed=False,
            checked=1,
            rejected=0,
            worst_value=overlap_norm(*pair),
            worst_pair=pair,
        )
        report = SprReport(
            field=REAL,
            samples=1,
            worst_ratio=1.0,
            worst_pair=None,
            certificates=(fake,),
            seed=0,
            tolerances={"tol": TOL},
        )
        assert not reverify_report(report)

    def test_csv_rows_cover_every_certificate(self):
        report = estimate_spr_constant(real_embedding(1), 1, 300, 71)
        rows = report_csv_rows("1", report)
        assert rows == [
            ("1", REAL, 300, report.worst_ratio, "real_overlap", True)
        ]
        empty = estimate_spr_constant(real_embedding(1), 1, 0, 71)
        assert report_csv_rows("1", empty) == [("1", REAL, 0, 0.0, "none", True)]
