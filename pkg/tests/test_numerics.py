"""The portable exp/log and the canonical float formats."""

import json
import math

import numpy as np

from unidet.numerics import (
    format_fixed6,
    format_shortest,
    format_sig9,
    pexp,
    plog,
    plog_scalar,
    seq_sum,
    softmax,
)


class TestPortableExpLog:
    def test_exp_matches_libm_to_a_few_ulp(self):
        rng = np.random.default_rng(7)
        xs = np.concatenate(
            [rng.uniform(-60, 60, 50000), rng.uniform(-0.4, 0.4, 50000)]
        )
        ours = pexp(xs)
        ref = np.exp(xs)
        rel = np.abs(ours - ref) / ref
        assert rel.max() < 1e-15

    def test_log_matches_libm(self):
        rng = np.random.default_rng(8)
        xs = np.concatenate(
            [rng.uniform(1e-12, 2.0, 50000), 10.0 ** rng.uniform(-30, 30, 50000)]
        )
        ours = plog(xs)
        ref = np.log(xs)
        assert np.max(np.abs(ours - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-15

    def test_exact_anchor_points(self):
        assert float(pexp(0.0)) == 1.0
        assert plog_scalar(1.0) == 0.0
        assert float(pexp(-800.0)) == 0.0
        assert float(pexp(800.0)) == math.inf

    def test_vectorized_equals_scalar_loop(self):
        rng = np.random.default_rng(9)
        xs = rng.uniform(-30, 5, 2000)
        vec = pexp(xs)
        for i, x in enumerate(xs):
            assert float(pexp(float(x))) == vec[i]
        ys = rng.uniform(1e-10, 10, 2000)
        vecl = plog(ys)
        for i, y in enumerate(ys):
            assert plog_scalar(float(y)) == vecl[i]

    def test_softmax_normalizes_and_orders(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            logits = rng.normal(0, 3, rng.integers(2, 40))
            p = softmax(logits)
            assert abs(seq_sum(p) - 1.0) < 1e-12
            assert np.all(p > 0)
            assert np.argmax(p) == np.argmax(logits)

    def test_seq_sum_is_left_to_right(self):
        # a case where pairwise summation would differ
        values = [1e16, 1.0, -1e16, 1.0]
        assert seq_sum(values) == ((1e16 + 1.0) - 1e16) + 1.0


class TestFloatFormats:
    def test_sig9_reference_values(self):
        assert format_sig9(0.5) == "0.5"
        assert format_sig9(-0.5) == "-0.5"
        assert format_sig9(0.0) == "0"
        assert format_sig9(math.log(4)) == "1.38629436"
        assert format_sig9(1.0) == "1"
        assert format_sig9(123456789012.0) == "123456789000"
        assert format_sig9(1e-5) == "0.00001"
        assert format_sig9(1e-7) == "1e-7"
        assert format_sig9(1.23e-9) == "1.23e-9"
        assert format_sig9(9.999999995e-9) == "1e-8"
        assert format_sig9(1e20) == "1e20"

    def test_sig9_roundtrip_stable(self):
        rng = np.random.default_rng(11)
        values = np.concatenate(
            [
                rng.normal(0, 1, 20000),
                10.0 ** rng.uniform(-12, 12, 20000) * rng.choice([-1, 1], 20000),
            ]
        )
        for v in values.tolist():
            s = format_sig9(v)
            parsed = json.loads(s)
            assert format_sig9(float(parsed)) == s
            assert abs(parsed - v) <= 1e-8 * abs(v)

    def test_shortest_roundtrip_lossless(self):
        rng = np.random.default_rng(12)
        for v in rng.normal(0, 100, 20000).tolist():
            assert json.loads(format_shortest(v)) == v

    def test_all_outputs_are_valid_json_numbers(self):
        rng = np.random.default_rng(13)
        for v in (10.0 ** rng.uniform(-25, 25, 5000) * rng.choice([-1, 1], 5000)).tolist():
            json.loads(format_sig9(v))
            json.loads(format_shortest(v))

    def test_fixed6(self):
        assert format_fixed6(0.85) == "0.850000"
        assert format_fixed6(1.0) == "1.000000"
        assert json.loads(format_fixed6(0.123456789)) == 0.123457
