"""Recurrence engine: family values, coefficients, memo persistence."""

from fractions import Fraction as F

import pytest

from bipcorr import families as fam
from bipcorr.model import (
    InsufficientMomentsError,
    InvalidParamsError,
    ModelParams,
    MomentSequence,
)
from bipcorr.recurrence import ContextMismatchError, CoefficientEngine
from bipcorr.walks import family_total_weight, n_oracle

from conftest import CONTEXT_IDS, ORACLE_TABLES, context


def make_engine(index, count=5):
    params, moments = context(index, count)
    return CoefficientEngine(params, moments)


class TestSingleWalkValues:
    def test_empty_walk_carries_vertex_factor(self):
        engine = make_engine(2)
        assert engine.s_value(fam.single_key(fam.S1, 1, 0, 0)) == F(1, 3)
        assert engine.s_value(fam.single_key(fam.S1, 2, 0, 0)) == F(2, 3)

    def test_impossible_departure_counts_vanish(self):
        engine = make_engine(2)
        assert engine.s_value(fam.single_key(fam.S1, 1, 0, 1)) == 0
        assert engine.s_value(fam.single_key(fam.S1, 1, 3, 0)) == 0
        assert engine.s_value(fam.single_key(fam.S1, 1, 2, 3)) == 0

    def test_one_step_walk(self):
        # The only member is root -> neighbor -> root: alpha1 * alpha2 * V2.
        engine = make_engine(2)
        assert engine.s_value(fam.single_key(fam.S1, 1, 1, 1)) == F(4, 9)
        assert engine.s_value(fam.single_key(fam.S1, 2, 1, 1)) == F(4, 9)

    def test_visiting_family_base(self):
        engine = make_engine(2)
        # One member: blue (1, -1, 1) around the marked part-2 root.
        assert engine.s_value(fam.single_key(fam.S1S, 2, 1, 1)) == F(4, 9)
        assert engine.s_value(fam.single_key(fam.S1S, 2, 0, 0)) == 0


class TestAgainstEnumeration:
    @pytest.mark.parametrize("index", CONTEXT_IDS)
    def test_frozen_coefficients(self, index):
        engine = make_engine(index)
        for (k, m), expected in ORACLE_TABLES[index].items():
            assert engine.correlator_coefficient(k, m) == expected
            assert engine.correlator_coefficient(m, k) == expected

    @pytest.mark.parametrize("index", CONTEXT_IDS)
    def test_family_values_sample(self, index):
        params, moments = context(index)
        engine = CoefficientEngine(params, moments)
        keys = [
            fam.single_key(fam.S1, 1, 2, 1),
            fam.single_key(fam.S1S, 1, 2, 2),
            fam.top_key(1, 2),
            fam.double_key(fam.EQ_C, 1, 1, 1, 1, 1),
            fam.double_key(fam.EQ_ANYC, 2, 1, 1, 1, 0),
            fam.double_key(fam.NEQ_C, 1, 2, 1, 1, 1),
            fam.double_key(fam.NEQ_C_RD, 1, 2, 1, 2, 1),
            fam.double_key(fam.NEQ_ANYC_S, 2, 1, 2, 1, 2),
        ]
        for key in keys:
            assert engine.s_value(key) == family_total_weight(key, params, moments), key

    def test_matches_oracle_on_fresh_pair(self):
        params, moments = context(3, count=4)
        engine = CoefficientEngine(params, moments)
        assert engine.correlator_coefficient(6, 2) == n_oracle(6, 2, params, moments)

    def test_shared_root_shared_edge_spot_value(self):
        # Both walks of half-length 1 from the same part-1 root over one
        # shared edge: alpha1 * alpha2 * V4 / p with alpha=1/2, p=2, V4=5.
        engine = CoefficientEngine(ModelParams(F(1, 2), F(2)), MomentSequence([F(1), F(5)]))
        key = fam.double_key(fam.EQ_C, 1, 1, 1, 1, 1)
        assert engine.s_value(key) == F(5, 8)


class TestCoefficientApi:
    def test_odd_indices_vanish_without_moments(self):
        engine = CoefficientEngine(ModelParams(F(1, 2), F(1)), MomentSequence([]))
        assert engine.correlator_coefficient(3, 2) == 0
        assert engine.correlator_coefficient(2, 5) == 0

    def test_table_covers_grid(self):
        engine = make_engine(1, count=3)
        table = engine.correlator_table(3, 3)
        assert set(table) == {(k, m) for k in (1, 2, 3) for m in (1, 2, 3)}
        assert table[(2, 2)] == 1
        assert table[(1, 1)] == 0 and table[(3, 2)] == 0

    def test_validation_errors(self):
        bad_alpha = CoefficientEngine(ModelParams(F(2), F(1)), MomentSequence([F(1)] * 2))
        with pytest.raises(InvalidParamsError):
            bad_alpha.correlator_coefficient(2, 2)
        short = CoefficientEngine(ModelParams(F(1, 2), F(1)), MomentSequence([F(1)]))
        with pytest.raises(InsufficientMomentsError):
            short.correlator_coefficient(2, 2)

    def test_malformed_key_rejected(self):
        engine = make_engine(1)
        with pytest.raises(fam.UnknownFamilyError):
            engine.s_value(fam.FamilyKey(fam.EQ_C, 1, 1, None, 1, 1))


class TestDeepRegressions:
    # Values frozen after enumeration confirmed the engine at total length 12.
    def test_total_length_twelve(self):
        engine = make_engine(2, count=6)
        assert engine.correlator_coefficient(6, 6) == F(4045, 4)
        assert engine.correlator_coefficient(4, 8) == F(324995, 324)
        assert engine.correlator_coefficient(2, 10) == F(925279, 972)

    def test_beyond_enumeration_reach(self):
        engine = make_engine(2, count=10)
        expected = F(1725611199907, 1259712)
        assert engine.correlator_coefficient(10, 10) == expected


class TestMemo:
    def test_write_once(self):
        engine = make_engine(1)
        key = fam.top_key(1, 1)
        value = engine.s_value(key)
        engine._store(key, value)  # same value is fine
        with pytest.raises(AssertionError):
            engine._store(key, value + 1)

    def test_recursion_order_guard(self):
        engine = make_engine(1)
        engine._stack.append((0, 0))
        try:
            with pytest.raises(AssertionError):
                engine.s_value(fam.top_key(1, 1))
        finally:
            engine._stack.clear()

    def test_export_import_round_trip(self, tmp_path):
        path = str(tmp_path / "memo.json")
        writer = make_engine(2)
        expected = writer.correlator_coefficient(4, 4)
        writer.export_memo(path)

        reader = make_engine(2)
        assert reader.import_memo(path) == writer.memo_size
        before = reader.memo_size
        assert reader.correlator_coefficient(4, 4) == expected
        # The imported table already held everything required.
        assert reader.memo_size == before

    def test_header_fields(self):
        engine = make_engine(3)
        header = engine.context_header()
        assert header["alpha"] == "2/3"
        assert header["p"] == "5/2"
        assert set(header) == {"alpha", "p", "moments_digest", "engine_version"}

    def test_import_rejects_other_params(self, tmp_path):
        path = str(tmp_path / "memo.json")
        writer = make_engine(1)
        writer.correlator_coefficient(2, 2)
        writer.export_memo(path)
        with pytest.raises(ContextMismatchError):
            make_engine(2).import_memo(path)

    def test_import_rejects_other_moments(self, tmp_path):
        path = str(tmp_path / "memo.json")
        writer = make_engine(1, count=5)
        writer.correlator_coefficient(2, 2)
        writer.export_memo(path)
        params, _ = context(1)
        other = CoefficientEngine(params, MomentSequence([F(1)] * 4 + [F(2)]))
        with pytest.raises(ContextMismatchError):
            other.import_memo(path)
