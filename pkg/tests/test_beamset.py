import json
import math
import random

import pytest

from beamjudge import sqlcanon
from beamjudge.beamset import (
    BeamsetFormatError,
    generation_log_prob,
    label_beamset,
    label_candidates,
    load_beamset,
    save_beamset,
    split_for_tuning,
    top_candidate,
)

from conftest import make_beamset, make_entry


class TestGenerationLogProb:
    def test_all_certain_tokens(self):
        assert generation_log_prob([0.0, 0.0, 0.0]) == 0.0

    def test_single_token(self):
        assert generation_log_prob([-0.693147]) == -0.693147

    def test_product_of_two_halves(self):
        # ln(0.5) + ln(0.5) = ln(0.25)
        total = generation_log_prob([-0.693147, -0.693147])
        assert total == pytest.approx(-1.386294, abs=1e-9)
        assert math.exp(total) == pytest.approx(0.25, rel=1e-5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            generation_log_prob([])

    def test_positive_log_prob_rejected(self):
        with pytest.raises(ValueError, match="index 1"):
            generation_log_prob([-0.5, 0.1])

    def test_exp_sum_matches_direct_product(self):
        rng = random.Random(5)
        for _ in range(200):
            probs = [rng.uniform(-3.0, 0.0) for _ in range(rng.randint(1, 40))]
            total = generation_log_prob(probs)
            direct = 1.0
            for lp in probs:
                direct *= math.exp(lp)
            assert math.exp(total) == pytest.approx(direct, rel=1e-12)


class TestTopCandidate:
    def test_head_of_sorted_list(self):
        entry = make_entry(
            1, candidates=[("select a from t", -0.1), ("select b from t", -0.5),
                           ("select c from t", -0.9)]
        )
        assert top_candidate(entry).generation_log_prob == -0.1

    def test_single_candidate(self):
        entry = make_entry(1, candidates=[("select a from t", -0.3)])
        assert top_candidate(entry).sql_text == "select a from t"

    def test_tie_keeps_file_order(self):
        entry = make_entry(
            1, candidates=[("select first from t", -0.3), ("select second from t", -0.3)]
        )
        assert top_candidate(entry).sql_text == "select first from t"

    def test_empty_rejected(self):
        entry = make_entry(1)
        entry.candidates = []
        with pytest.raises(ValueError):
            top_candidate(entry)

    def test_matches_linear_scan_on_random_fixtures(self):
        rng = random.Random(11)
        for _ in range(50):
            n = rng.randint(1, 20)
            lps = sorted((round(-rng.random() * 5, 6) for i in range(n)), reverse=True)
            entry = make_entry(1, candidates=[(f"select c{i} from t", lp) for i, lp in enumerate(lps)])
            best = max(entry.candidates, key=lambda c: c.generation_log_prob)
            assert top_candidate(entry).generation_log_prob == best.generation_log_prob


class TestLabeling:
    def test_exact_and_mismatch(self):
        entry = make_entry(
            1, gold="SELECT a FROM t",
            candidates=[("SELECT a FROM t", -0.1), ("SELECT b FROM t", -0.2)],
        )
        labeled, stats = label_candidates(entry, sqlcanon.equivalent)
        assert [c.is_gold for c in labeled.candidates] == [True, False]
        assert stats.gold_in_beam == 1

    def test_conjunct_permutation_is_gold(self):
        entry = make_entry(
            1, gold="SELECT a FROM t WHERE x=1 AND y=2",
            candidates=[("SELECT a FROM t WHERE y=2 AND x=1", -0.1)],
        )
        labeled, _ = label_candidates(entry, sqlcanon.equivalent)
        assert labeled.candidates[0].is_gold is True

    def test_unparseable_candidate_not_gold(self):
        entry = make_entry(
            1, gold="SELECT a FROM t",
            candidates=[("SELEC a FRM t", -0.1), ("SELECT a FROM t", -0.2)],
        )
        labeled, stats = label_candidates(entry, sqlcanon.equivalent)
        assert [c.is_gold for c in labeled.candidates] == [False, True]
        assert stats.candidate_parse_failures == 1

    def test_unparseable_gold_flags_entry(self):
        entry = make_entry(
            1, gold="SELEC nothing", candidates=[("SELECT a FROM t", -0.1)]
        )
        labeled, stats = label_candidates(entry, sqlcanon.equivalent)
        assert labeled.label_error is not None
        assert labeled.candidates[0].is_gold is None
        assert stats.gold_parse_failures == 1

    def test_label_beamset_string_fallback(self):
        bad_gold = "SELECT broken FROM"
        bs = make_beamset([
            make_entry(1, gold=bad_gold, candidates=[
                ("select broken  from", -0.1), ("select a from t", -0.2),
            ]),
            make_entry(2, gold="select a from t", candidates=[("select a from t", -0.1)]),
        ])
        labeled, stats = label_beamset(bs, sqlcanon.equivalent)
        assert stats.fallback_labeled_entries == 1
        assert stats.gold_parse_failures == 1
        # whitespace-normalized string match still finds the hit
        assert labeled.entries[0].candidates[0].is_gold is True
        assert labeled.entries[0].label_error is not None
        assert labeled.entries[1].candidates[0].is_gold is True

    def test_label_beamset_strict_leaves_unlabeled(self):
        bs = make_beamset([
            make_entry(1, gold="SELECT broken FROM", candidates=[("select a from t", -0.1)]),
        ])
        labeled, stats = label_beamset(bs, sqlcanon.equivalent, string_fallback=False)
        assert not labeled.entries[0].is_labeled()
        assert stats.fallback_labeled_entries == 0


class TestLoadSave:
    def _write(self, path, records):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")

    def _record(self, entry_id="e1", **overrides):
        rec = {
            "id": entry_id,
            "utterance": "how many singers",
            "schema_id": "concert_db",
            "gold_sql": "select count(*) from singer",
            "candidates": [
                {"sql": "select count(*) from singer", "log_prob": -0.1},
                {"sql": "select name from singer", "log_prob": -0.4},
            ],
        }
        rec.update(overrides)
        return rec

    def test_well_formed_two_entries(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        self._write(path, [self._record("e1"), self._record("e2")])
        bs = load_beamset(path)
        assert len(bs.entries) == 2
        assert bs.beam_size == 2

    def test_unsorted_candidates_resorted_with_warning(self, tmp_path, caplog):
        path = tmp_path / "beams.jsonl"
        rec = self._record(candidates=[
            {"sql": "select name from singer", "log_prob": -0.4},
            {"sql": "select count(*) from singer", "log_prob": -0.1},
        ])
        self._write(path, [rec])
        with caplog.at_level("WARNING"):
            bs = load_beamset(path)
        assert [c.generation_log_prob for c in bs.entries[0].candidates] == [-0.1, -0.4]
        assert any("re-sorted" in r.message for r in caplog.records)

    def test_missing_gold_sql_names_line(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        rec = self._record()
        del rec["gold_sql"]
        self._write(path, [self._record(), rec])
        with pytest.raises(BeamsetFormatError, match="missing field gold_sql at line 2"):
            load_beamset(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        path.write_text('{"id": "e1"\n', encoding="utf-8")
        with pytest.raises(BeamsetFormatError, match="line 1"):
            load_beamset(path)

    def test_score_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        rec = self._record(candidates=[{"sql": "select a from t", "log_prob": -0.1, "score": 1.5}])
        self._write(path, [rec])
        with pytest.raises(BeamsetFormatError, match="score"):
            load_beamset(path)

    def test_token_log_prob_sum_mismatch_rejected(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        rec = self._record(candidates=[
            {"sql": "select a from t", "token_log_probs": [-0.1, -0.2], "log_prob": -0.5},
        ])
        self._write(path, [rec])
        with pytest.raises(BeamsetFormatError, match="token_log_probs"):
            load_beamset(path)

    def test_positive_log_prob_rejected(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        rec = self._record(candidates=[{"sql": "select a from t", "log_prob": 0.2}])
        self._write(path, [rec])
        with pytest.raises(BeamsetFormatError, match="log_prob"):
            load_beamset(path)

    def test_round_trip_bit_identical(self, tmp_path):
        entries = [
            make_entry(
                "e1",
                candidates=[
                    ("select a from t", -0.25, 0.75, True),
                    ("select b from t", -1.5, 0.125, False),
                ],
            ),
            make_entry("e2", candidates=[("select c from t", -0.333333333)]),
        ]
        entries[0].candidates[0].token_log_probs = [-0.05, -0.2]
        bs = make_beamset(entries)
        first = tmp_path / "first.jsonl"
        second = tmp_path / "second.jsonl"
        save_beamset(bs, first)
        save_beamset(load_beamset(first), second)
        assert first.read_bytes() == second.read_bytes()


class TestSplit:
    def _set(self, n):
        return make_beamset([make_entry(i) for i in range(n)])

    def test_even_split_sizes_and_disjoint(self):
        tune, evalset = split_for_tuning(self._set(10), 0.5, seed=7)
        assert len(tune.entries) == 5 and len(evalset.entries) == 5
        tune_ids = {e.id for e in tune.entries}
        eval_ids = {e.id for e in evalset.entries}
        assert not (tune_ids & eval_ids)
        assert len(tune_ids | eval_ids) == 10

    def test_deterministic(self):
        a1, b1 = split_for_tuning(self._set(20), 0.5, seed=7)
        a2, b2 = split_for_tuning(self._set(20), 0.5, seed=7)
        assert [e.id for e in a1.entries] == [e.id for e in a2.entries]
        assert [e.id for e in b1.entries] == [e.id for e in b2.entries]

    def test_ceiling_rule(self):
        tune, evalset = split_for_tuning(self._set(5), 0.5, seed=1)
        assert (len(tune.entries), len(evalset.entries)) == (3, 2)

    def test_float_noise_does_not_inflate_ceiling(self):
        # 0.3 * 10 evaluates slightly above 3.0 in binary floating point.
        tune, _ = split_for_tuning(self._set(10), 0.3, seed=1)
        assert len(tune.entries) == 3

    def test_ratio_bounds(self):
        for ratio in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                split_for_tuning(self._set(4), ratio, seed=1)

    def test_sizes_sum_and_ids_partition(self):
        rng = random.Random(3)
        for _ in range(20):
            n = rng.randint(1, 50)
            ratio = rng.uniform(0.05, 0.95)
            seed = rng.randint(0, 10_000)
            if not 0 < ratio < 1:
                continue
            bs = self._set(n)
            tune, evalset = split_for_tuning(bs, ratio, seed)
            assert len(tune.entries) + len(evalset.entries) == n
            ids = [e.id for e in tune.entries] + [e.id for e in evalset.entries]
            assert sorted(ids) == sorted(e.id for e in bs.entries)
