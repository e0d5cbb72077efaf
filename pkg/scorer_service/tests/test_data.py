import pytest

from pairscorer.data import (
    build_training_set,
    build_training_set_from_file,
    load_labeled_entries,
    serialize_schema_tables,
)

from conftest import write_labeled_beams


def entry(entry_id, flags, utterance="list the names"):
    return {
        "id": entry_id,
        "utterance": utterance,
        "schema_id": "db",
        "gold_sql": "select name from t",
        "candidates": [
            {"sql": f"select c{i} from t", "log_prob": -0.1 * (i + 1), "is_gold": f}
            for i, f in enumerate(flags)
        ],
    }


class TestBuildTrainingSet:
    def test_one_gold_among_five(self):
        examples, balance = build_training_set([entry("e1", [True, False, False, False, False])])
        assert balance.positives == 1
        assert balance.negatives == 4
        assert [ex.label for ex in examples] == [1, 0, 0, 0, 0]

    def test_beam_miss_gives_all_negatives(self):
        examples, balance = build_training_set([entry("e1", [False, False, False])])
        assert balance.positives == 0
        assert all(ex.label == 0 for ex in examples)

    def test_provenance_ids_preserved(self):
        entries = [entry("e1", [True, False, False]), entry("e2", [False, True, False])]
        examples, balance = build_training_set(entries)
        assert len(examples) == 6
        assert [ex.entry_id for ex in examples] == ["e1"] * 3 + ["e2"] * 3
        assert balance.total == 6

    def test_unlabeled_candidate_rejected(self):
        bad = entry("e1", [True, None])
        with pytest.raises(ValueError, match="unlabeled"):
            build_training_set([bad])

    def test_schema_flattening(self):
        e = entry("e1", [True])
        e["schema_tables"] = [{"table": "singer", "columns": ["id", "name"]}]
        examples, _ = build_training_set([e])
        assert examples[0].schema == "singer(id, name)"

    def test_serialize_empty_schema(self):
        assert serialize_schema_tables(None) is None
        assert serialize_schema_tables([]) is None


class TestFileLoading:
    def test_round_trip_from_file(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        write_labeled_beams(path, n_entries=4, beam=3)
        examples, balance = build_training_set_from_file(path)
        assert balance.total == 12
        assert balance.positives == 4

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        path.write_text('{"id": "q0", "utterance": "u", "candidates": []}\n')
        with pytest.raises(ValueError, match="gold_sql"):
            load_labeled_entries(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "beams.jsonl"
        path.write_text('{"id": }\n')
        with pytest.raises(ValueError, match="line 1"):
            load_labeled_entries(path)
