import json

import pytest

import pptlab


DOCS = [
    ["alpha beta gamma delta epsilon", "beta gamma delta epsilon zeta", "gamma delta epsilon zeta eta",
     "delta epsilon zeta eta theta"],
    ["one two three four five", "two three four five six", "three four five six seven",
     "four five six seven eight"],
    ["red green blue cyan magenta", "green blue cyan magenta yellow", "blue cyan magenta yellow black",
     "cyan magenta yellow black white"],
]


def test_count_tunable():
    assert pptlab.count_tunable("pt", 100, 4096) == 409600
    assert pptlab.count_tunable("ppt", 100, 64) == 6400


def test_option_config_row():
    row = pptlab.option_config(6)
    assert row["num_options"] == 6
    assert row["n_positive"] == 1


def test_render_mcc():
    slots = {"sq": "what is it", "s1": "a cat", "s2": "a dog"}
    text = pptlab.render("MCC", slots, n_options=2)
    assert "what is it" in text and "<X>" in text
    assert pptlab.verbalizer("MCC", n_options=2) == ["a", "b"]


def test_vocabulary_round_trip():
    vocab = pptlab.Vocabulary.build(["the cat sat", "the dog sat"], 64)
    ids = vocab.encode("the cat sat")
    assert vocab.decode(ids) == "the cat sat"
    assert len(vocab) >= 8


def test_builders_emit_records():
    nsp = pptlab.build_nsp3(DOCS, 20, seed=3)
    assert len(nsp) == 20
    assert {r["label"] for r in nsp} <= {0, 1, 2}
    nss = pptlab.build_nss(DOCS, 10, seed=3, num_options=2)
    assert all(1 <= r["label"] <= 2 for r in nss)
    assert nss == pptlab.build_nss(DOCS, 10, seed=3, num_options=2)


def test_label_counts_balanced():
    counts = pptlab.label_counts(3, 32, 7)
    assert sum(counts) == 32 and max(counts) - min(counts) <= 1


def test_sample_fewshot(tmp_path):
    path = tmp_path / "task.jsonl"
    with open(path, "w") as f:
        for i in range(100):
            rec = {"pool": "train" if i < 80 else "test", "format": "SSC",
                   "slots": {"s": f"sentence {i}"}, "label": i % 2}
            f.write(json.dumps(rec) + "\n")
    split = pptlab.sample_fewshot(path, seed=10)
    assert len(split["train"]) == 32 and len(split["dev"]) == 32
    assert not set(split["train_index"]) & set(split["dev_index"])
    assert split["test_size"] == 20


def test_report_and_errors():
    assert pptlab.format_cell(0.935, 0.003) == "93.5₍₀.₃₎"
    result = {"method": "PT", "task": "toy", "samples": 32, "metric": "accuracy", "seeds": [10],
              "per_seed": [0.5], "mean": 0.5, "std": 0.0, "tunable_params": 6400}
    csv, md, warnings = pptlab.render_report([result], "main")
    assert csv.startswith("method,task")
    assert "50.0" in md and warnings == []
    with pytest.raises(pptlab.PptlabError):
        pptlab.option_config(1)
