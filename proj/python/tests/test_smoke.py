import json
import math

import pytest

import kgcoref


SMALL_MODEL = {"embed_dim": 8, "lstm_hidden": 6, "ffn_hidden": 10, "length_bucket_dim": 3}


@pytest.fixture(scope="module")
def synthetic():
    data = kgcoref.generate_synthetic(n_docs=20, seed=5, n_entities=12, vocab_size=12)
    return data, data.knowledge_graph()


@pytest.fixture(scope="module")
def trained(synthetic):
    data, graph = synthetic
    model, log = kgcoref.train(
        data.corpus, graph, dev=data.corpus, model_config=SMALL_MODEL, train_config={"max_epochs": 3}
    )
    return model, log


def test_classify_pronoun():
    assert kgcoref.classify_pronoun("It") == "third_personal"
    assert kgcoref.classify_pronoun("their") == "possessive"
    assert kgcoref.classify_pronoun("those") == "demonstrative"
    assert kgcoref.classify_pronoun("dog") == "not_a_pronoun"


def test_extract_sp_thresholds_are_strict():
    edges = [("barks", "dog", "nsubj", 75), ("barks", "cat", "nsubj", 25), ("eats", "stone", "dobj", 9)]
    out = kgcoref.extract_sp(edges, prob_threshold=0.1, count_threshold=10)
    assert [(h, r, t) for h, r, t, _, _ in out] == [("cat", "nsubj", "barks"), ("dog", "nsubj", "barks")]
    assert math.isclose(out[1][3], 0.75)
    assert kgcoref.extract_sp(edges, prob_threshold=0.75, count_threshold=10) == []
    with pytest.raises(kgcoref.ValidationError):
        kgcoref.extract_sp([("p", "a", "iobj", 3)])


def test_knowledge_graph_retrieval():
    g = kgcoref.KnowledgeGraph()
    g.add("The Dog", "IsA", "animal")
    g.add("dog", "Plurality", "Singular", source="plurality")
    assert len(g) == 2
    assert [t[2] for t in g.retrieve("the dog")] == ["animal"]
    assert g.count_by_source() == {"other": 1, "plurality": 1}
    assert len(g.without_groups(["ling"])) == 1


def test_parse_corpus_errors():
    good = json.dumps(
        {
            "doc_id": "d1",
            "sentences": [["the", "dog", "barks"], ["it", "runs"]],
            "pronouns": [{"sent": 1, "tok": 0, "antecedents": [[0, 1]]}],
        }
    )
    corpus = kgcoref.parse_corpus([good])
    assert len(corpus) == 1 and corpus.num_pronouns() == 1
    assert corpus.to_json()[0]["doc_id"] == "d1"
    with pytest.raises(kgcoref.ParseError):
        kgcoref.parse_corpus(["{not json"])
    with pytest.raises(kgcoref.LookupError):
        kgcoref.load_corpus("/nonexistent/corpus.jsonl")


def test_synthetic_shape(synthetic):
    data, graph = synthetic
    assert len(data.corpus) == 20
    assert len(data.kinds) == 20
    assert len(graph) > 0


def test_train_evaluate_predict(trained, synthetic):
    data, graph = synthetic
    model, log = trained
    assert model.variant == "complete"
    assert [e["epoch"] for e in log] == [1, 2, 3]
    assert all(e["dev_f1"] is not None for e in log)
    report = kgcoref.evaluate(model, data.corpus, graph, threshold=1e-2)
    overall = report["overall"]
    assert overall["gold"] == data.corpus.num_pronouns()
    assert 0.0 <= overall["f1"] <= 1.0
    preds = kgcoref.predict(model, data.corpus, graph, threshold=1e-2)
    assert len(preds) == data.corpus.num_pronouns()
    for p in preds:
        assert all(s["F_hat"] > 1e-2 for s in p["selected"])


def test_sweep(trained, synthetic):
    data, graph = synthetic
    model, _ = trained
    sweep = kgcoref.threshold_sweep(model, data.corpus, graph, [0.0, 0.01, 0.1])
    recalls = [p["overall"]["recall"] for p in sweep]
    assert recalls == sorted(recalls, reverse=True)
    assert all(p["max_normalization_error"] <= 1e-6 for p in sweep)


def test_checkpoint_round_trip(trained, synthetic, tmp_path):
    data, graph = synthetic
    model, _ = trained
    path = str(tmp_path / "m.kwc")
    model.save(path, metadata={"threshold": 0.01})
    loaded, meta = kgcoref.load_checkpoint(path)
    assert meta == {"threshold": 0.01}
    assert loaded.to_bytes({"threshold": 0.01}) == model.to_bytes({"threshold": 0.01})
    assert kgcoref.evaluate(loaded, data.corpus, graph) == kgcoref.evaluate(model, data.corpus, graph)
    bad = tmp_path / "bad.kwc"
    bad.write_bytes(b"nope")
    with pytest.raises(kgcoref.ParseError):
        kgcoref.load_checkpoint(str(bad))
