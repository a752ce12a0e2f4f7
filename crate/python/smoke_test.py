"""Smoke test for the sgmatch_py extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
(or `maturin develop -m crates/python/Cargo.toml`), then run this script.
"""

import math
import sys

import sgmatch_py as sg

TINY_CONFIG = """
seed = 5
log_every = 0
overview_beam = 2

[matcher]
steps = 20
batch_size = 16
validation_pairs = 32
learning_rate = 0.001

[matcher.encoder]
num_layers = 2
hidden_dim = 16

[aligner]
steps = 20
batch_size = 8
attention_hidden = [16]

[aligner.encoder]
num_layers = 2
hidden_dim = 16

[eval]
queries_per_graph = 1
"""


def path(labels):
    return {
        "nodes": [{"id": i, "label": l} for i, l in enumerate(labels)],
        "edges": [[i, i + 1] for i in range(len(labels) - 1)],
    }


def check_exact():
    q = path(["red", "blue"])
    t = path(["red", "blue", "red"])
    mapping = sg.vf2(q, t)
    assert mapping is not None and mapping["0"] in (0, 2), mapping
    assert sg.vf2(path(["red", "red"]), t) is None
    assert sg.vf2(path(["red", "red"]), t, label_aware=False) is not None
    assert sg.graph_edit_distance(t, t) == 0.0


def check_assignment():
    scores = [[0.9, 0.8], [0.85, 0.1]]
    assert sg.greedy_assign(scores) == [0, 1]
    assert sg.hungarian_assign(scores) == [1, 0]
    try:
        sg.greedy_assign([[1.0], [2.0]])
    except sg.SgmatchError:
        pass
    else:
        raise AssertionError("more rows than columns must fail")


def check_database():
    db = sg.Database.synthetic(n_graphs=12, min_nodes=6, max_nodes=10, n_labels=3, seed=1)
    assert len(db) == 12
    again = sg.Database.synthetic(n_graphs=12, min_nodes=6, max_nodes=10, n_labels=3, seed=1)
    assert db.graph_ids() == again.graph_ids()
    first = db.graph(db.graph_ids()[0])
    assert all(6 <= len(db.graph(i)["nodes"]) <= 10 for i in db.graph_ids())
    assert first == again.graph(db.graph_ids()[0])
    try:
        db.graph("missing")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown graph id must raise KeyError")
    records = sg.Database.from_records("two", [path(["a", "b"]), path(["b"])])
    assert len(records) == 2 and records.labels() == ["a", "b"]
    return db


def check_engine(db):
    engine = sg.Engine.train(db, TINY_CONFIG)
    assert math.isfinite(engine.threshold)
    source = db.graph(db.graph_ids()[0])
    pattern = {
        "nodes": source["nodes"][:1],
        "edges": [],
    }
    exact = engine.query(pattern)
    relaxed = engine.query(pattern, max_steps=2)
    assert exact == relaxed[: len(exact)]
    for result in exact:
        assert result["decision"] is True
        assert result["perturbation_depth"] == 0
    report = engine.evaluate(TINY_CONFIG)
    assert {"precision", "recall", "f1"} <= set(report["decision"])
    assert "top1" in report["alignment"]["aligner"]
    try:
        engine.query({"nodes": [{"id": 0, "label": "0"}, {"id": 1, "label": "0"}], "edges": []})
    except sg.SgmatchError:
        pass
    else:
        raise AssertionError("disconnected pattern must be rejected")


def main():
    check_exact()
    check_assignment()
    db = check_database()
    check_engine(db)
    assert "num_layers = 8" in sg.default_config()
    print("python smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
