"""Drives the python module end to end: generate data, train, evaluate,
score a session, round-trip a checkpoint. Plain asserts, no test framework,
so the file runs standalone or under ctest."""
import math
import os
import sys
import tempfile

import sessrec


def make_split():
    cfg = sessrec.SynthConfig()
    cfg.interest_pools = sessrec.make_disjoint_pools(2, 8)
    cfg.sessions = 60
    cfg.items_lo = 2
    cfg.items_hi = 3
    cfg.seed = 5
    cfg.test_fraction = 0.25
    result = sessrec.generate(cfg)
    assert result.split.item_count == 16
    assert len(result.split.train) == 45
    assert len(result.split.test) == 15
    assert len(result.item_pool_of) == 16
    assert set(result.session_target_pool) <= {0, 1}
    return result.split


def small_model(item_count, seed=9):
    mc = sessrec.ModelConfig()
    mc.embedding_dim = 8
    mc.layer_count = 1
    return sessrec.Model(mc, item_count, seed=seed)


def check_dataio(tmp):
    text = (
        "session_id,item_id,timestamp\n"
        "s1,a,100\ns1,b,110\ns1,a,120\n"
        "s2,b,200\ns2,a,210\ns2,c,220\n"
        "s3,a,300\ns3,c,310\ns3,b,320\n"
        "s4,c,400\ns4,b,410\ns4,a,420\n"
    )
    sessions = sessrec.parse_sessions(text)
    assert [s.session_id for s in sessions] == ["s1", "s2", "s3", "s4"]

    opts = sessrec.PreprocessOptions()
    opts.min_item_freq = 2
    opts.test_fraction = 0.25
    split = sessrec.preprocess(sessions, opts)
    assert split.item_count == 3
    assert len(split.train) == 6 and len(split.test) == 2
    assert split.vocab[split.item_names[0]] == 0

    path = os.path.join(tmp, "toy.ds")
    sessrec.save_dataset(split, path)
    back = sessrec.load_dataset(path)
    assert back.item_count == split.item_count
    assert len(back.train) == len(split.train)
    assert back.train[0].items == split.train[0].items

    assert sessrec.bucket_interval(0, 100, 8, 300) == 12
    assert sessrec.bucket_interval(0, 10**9, 8, 300) == 300


def check_graph():
    s = sessrec.SessionRecord()
    s.session_id = "g"
    s.items = [3, 1, 3, 2]
    s.timestamps = [0, 10, 40, 100]
    g = sessrec.build_graph(s, 2, 8, True, 300)
    assert g.node_count() == 3  # repeated item collapses to one node
    assert g.interest_count == 2
    assert len(g.edges_vu) == g.node_count() * 2
    dump = sessrec.dump_graph(g)
    assert dump.startswith("graph N=3 H=2\n")


def check_training(split, tmp):
    model = small_model(split.item_count)
    tc = sessrec.TrainConfig()
    tc.epochs = 2
    tc.batch_size = 20
    log_path = os.path.join(tmp, "train.log")
    res = sessrec.train_epochs(
        model, split.train, tc, validation=split.test, log_path=log_path
    )
    assert not res.diverged
    assert [e.epoch for e in res.epochs] == [1, 2]
    assert all(math.isfinite(e.mean_loss) for e in res.epochs)
    assert res.epochs[-1].has_metrics

    # evaluation is deterministic, so re-scoring reproduces the logged metrics
    m = sessrec.evaluate_model(model, split.test)
    last = res.epochs[-1].metrics
    assert (m.examples, m.hit10, m.ndcg10, m.hit20, m.ndcg20) == (
        last.examples,
        last.hit10,
        last.ndcg10,
        last.hit20,
        last.ndcg20,
    )

    log = open(log_path).read()
    assert log.startswith("epoch 1 loss ")
    assert " hit10 " in log

    pop = sessrec.evaluate_popularity(split.train, split.test, split.item_count)
    assert pop.examples == m.examples

    report = sessrec.format_metrics_report(m)
    assert report.startswith("sessrec-metrics v1\n")
    return model


def check_scoring(model):
    scores = model.score_session([0, 8, 1], [0, 30, 60])
    assert len(scores) == model.item_count
    assert all(math.isfinite(v) for v in scores)

    alpha = model.assignment_weights([0, 8, 1], [0, 30, 60])
    assert len(alpha) == 2
    for row in alpha:
        assert len(row) == 3
        assert abs(sum(row) - 1.0) < 1e-9

    ranks = sessrec.model_ranks(model, [])
    assert ranks == []

    # fresh models with one seed are bitwise identical
    a = small_model(model.item_count, seed=3).score_session([0, 1], [0, 5])
    b = small_model(model.item_count, seed=3).score_session([0, 1], [0, 5])
    assert a == b


def check_checkpoint(model, tmp):
    path = os.path.join(tmp, "model.ckpt")
    model.save(path)
    back = sessrec.load_checkpoint(path)
    assert back.item_count == model.item_count
    assert back.config.embedding_dim == model.config.embedding_dim
    items, times = [0, 8, 1], [0, 30, 60]
    assert back.score_session(items, times) == model.score_session(items, times)


def check_errors(model, tmp):
    try:
        sessrec.load_dataset(os.path.join(tmp, "missing.ds"))
        raise AssertionError("expected IoError")
    except sessrec.IoError:
        pass

    try:
        model.score_session([999], [0])
        raise AssertionError("expected VocabularyError")
    except sessrec.VocabularyError:
        pass

    try:
        model.score_session([0, 1], [0])
        raise AssertionError("expected ConfigError")
    except sessrec.ConfigError:
        pass

    bad = sessrec.ModelConfig()
    bad.interest_count = 0
    try:
        sessrec.Model(bad, 4)
        raise AssertionError("expected ConfigError")
    except sessrec.ConfigError:
        pass
    assert issubclass(sessrec.ConfigError, sessrec.Error)


def main():
    with tempfile.TemporaryDirectory(prefix="sessrec_py_") as tmp:
        check_dataio(tmp)
        check_graph()
        split = make_split()
        model = check_training(split, tmp)
        check_scoring(model)
        check_checkpoint(model, tmp)
        check_errors(model, tmp)
    print("python smoke: ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
