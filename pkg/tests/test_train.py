"""Training loop: negatives, masking, loss, Adam, fit, checkpoints."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcnet.errors import (
    FactNotFound,
    NoCandidate,
    ProbabilityOutOfRange,
    ShapeMismatch,
)
from hcnet.hypergraph import HyperEdge, Relation, build_graph
from hcnet.nn import ModelConfig, init_params
from hcnet.synth import hypercycle, opposite_queries
from hcnet.train import (
    AdamState,
    TrainConfig,
    adam_step,
    corrupt,
    fit,
    load_checkpoint,
    mask_positives,
    save_checkpoint,
    self_adversarial_loss,
)


class TestCorrupt:
    def test_forced_choice(self):
        g = build_graph([Relation(0, "r", 2)], [HyperEdge(0, (0, 1))], 2)
        rng = np.random.default_rng(0)
        out = corrupt(g.edges[0], 2, g, 1, rng)
        assert out == [0]

    def test_true_entity_never_sampled(self):
        g = hypercycle(8, 3)
        rng = np.random.default_rng(1)
        fact = g.edges[0]
        for _ in range(20):
            for v in corrupt(fact, 2, g, 5, rng):
                assert v != fact.nodes[1]

    def test_known_facts_filtered(self):
        # r(0,3) is a known fact, so node 3 is filtered; 0 and 2 are legal.
        edges = [HyperEdge(0, (0, v)) for v in (1, 3)]
        g = build_graph([Relation(0, "r", 2)], edges, 4)
        rng = np.random.default_rng(2)
        samples = set(corrupt(edges[0], 2, g, 32, rng))
        assert 3 not in samples and 1 not in samples
        assert samples <= {0, 2}

    def test_no_candidate(self):
        g = build_graph([Relation(0, "r", 2)], [HyperEdge(0, (0, 0))], 1)
        with pytest.raises(NoCandidate):
            corrupt(g.edges[0], 2, g, 1, np.random.default_rng(0))

    def test_seeded_determinism(self):
        g = hypercycle(8, 3)
        a = corrupt(g.edges[0], 1, g, 5, np.random.default_rng(7))
        b = corrupt(g.edges[0], 1, g, 5, np.random.default_rng(7))
        assert a == b


class TestSelfAdversarialLoss:
    def test_symmetric_half_case(self):
        # p = 0.5 for the positive and a single negative: -log(1/2) twice.
        assert self_adversarial_loss(0.5, [0.5], 0.5) == pytest.approx(
            2 * np.log(2), abs=1e-9
        )
        assert self_adversarial_loss(0.5, [0.5], 0.5) == pytest.approx(1.386294, abs=1e-6)

    def test_single_negative_weight_is_one(self):
        # With one negative the softmax weight is 1 regardless of temperature.
        for alpha in (0.1, 0.5, 2.0):
            expected = -np.log(0.7) - np.log(1 - 0.4)
            assert self_adversarial_loss(0.7, [0.4], alpha) == pytest.approx(expected)

    def test_probability_out_of_range(self):
        with pytest.raises(ProbabilityOutOfRange):
            self_adversarial_loss(1.0, [0.5], 0.5)
        with pytest.raises(ProbabilityOutOfRange):
            self_adversarial_loss(0.5, [0.0], 0.5)

    @settings(max_examples=50, deadline=None)
    @given(
        probs=st.lists(st.floats(0.01, 0.99), min_size=1, max_size=8),
        alpha=st.floats(0.1, 3.0),
    )
    def test_weights_sum_to_one_and_permutation_invariant(self, probs, alpha):
        base = self_adversarial_loss(0.5, probs, alpha)
        assert np.isfinite(base)
        shuffled = list(reversed(probs))
        assert self_adversarial_loss(0.5, shuffled, alpha) == pytest.approx(base)
        # Equal negatives make the weighted term equal the plain mean term,
        # which is only possible when the weights sum to one.
        equal = [probs[0]] * 4
        expected = -np.log(0.5) - np.log(1 - probs[0])
        assert self_adversarial_loss(0.5, equal, alpha) == pytest.approx(expected)


class TestMasking:
    def test_mask_everything(self):
        g = hypercycle(8, 3)
        masked = mask_positives(g, list(g.edges))
        assert masked == set(range(8))

    def test_duplicates_mask_distinct_edges(self):
        edges = [HyperEdge(0, (0, 1)), HyperEdge(0, (0, 1))]
        g = build_graph([Relation(0, "r", 2)], edges, 2)
        assert mask_positives(g, [edges[0], edges[0]]) == {0, 1}

    def test_missing_fact(self):
        g = hypercycle(8, 3)
        with pytest.raises(FactNotFound):
            mask_positives(g, [HyperEdge(0, (0, 1, 2))])

    def test_over_masking(self):
        edges = [HyperEdge(0, (0, 1))]
        g = build_graph([Relation(0, "r", 2)], edges, 2)
        with pytest.raises(FactNotFound):
            mask_positives(g, [edges[0], edges[0]])


class TestAdam:
    def _params(self):
        g = hypercycle(8, 3)
        return init_params(g, ModelConfig(kind="hcnet", d=4, layers=1),
                           np.random.default_rng(0))

    def test_zero_gradient_keeps_params(self):
        params = self._params()
        before = {k: v.copy() for k, v in params.tensors.items()}
        grads = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        state = AdamState()
        adam_step(params, grads, state, lr=0.1)
        for k in before:
            np.testing.assert_allclose(params.tensors[k], before[k])
        assert state.step == 1

    def test_constant_gradient_step_size_approaches_lr(self):
        params = self._params()
        grads = {k: np.full_like(v, 0.3) for k, v in params.tensors.items()}
        state = AdamState()
        name = "W_l0"
        for _ in range(500):
            prev = params.tensors[name].copy()
            adam_step(params, grads, state, lr=1e-2)
        step = np.abs(params.tensors[name] - prev)
        np.testing.assert_allclose(step, 1e-2, rtol=1e-3)

    def test_shape_mismatch(self):
        params = self._params()
        grads = {"W_l0": np.zeros(3)}
        with pytest.raises(ShapeMismatch):
            adam_step(params, grads, AdamState(), 0.1)

    def test_determinism(self):
        def run():
            params = self._params()
            rng = np.random.default_rng(3)
            state = AdamState()
            for _ in range(5):
                grads = {k: rng.standard_normal(v.shape) for k, v in params.tensors.items()}
                adam_step(params, grads, state, 1e-3)
            return params.tensors["W_l0"].copy()

        assert (run() == run()).all()


def _toy_splits():
    g = hypercycle(8, 3)
    pos, _ = opposite_queries(8)
    extra = [HyperEdge(0, p) for p in pos]
    graph = build_graph(g.relations, g.edges + extra[:6], 8)
    return graph, {"train": graph.edges[:10], "valid": extra[6:]}


class TestFit:
    def test_zero_epochs_returns_init(self):
        graph, splits = _toy_splits()
        cfg = TrainConfig(d=4, layers=1, epochs=0, batch_size=4, negatives=2, seed=0)
        params, log = fit(graph, splits, cfg)
        assert log == []
        ref = init_params(graph, cfg.model_config("hcnet"), np.random.default_rng(0))
        for name in ref.tensors:
            np.testing.assert_allclose(params.tensors[name], ref.tensors[name])

    def test_short_run_logs_and_learns(self, tmp_path):
        graph, splits = _toy_splits()
        cfg = TrainConfig(d=8, layers=2, epochs=3, batch_size=4, negatives=2, seed=0)
        log_path = tmp_path / "run.log"
        params, log = fit(graph, splits, cfg, log_path=str(log_path))
        assert len(log) == 3
        assert all("loss" in e and "val_mrr" in e for e in log)
        assert log_path.read_text().count("\n") == 3
        assert all(np.isfinite(e["loss"]) for e in log)

    def test_seeded_runs_identical(self):
        graph, splits = _toy_splits()
        cfg = TrainConfig(d=4, layers=1, epochs=2, batch_size=4, negatives=2, seed=5)
        a, log_a = fit(graph, splits, cfg)
        b, log_b = fit(graph, splits, cfg)
        assert log_a == log_b
        for name in a.tensors:
            assert (a.tensors[name] == b.tensors[name]).all()

    def test_steps_per_epoch_cap(self):
        graph, splits = _toy_splits()
        cfg = TrainConfig(
            d=4, layers=1, epochs=1, batch_size=2, negatives=2, seed=0, steps_per_epoch=1
        )
        _, log = fit(graph, splits, cfg)
        assert len(log) == 1


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        g = hypercycle(8, 3)
        rng = np.random.default_rng(0)
        params = init_params(g, ModelConfig(kind="hcnet", d=8, layers=2), rng)
        cfg = TrainConfig(d=8, layers=2)
        path = tmp_path / "model.ckpt"
        save_checkpoint(str(path), params, cfg)
        loaded, header = load_checkpoint(str(path))
        assert loaded.config == params.config
        assert loaded.num_relations == params.num_relations
        assert set(loaded.tensors) == set(params.tensors)
        for name, tensor in params.tensors.items():
            np.testing.assert_allclose(
                loaded.tensors[name], tensor.astype("<f4").astype(np.float64)
            )
        assert header["train_config"]["d"] == 8
        np.testing.assert_allclose(loaded.fixed["pe"], params.fixed["pe"])

    def test_header_is_json_with_offsets(self, tmp_path):
        import json

        g = hypercycle(8, 3)
        params = init_params(g, ModelConfig(kind="hcnet", d=4, layers=1),
                             np.random.default_rng(0))
        path = tmp_path / "model.ckpt"
        save_checkpoint(str(path), params)
        raw = path.read_bytes()
        hlen = int.from_bytes(raw[:8], "little")
        header = json.loads(raw[8 : 8 + hlen])
        names = [t["name"] for t in header["tensors"]]
        assert names == sorted(names)
        total = sum(t["nbytes"] for t in header["tensors"])
        assert len(raw) == 8 + hlen + total
