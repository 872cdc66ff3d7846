"""Checkpoint files: roundtrip fidelity, header checks, byte determinism."""
import json

import numpy as np
import pytest

from tkgalign.checkpoint import (
    FORMAT_VERSION,
    CheckpointMeta,
    load_checkpoint,
    meta_from_result,
    save_checkpoint,
)
from tkgalign.errors import ConfigError
from tkgalign.model import ModelConfig, init_params, num_relation_rows
from tkgalign.train import TrainConfig, train


def small_store(seed=0, dim=4, ents=7, rels=3, times=5, layers=2):
    cfg = ModelConfig(dim=dim, num_layers=layers)
    rows = num_relation_rows(rels, cfg.self_loops)
    store = init_params(np.random.default_rng(seed), ents, rows, times, cfg)
    meta = CheckpointMeta(
        format_version=FORMAT_VERSION,
        dim=dim, num_layers=layers, num_entities=ents,
        num_relation_rows=rows, num_times=times,
        precision="f32", self_loops=True, mode="time-aware", seed=seed,
    )
    return store, meta


class TestRoundTrip:
    def test_arrays_and_meta_survive(self, tmp_path):
        store, meta = small_store()
        path = tmp_path / "model.npz"
        save_checkpoint(path, store, meta)
        loaded, got_meta = load_checkpoint(path)
        assert got_meta == meta
        assert loaded.names() == store.names()
        for name, tensor in store.items():
            back = dict(loaded.items())[name]
            assert back.data.dtype == tensor.data.dtype
            assert np.array_equal(back.data, tensor.data)

    def test_meta_json_round_trip(self):
        _, meta = small_store()
        assert CheckpointMeta.from_json(meta.to_json()) == meta

    def test_from_train_result(self, tmp_path, fixture_6ent):
        g1, g2, seeds = fixture_6ent
        cfg = TrainConfig(dim=4, num_layers=1, epochs=3, dropout=0.0, seed=1)
        result = train(g1, g2, seeds, cfg)
        meta = meta_from_result(result)
        assert meta.num_entities == result.merged.kg.num_entities
        assert meta.num_relation_rows == num_relation_rows(
            result.merged.kg.num_relations, cfg.self_loops
        )
        assert meta.num_times == g1.time_index.num_ids
        assert meta.seed == 1 and meta.mode == "time-aware"
        path = tmp_path / "run.npz"
        save_checkpoint(path, result.store, meta)
        loaded, _ = load_checkpoint(path)
        for name, tensor in result.store.items():
            assert np.array_equal(dict(loaded.items())[name].data, tensor.data)


class TestHeaderChecks:
    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bare.npz"
        np.savez(path, entity=np.zeros((2, 2)))
        with pytest.raises(ConfigError, match="missing header"):
            load_checkpoint(path)

    def test_version_mismatch_rejected(self, tmp_path):
        store, meta = small_store()
        header = json.loads(meta.to_json())
        header["format_version"] = FORMAT_VERSION + 1
        path = tmp_path / "future.npz"
        arrays = {name: t.data for name, t in store.items()}
        np.savez(path, __meta__=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **arrays)
        with pytest.raises(ConfigError, match="format"):
            load_checkpoint(path)

    def test_shape_mismatch_rejected(self, tmp_path):
        store, meta = small_store()
        path = tmp_path / "model.npz"
        save_checkpoint(path, store, meta)
        # corrupt the header so the rebuilt table disagrees with the arrays
        bad = CheckpointMeta(**{**json.loads(meta.to_json()), "num_entities": meta.num_entities + 3})
        arrays = {name: t.data for name, t in store.items()}
        np.savez(path, __meta__=np.frombuffer(bad.to_json().encode(), dtype=np.uint8), **arrays)
        with pytest.raises((ConfigError, ValueError)):
            load_checkpoint(path)


class TestDeterminism:
    def test_same_store_same_bytes(self, tmp_path):
        paths = []
        for tag in ("a", "b"):
            store, meta = small_store(seed=5)
            path = tmp_path / f"{tag}.npz"
            save_checkpoint(path, store, meta)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_loading_does_not_perturb(self, tmp_path):
        store, meta = small_store(seed=5)
        path = tmp_path / "model.npz"
        save_checkpoint(path, store, meta)
        loaded, got = load_checkpoint(path)
        resaved = tmp_path / "resaved.npz"
        save_checkpoint(resaved, loaded, got)
        assert path.read_bytes() == resaved.read_bytes()
