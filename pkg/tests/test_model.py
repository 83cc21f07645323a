import numpy as np
import pytest
import torch

from scsinet.config import Hyperparams
from scsinet.dataset import EigenSample, normalize_sample
from scsinet.model import (
    BranchConfig,
    CheckpointError,
    MissingBlockError,
    NoBranchError,
    build_model,
    load_checkpoint,
    pack_complex,
    partial_load,
    save_checkpoint,
    unpack_complex,
)

from conftest import random_complex


def _normalized(rng, n_t, n_sb):
    w = random_complex(rng, n_t, n_sb)
    return (w / np.max(np.abs(w))).astype(np.complex64)


def test_route_quoted_inference_path(tiny_model):
    assert tiny_model.route(BranchConfig(16, 20)) == \
        ["LPT-16", "EN", "DS-20", "US-20", "DE", "LT-16"]
    assert tiny_model.route(BranchConfig(32, 40)) == \
        ["LPT-32", "EN", "DS-40", "US-40", "DE", "LT-32"]


def test_route_full_scale_example():
    model = build_model(Hyperparams(), seed=0)
    assert model.route(BranchConfig(16, 120)) == \
        ["LPT-16", "EN", "DS-120", "US-120", "DE", "LT-16"]


def test_route_rejects_unknown_branches(tiny_model):
    with pytest.raises(NoBranchError):
        tiny_model.route(BranchConfig(16, 21))
    with pytest.raises(NoBranchError):
        tiny_model.route(BranchConfig(8, 20))


def test_block_names_cover_exactly_the_branch_set(tiny_model, tiny_hp):
    expected = {"EN", "DE"}
    expected |= {f"LPT-{p}" for p in tiny_hp.antenna_set}
    expected |= {f"LT-{p}" for p in tiny_hp.antenna_set}
    expected |= {f"DS-{k}" for k in tiny_hp.payload_set}
    expected |= {f"US-{k}" for k in tiny_hp.payload_set}
    assert set(tiny_model.block_names()) == expected


def test_encode_bit_count_and_determinism(tiny_model, tiny_hp):
    rng = np.random.default_rng(0)
    for nt in tiny_hp.antenna_set:
        for k in tiny_hp.payload_set:
            w = _normalized(rng, nt, tiny_hp.n_sb)
            bits = tiny_model.encode(w, BranchConfig(nt, k))
            assert bits.shape == (k,)
            assert set(np.unique(bits)).issubset({0, 1})
            again = tiny_model.encode(w, BranchConfig(nt, k))
            assert np.array_equal(bits, again)


def test_encode_is_layer_common(tiny_model, tiny_hp):
    rng = np.random.default_rng(1)
    w = _normalized(rng, 32, tiny_hp.n_sb)
    cfg = BranchConfig(32, 20)
    s1 = EigenSample(w=w, layer_index=1, drop_id=0, antenna_count=32)
    s3 = EigenSample(w=w.copy(), layer_index=2, drop_id=5, antenna_count=32)
    assert np.array_equal(tiny_model.encode(s1, cfg), tiny_model.encode(s3, cfg))


def test_encode_rejects_shape_mismatch(tiny_model, tiny_hp):
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        tiny_model.encode(_normalized(rng, 16, tiny_hp.n_sb), BranchConfig(32, 20))


def test_decode_shape_and_range(tiny_model, tiny_hp):
    rng = np.random.default_rng(3)
    for nt in tiny_hp.antenna_set:
        bits = rng.integers(0, 2, size=40).astype(np.uint8)
        out = tiny_model.decode(bits, BranchConfig(nt, 40))
        assert out.shape == (nt, tiny_hp.n_sb)
        assert np.abs(out.real).max() <= 1.0
        assert np.abs(out.imag).max() <= 1.0


def test_decode_rejects_wrong_length(tiny_model):
    with pytest.raises(ValueError):
        tiny_model.decode(np.zeros(30, dtype=np.uint8), BranchConfig(32, 40))


def test_decode_round_trip_shape(tiny_model, tiny_hp):
    rng = np.random.default_rng(4)
    w = _normalized(rng, 16, tiny_hp.n_sb)
    cfg = BranchConfig(16, 20)
    out = tiny_model.decode(tiny_model.encode(w, cfg), cfg)
    assert out.shape == (16, tiny_hp.n_sb)


def test_decode_sensitive_to_every_bit(tiny_model, tiny_hp):
    rng = np.random.default_rng(5)
    cfg = BranchConfig(32, 20)
    bits = tiny_model.encode(_normalized(rng, 32, tiny_hp.n_sb), cfg)
    base = tiny_model.decode(bits, cfg)
    for i in range(cfg.payload_bits):
        flipped = bits.copy()
        flipped[i] ^= 1
        assert not np.array_equal(tiny_model.decode(flipped, cfg), base), \
            f"bit {i} is dead"


def test_branch_isolation(tiny_model, tiny_hp):
    rng = np.random.default_rng(6)
    w16 = _normalized(rng, 16, tiny_hp.n_sb)
    w32 = _normalized(rng, 32, tiny_hp.n_sb)
    before = {
        (nt, 40): (tiny_model.encode(w, BranchConfig(nt, 40)),
                   tiny_model.decode(tiny_model.encode(w, BranchConfig(nt, 40)),
                                     BranchConfig(nt, 40)))
        for nt, w in ((16, w16), (32, w32))
    }
    with torch.no_grad():
        for name in ("DS-20", "US-20"):
            for p in tiny_model.blocks[name].parameters():
                p.add_(torch.randn_like(p))
    for (nt, k), (bits, recon) in before.items():
        w = w16 if nt == 16 else w32
        cfg = BranchConfig(nt, k)
        assert np.array_equal(tiny_model.encode(w, cfg), bits)
        assert np.array_equal(tiny_model.decode(bits, cfg), recon)


def test_core_blocks_are_shared_single_objects(tiny_model, tiny_hp):
    for nt in tiny_hp.antenna_set:
        for k in tiny_hp.payload_set:
            path = tiny_model.route(BranchConfig(nt, k))
            assert path[1] == "EN" and path[4] == "DE"
    # one storage each: perturbing EN changes every branch's codeword
    rng = np.random.default_rng(7)
    w16 = _normalized(rng, 16, tiny_hp.n_sb)
    w32 = _normalized(rng, 32, tiny_hp.n_sb)
    before = {nt: tiny_model.encode(w, BranchConfig(nt, 20))
              for nt, w in ((16, w16), (32, w32))}
    with torch.no_grad():
        for p in tiny_model.blocks["EN"].parameters():
            p.add_(torch.randn_like(p))
    assert not np.array_equal(tiny_model.encode(w16, BranchConfig(16, 20)), before[16])
    assert not np.array_equal(tiny_model.encode(w32, BranchConfig(32, 20)), before[32])


def test_pack_unpack_round_trip():
    rng = np.random.default_rng(8)
    w = random_complex(rng, 6, 4).astype(np.complex64)
    assert np.array_equal(unpack_complex(pack_complex(w)), w)


# --- counters ------------------------------------------------------------------

def _affine(m, n):
    return m * n + n


def test_param_count_matches_closed_form(tiny_model, tiny_hp):
    s, e, f = tiny_hp.n_sb, tiny_hp.n_emb, tiny_hp.ffn_width
    per_block = tiny_model.param_count_by_block()
    for p in tiny_hp.antenna_set:
        assert per_block[f"LPT-{p}"] == _affine(2 * p, e)
        assert per_block[f"LT-{p}"] == _affine(e, 2 * p)
    for k in tiny_hp.payload_set:
        assert per_block[f"DS-{k}"] == _affine(s * e, k // 2)
        assert per_block[f"US-{k}"] == _affine(k // 2, s * e)
    core = tiny_hp.t_en * (4 * _affine(e, e) + 2 * 2 * e + _affine(e, f) + _affine(f, e))
    assert per_block["EN"] == core
    totals = tiny_model.count_params()
    assert totals["encoder"] == sum(
        n for b, n in per_block.items() if b.startswith(("LPT", "DS")) or b == "EN")
    assert totals["encoder"] + totals["decoder"] == sum(per_block.values())


def test_flops_strictly_increasing_in_payload(tiny_model, tiny_hp):
    for nt in tiny_hp.antenna_set:
        encs = [tiny_model.count_flops(BranchConfig(nt, k))[0]
                for k in sorted(tiny_hp.payload_set)]
        decs = [tiny_model.count_flops(BranchConfig(nt, k))[1]
                for k in sorted(tiny_hp.payload_set)]
        assert all(a < b for a, b in zip(encs, encs[1:]))
        assert all(a < b for a, b in zip(decs, decs[1:]))


def test_flops_closed_form_small_case():
    hp = Hyperparams(n_head=2, n_sb=2, n_ri=1, n_emb=4, t_en=1, t_de=1,
                     ffn_width=8, payload_set=(20,), antenna_set=(16,))
    model = build_model(hp, seed=0)
    enc, dec = model.count_flops(BranchConfig(16, 20))
    core = 2 * (3 * 2 * 4 * 4 + 2 * 2 * 4 + 2 * 2 * 4 + 2 * 4 * 4 + 2 * 2 * 4 * 8)
    assert enc == 2 * 2 * 32 * 4 + core + 2 * 2 * 4 * 10
    assert dec == 2 * 10 * 2 * 4 + core + 2 * 2 * 4 * 32


# --- freezing ---------------------------------------------------------------------

def test_freeze_and_hash(tiny_model):
    h_before = tiny_model.block_parameter_hash("EN")
    tiny_model.freeze_blocks(["EN"])
    assert "EN" in tiny_model.frozen_blocks
    trainable = list(tiny_model.trainable_parameters())
    en_params = set(id(p) for p in tiny_model.blocks["EN"].parameters())
    assert all(id(p) not in en_params for p in trainable)
    assert tiny_model.block_parameter_hash("EN") == h_before
    tiny_model.unfreeze_all()
    assert tiny_model.frozen_blocks == frozenset()


def test_freeze_unknown_block_rejected(tiny_model):
    with pytest.raises(KeyError):
        tiny_model.freeze_blocks(["DS-999"])


# --- checkpoints --------------------------------------------------------------------

def test_checkpoint_round_trip(tiny_model, tiny_hp, tmp_path):
    path = str(tmp_path / "ckpt.npz")
    tiny_model.completed_stages = {1, 2}
    save_checkpoint(tiny_model, path)
    other = build_model(tiny_hp, seed=99)
    load_checkpoint(other, path)
    assert other.completed_stages == {1, 2}
    for name in tiny_model.block_names():
        assert tiny_model.block_parameter_hash(name) == other.block_parameter_hash(name)


def test_partial_load_touches_only_named_blocks(tiny_model, tiny_hp, tmp_path):
    path = str(tmp_path / "ckpt.npz")
    save_checkpoint(tiny_model, path)
    other = build_model(tiny_hp, seed=99)
    ds_hash = other.block_parameter_hash("DS-20")
    partial_load(other, path, ["EN", "DE"])
    assert other.block_parameter_hash("EN") == tiny_model.block_parameter_hash("EN")
    assert other.block_parameter_hash("DE") == tiny_model.block_parameter_hash("DE")
    assert other.block_parameter_hash("DS-20") == ds_hash


def test_partial_load_unknown_name_rejected(tiny_model, tmp_path):
    path = str(tmp_path / "ckpt.npz")
    save_checkpoint(tiny_model, path)
    with pytest.raises(KeyError):
        partial_load(tiny_model, path, ["EN", "BOGUS"])


def test_load_missing_branch_rejected(tiny_hp, tmp_path):
    small = Hyperparams(n_head=2, n_sb=4, n_ri=2, n_emb=16, t_en=1, t_de=1,
                        ffn_width=32, payload_set=(20,), antenna_set=(32, 16))
    path = str(tmp_path / "small.npz")
    save_checkpoint(build_model(small, seed=0), path)
    needs_40 = build_model(tiny_hp, seed=0)  # payload_set (20, 40)
    with pytest.raises(MissingBlockError) as err:
        load_checkpoint(needs_40, path)
    assert "DS-40" in str(err.value)


def test_load_shape_mismatch_rejected(tiny_hp, tmp_path):
    wider = Hyperparams(n_head=2, n_sb=4, n_ri=2, n_emb=32, t_en=1, t_de=1,
                        ffn_width=32, payload_set=(20, 40), antenna_set=(32, 16))
    path = str(tmp_path / "wide.npz")
    save_checkpoint(build_model(wider, seed=0), path)
    model = build_model(tiny_hp, seed=0)
    with pytest.raises(CheckpointError):
        load_checkpoint(model, path)
