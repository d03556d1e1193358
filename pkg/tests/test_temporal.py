import numpy as np
import pytest

from specgate import autodiff as ad
from specgate.config import HeadConfig
from specgate.errors import ShapeError
from specgate.rng import Stream
from specgate.temporal import TemporalHead

RNG = np.random.default_rng(777)
DIM = 8


def make_head(kind="transformer", frames=4, seed=0, layers=1, heads=2):
    cfg = HeadConfig(kind=kind, layers=layers, heads=heads, ffn_ratio=2,
                     frames=frames)
    return TemporalHead(cfg, DIM, Stream(seed))


def zero_head_weights(head: TemporalHead) -> None:
    if head.pos is not None:
        head.pos.data[:] = 0.0
    for block in head.blocks:
        for mod in (block.qkv, block.proj, block.fc1, block.fc2):
            mod.w.data[:] = 0.0
            mod.b.data[:] = 0.0


def test_mean_pool_single_frame_is_identity():
    head = make_head(kind="mean_pool", frames=1)
    feat = RNG.standard_normal((1, DIM))
    out = head.aggregate(ad.Tensor(feat))
    assert np.array_equal(out.data, feat[0])


def test_mean_pool_is_frame_permutation_invariant():
    head = make_head(kind="mean_pool", frames=5)
    feat = RNG.standard_normal((3, 5, DIM))
    base = head.aggregate(ad.Tensor(feat)).data
    perm = [3, 1, 4, 0, 2]
    swapped = head.aggregate(ad.Tensor(feat[:, perm])).data
    assert np.abs(base - swapped).max() <= 1e-15
    assert np.abs(base - feat.mean(axis=1)).max() <= 1e-12


def test_zeroed_transformer_head_reduces_to_mean():
    head = make_head(kind="transformer", frames=4)
    zero_head_weights(head)
    feat = RNG.standard_normal((2, 4, DIM))
    out = head.aggregate(ad.Tensor(feat)).data
    assert np.abs(out - feat.mean(axis=1)).max() <= 1e-12


def test_untrained_classifier_answers_half():
    for kind in ("transformer", "mean_pool"):
        head = make_head(kind=kind, frames=3, seed=11)
        feat = RNG.standard_normal((4, 3, DIM))
        probs, logits = head.forward(ad.Tensor(feat))
        assert np.array_equal(logits.data, np.zeros(4))
        assert np.array_equal(probs.data, np.full(4, 0.5))


def test_classifier_logit_is_a_dot_product():
    head = make_head(kind="mean_pool", frames=2)
    head.classifier.w.data[:] = RNG.standard_normal((DIM, 1))
    head.classifier.b.data[:] = 0.3
    feat = RNG.standard_normal((3, 2, DIM))
    probs, logits = head.forward(ad.Tensor(feat))
    want = feat.mean(axis=1) @ head.classifier.w.data[:, 0] + 0.3
    assert np.abs(logits.data - want).max() <= 1e-12
    assert np.abs(probs.data - 1 / (1 + np.exp(-want))).max() <= 1e-12


def test_identical_frames_collapse_to_single_frame_result():
    # with zeroed positional embeddings, T identical frames must give the
    # same answer as a single frame, for both head kinds
    one = RNG.standard_normal((1, DIM))
    stacked = np.repeat(one[None, :, :], 4, axis=1)  # [1, 4, DIM]
    for kind in ("transformer", "mean_pool"):
        head_t = make_head(kind=kind, frames=4, seed=3)
        head_1 = make_head(kind=kind, frames=1, seed=3)
        if kind == "transformer":
            head_t.pos.data[:] = 0.0
            head_1.pos.data[:] = 0.0
            # same seed => identical block weights (pos shapes differ, zeroed)
            for bt, b1 in zip(head_t.blocks, head_1.blocks):
                for (name, pt), p1 in zip(bt.parameters().items(),
                                          b1.parameters().values()):
                    assert np.array_equal(pt.data, p1.data), name
        head_t.classifier.w.data[:] = 0.7
        head_1.classifier.w.data[:] = 0.7
        out_t = head_t.forward(ad.Tensor(stacked))[1].data
        out_1 = head_1.forward(ad.Tensor(one[None, :, :]))[1].data
        assert np.abs(out_t - out_1).max() <= 1e-12, kind


def test_unbatched_and_batched_paths_agree():
    head = make_head(kind="transformer", frames=3, seed=5)
    head.classifier.w.data[:] = RNG.standard_normal((DIM, 1))
    feat = RNG.standard_normal((3, DIM))
    p_one, l_one = head.forward(ad.Tensor(feat))
    p_bat, l_bat = head.forward(ad.Tensor(feat[None, :, :]))
    assert l_one.shape == ()
    assert l_bat.shape == (1,)
    assert np.abs(l_one.data - l_bat.data[0]) <= 1e-15
    assert np.abs(p_one.data - p_bat.data[0]) <= 1e-15


def test_frame_count_is_enforced():
    head = make_head(frames=4)
    with pytest.raises(ShapeError):
        head.aggregate(ad.Tensor(RNG.standard_normal((2, 3, DIM))))
    with pytest.raises(ShapeError):
        head.aggregate(ad.Tensor(RNG.standard_normal((2, 4, DIM + 1))))


def test_gradients_flow_through_head():
    head = make_head(kind="transformer", frames=3, seed=9)
    head.classifier.w.data[:] = RNG.standard_normal((DIM, 1))
    feat = ad.Tensor(RNG.standard_normal((2, 3, DIM)), requires_grad=True)
    probs, logits = head.forward(feat)
    loss = ad.mean(logits)
    ad.backward(loss)
    assert feat.grad is not None
    assert np.abs(feat.grad).max() > 0
    for name, p in head.parameters().items():
        if name.startswith("classifier"):
            assert p.grad is not None and np.abs(p.grad).max() > 0, name
