"""Network invariants: shapes, masking, normalization, equivariances."""

import random

import numpy as np
import pytest
import torch

from musagent.config import ModelConfig
from musagent.hypergraph import spectral_init
from musagent.model import GraphTensors, PolicyValueNet, build_net

CFG = ModelConfig(feature_dim=16, num_allset_layers=2, num_decoder_layers=2, num_heads=4)


@pytest.fixture(scope="module")
def net() -> PolicyValueNet:
    return build_net(CFG, seed=7)


def _random_graph(rng, m):
    mus = [sorted(rng.sample(range(m), rng.randint(1, m))) for _ in range(rng.randint(0, 4))]
    mcs = [sorted(rng.sample(range(m), rng.randint(1, m))) for _ in range(rng.randint(0, 4))]
    return mus, mcs


def test_allset_layer_output_shape(net):
    rng = random.Random(3)
    for m in (1, 2, 5, 9):
        mus, mcs = _random_graph(rng, m)
        h = torch.randn(m, CFG.feature_dim)
        tensors = GraphTensors.build(m, mus, mcs)
        for layer in net.allset:
            out = layer(h, tensors)
            assert out.shape == (m, CFG.feature_dim)
            assert torch.isfinite(out).all()


def test_allset_empty_class_contributes_zeros(net):
    m = 4
    h = torch.randn(m, CFG.feature_dim)
    layer = net.allset[0]
    tensors = GraphTensors.build(m, [[0, 1]], [])
    mcs_branch_out = layer.mcs_branch(
        h, tensors.mcs_edge_index, tensors.mcs_edge_mask, tensors.mcs_vert_index, tensors.mcs_vert_mask
    )
    assert not mcs_branch_out.any()  # empty-aggregation value is zeros


def test_allset_layer_permutation_equivariance(net):
    rng = random.Random(5)
    layer = net.allset[0]
    for _ in range(10):
        m = rng.randint(2, 8)
        mus, mcs = _random_graph(rng, m)
        h = torch.randn(m, CFG.feature_dim)
        out = layer(h, GraphTensors.build(m, mus, mcs))
        perm = list(range(m))
        rng.shuffle(perm)
        pmus = [sorted(perm[v] for v in e) for e in mus]
        pmcs = [sorted(perm[v] for v in e) for e in mcs]
        h_p = torch.empty_like(h)
        for v in range(m):
            h_p[perm[v]] = h[v]
        out_p = layer(h_p, GraphTensors.build(m, pmus, pmcs))
        for v in range(m):
            assert torch.allclose(out_p[perm[v]], out[v], atol=1e-5), "row mismatch under relabel"


def test_distribution_shape_and_normalization(net):
    rng = random.Random(9)
    for _ in range(10):
        m = rng.randint(1, 8)
        mus, mcs = _random_graph(rng, m)
        k = rng.randint(0, m)
        candidates = sorted(rng.sample(range(m), k))
        res = net.forward(m, mus, mcs, "shrink", candidates)
        assert res.logits.shape == (len(candidates) + 1,)
        assert float(res.logits[-1]) == 0.0  # finish logit exactly zero
        assert abs(float(res.probs.sum()) - 1.0) <= 1e-6
        assert torch.isfinite(res.value)


def test_empty_candidates_distribution_is_finish(net):
    res = net.forward(4, [[0, 1]], [], "grow", [])
    assert res.probs.tolist() == pytest.approx([1.0])  # {finish: 1}
    assert torch.isfinite(res.value)


def test_zeroed_policy_head_gives_uniform(net):
    import copy

    zeroed = copy.deepcopy(net)
    last = zeroed.policy_head[-1]
    torch.nn.init.zeros_(last.weight)
    torch.nn.init.zeros_(last.bias)
    res = zeroed.forward(5, [[0, 2, 4]], [[1]], "shrink", [0, 2, 4])
    assert torch.allclose(res.probs, torch.full((4,), 0.25), atol=1e-6)


def test_candidate_order_invariance(net):
    m = 6
    mus, mcs = [[0, 1, 2], [3, 4]], [[2, 5]]
    candidates = [0, 2, 3, 5]
    res = net.forward(m, mus, mcs, "shrink", candidates)
    shuffled = [3, 0, 5, 2]
    res_s = net.forward(m, mus, mcs, "shrink", shuffled)
    probs = {c: float(res.probs[i]) for i, c in enumerate(candidates)}
    probs_s = {c: float(res_s.probs[i]) for i, c in enumerate(shuffled)}
    for c in candidates:
        assert probs[c] == pytest.approx(probs_s[c], abs=1e-5)
    assert float(res.probs[-1]) == pytest.approx(float(res_s.probs[-1]), abs=1e-5)


def _spectrum_sign_decidable(m, mus, mcs, dim):
    """True when the selected spectrum is simple and every selected
    eigenvector has a nonvanishing component sum, i.e. when an equivariant
    sign canonicalization exists at all."""
    from musagent.hypergraph import hypergraph_laplacian

    lap, _ = hypergraph_laplacian(m, [list(e) for e in mus] + [list(e) for e in mcs])
    if lap.shape[0] == 0:
        return True
    eigvals, eigvecs = np.linalg.eigh(lap)
    k = min(dim, lap.shape[0])
    gaps = np.diff(eigvals)
    if (gaps[: max(0, k - 1)] < 1e-6).any():
        return False
    if k < eigvals.size and eigvals[k] - eigvals[k - 1] < 1e-6:
        return False
    return bool((np.abs(eigvecs[:, :k].sum(axis=0)) > 1e-6).all())


def test_end_to_end_permutation_equivariance(net):
    """Relabeling constraints permutes policy probabilities and leaves the
    value unchanged (1e-5). Inputs are filtered to hypergraphs where an
    equivariant spectral embedding exists: degenerate eigenspaces and
    eigenvectors antisymmetric under an automorphism admit no
    relabeling-consistent eigenvector choice and are excluded."""
    rng = random.Random(21)
    tested = 0
    while tested < 12:
        m = rng.randint(2, 7)
        mus, mcs = _random_graph(rng, m)
        if not _spectrum_sign_decidable(m, mus, mcs, CFG.feature_dim):
            continue
        op = rng.choice(["shrink", "grow"])
        k = rng.randint(1, m)
        candidates = sorted(rng.sample(range(m), k))
        res = net.forward(m, mus, mcs, op, candidates)

        perm = list(range(m))
        rng.shuffle(perm)
        pmus = [sorted(perm[v] for v in e) for e in mus]
        pmcs = [sorted(perm[v] for v in e) for e in mcs]
        pcands = sorted(perm[c] for c in candidates)
        res_p = net.forward(m, pmus, pmcs, op, pcands)

        probs = {perm[c]: float(res.probs[i]) for i, c in enumerate(candidates)}
        probs_p = {c: float(res_p.probs[i]) for i, c in enumerate(pcands)}
        for c in pcands:
            assert probs_p[c] == pytest.approx(probs[c], abs=1e-5)
        assert float(res_p.probs[-1]) == pytest.approx(float(res.probs[-1]), abs=1e-5)
        assert float(res_p.value) == pytest.approx(float(res.value), abs=1e-5)
        tested += 1


def test_finite_outputs_on_arbitrary_requests(net):
    rng = random.Random(33)
    for _ in range(20):
        m = rng.randint(1, 9)
        mus, mcs = _random_graph(rng, m) if rng.random() < 0.8 else ([], [])
        op = rng.choice(["shrink", "grow"])
        candidates = sorted(rng.sample(range(m), rng.randint(0, m)))
        res = net.forward(m, mus, mcs, op, candidates)
        assert torch.isfinite(res.probs).all()
        assert torch.isfinite(res.value)


def test_checkpoint_round_trip(tmp_path, net):
    from musagent.model import load_checkpoint, save_checkpoint

    path = tmp_path / "ckpt.pt"
    save_checkpoint(str(path), net, {"trained_steps": 123})
    loaded, extra = load_checkpoint(str(path))
    assert extra["trained_steps"] == 123
    res_a = net.forward(5, [[0, 1]], [[2]], "shrink", [0, 1, 3])
    res_b = loaded.forward(5, [[0, 1]], [[2]], "shrink", [0, 1, 3])
    assert torch.allclose(res_a.probs, res_b.probs)
    assert torch.allclose(res_a.value, res_b.value)
