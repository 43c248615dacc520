"""Shared test utilities: finite-difference gradient probing."""

import numpy as np
import torch


def probe_gradients(loss_fn, params, n_probes=50, seed=0, h=1e-5):
    """Compare autograd gradients with central finite differences at randomly
    probed parameter scalars. loss_fn must be a deterministic function of the
    current parameter values. Returns a list of (analytic, numeric) pairs.
    """
    params = [p for p in params if p.requires_grad and p.numel() > 0]
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()

    sizes = [p.numel() for p in params]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=min(n_probes, total), replace=False)
    offsets = np.cumsum([0] + sizes)

    pairs = []
    with torch.no_grad():
        for flat_idx in picks:
            pi = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
            i = int(flat_idx - offsets[pi])
            p = params[pi]
            orig = p.view(-1)[i].item()
            g_analytic = p.grad.view(-1)[i].item() if p.grad is not None else 0.0
            p.view(-1)[i] = orig + h
            loss_plus = loss_fn().item()
            p.view(-1)[i] = orig - h
            loss_minus = loss_fn().item()
            p.view(-1)[i] = orig
            pairs.append((g_analytic, (loss_plus - loss_minus) / (2 * h)))
    return pairs


def assert_gradients_match(pairs, rtol=1e-3, atol=1e-7):
    worst = 0.0
    for g_analytic, g_numeric in pairs:
        err = abs(g_analytic - g_numeric)
        bound = atol + rtol * max(abs(g_analytic), abs(g_numeric))
        worst = max(worst, err - bound)
        assert err <= bound, f"gradient mismatch: analytic={g_analytic} numeric={g_numeric}"
    return worst


def zero_inner_weights(rsu):
    """Zero every convolution (weights and biases) inside the inner U of a
    residual U-block, leaving the input convolution untouched."""
    with torch.no_grad():
        for block in list(rsu.enc) + [rsu.bottom] + list(rsu.dec):
            block.conv.weight.zero_()
            block.conv.bias.zero_()
