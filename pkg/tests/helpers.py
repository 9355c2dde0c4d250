"""Shared test utilities: oracles and instrumentation."""

from __future__ import annotations

import numpy as np

from fishermala.samplers import ChainState


def finite_diff_grad(f, x, rel_step=1e-5):
    """Central-difference gradient with coordinate-scaled steps."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def random_spd(rng, dim, eig_range=(0.1, 10.0)):
    """SPD matrix with eigenvalues uniform in eig_range."""
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = rng.uniform(*eig_range, size=dim)
    return (Q * eigs) @ Q.T


def rel_fro(A, B):
    return float(np.linalg.norm(A - B) / np.linalg.norm(B))


class CountingTarget:
    """Delegating wrapper that counts evaluations of each entry point."""

    def __init__(self, target):
        self._target = target
        self.dim = target.dim
        self.n_log = 0
        self.n_grad = 0
        self.n_log_and_grad = 0

    def log_density(self, x):
        self.n_log += 1
        return self._target.log_density(x)

    def grad_log_density(self, x):
        self.n_grad += 1
        return self._target.grad_log_density(x)

    def log_and_grad(self, x):
        self.n_log_and_grad += 1
        return self._target.log_and_grad(x)

    @property
    def gradient_evaluations(self):
        """Evaluations that computed a gradient (combined or standalone)."""
        return self.n_grad + self.n_log_and_grad


def philox(seed, spawn=()):
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(spawn))
    return np.random.Generator(np.random.Philox(seq))


def run_chain(kernel, target, rng, x0, n_steps, collect=False):
    """Drive a kernel; returns final state, mean alpha, and samples if asked."""
    state = ChainState.at(target, x0)
    alphas = np.empty(n_steps)
    xs = np.empty((n_steps, target.dim)) if collect else None
    for i in range(n_steps):
        state, info = kernel.step(state, target, rng)
        alphas[i] = info.alpha
        if collect:
            xs[i] = state.x
    return state, alphas, xs
