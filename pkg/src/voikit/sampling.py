"""Seeded random models for the verification suites and tests.

Distributions are drawn symmetric-Dirichlet(1) and quantized to 1e-12 so
runs are reproducible bit-for-bit and row sums are exactly one.
"""

from __future__ import annotations

import numpy as np

from .core import Alphabet, Channel, FiniteDistribution, JointModel

QUANTUM_DECIMALS = 12


def _quantize(p: np.ndarray) -> np.ndarray:
    q = np.round(p, QUANTUM_DECIMALS)
    q[np.argmax(q)] += 1.0 - q.sum()
    return q


def random_distribution(rng: np.random.Generator, alphabet: Alphabet) -> FiniteDistribution:
    return FiniteDistribution(alphabet, _quantize(rng.dirichlet(np.ones(len(alphabet)))))


def random_channel(rng: np.random.Generator, input: Alphabet, output: Alphabet) -> Channel:
    rows = np.vstack(
        [_quantize(rng.dirichlet(np.ones(len(output)))) for _ in range(len(input))]
    )
    return Channel(input, output, rows)


def random_model(
    rng: np.random.Generator, n_x: int, n_y: int, numeric: bool = False
) -> JointModel:
    values = tuple(float(i) for i in range(n_x)) if numeric else None
    x = Alphabet.of_size(n_x, prefix="x", values=values)
    y = Alphabet.of_size(n_y, prefix="y")
    return JointModel(random_distribution(rng, x), random_channel(rng, x, y))


def random_markov_triple(rng: np.random.Generator, n_x: int, n_y: int, n_z: int, numeric: bool = False):
    """A chain X - Y - Z: returns (model X->Y, channel Y->Z, model X->Z)."""
    from .core import compose_channels

    model = random_model(rng, n_x, n_y, numeric=numeric)
    z = Alphabet.of_size(n_z, prefix="z")
    second = random_channel(rng, model.channel.output, z)
    composed = compose_channels(model.channel, second)
    return model, second, JointModel(model.prior, composed)


def random_loss_matrix(rng: np.random.Generator, n_x: int, n_a: int) -> np.ndarray:
    return rng.random((n_x, n_a))
