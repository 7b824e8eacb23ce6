"""Random instance generators for matrices and dual profiles."""
from __future__ import annotations

import numpy as np

from .spectral import HermitianForm


def haar_unitary(rng: np.random.Generator, n: int, complex_: bool = True) -> np.ndarray:
    if complex_:
        z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    else:
        z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_spd(rng: np.random.Generator, n: int, mu_range=(-2.0, 2.0),
               complex_: bool = True) -> HermitianForm:
    """``Q diag(exp(mu)) Q^*`` with ``mu`` uniform in ``mu_range``."""
    q = haar_unitary(rng, n, complex_)
    mu = rng.uniform(*mu_range, size=n)
    return HermitianForm((q * np.exp(mu)) @ q.conj().T)


def random_ordered_pair(rng: np.random.Generator, n: int, mu_max: float = 2.0,
                        complex_: bool = True):
    """Forms with ``I <= A <= B``."""
    a = random_spd(rng, n, (0.0, mu_max), complex_)
    c = random_spd(rng, n, (0.0, mu_max), complex_)
    w, v = np.linalg.eigh(a.entries)
    sqrt_a = (v * np.sqrt(w)) @ v.conj().T
    b = HermitianForm(sqrt_a @ c.entries @ sqrt_a)
    return a, b


def random_ordered_triple(rng: np.random.Generator, n: int, mu_max: float = 2.0,
                          complex_: bool = True):
    """Forms ``U <= V <= W`` with ``U`` itself random."""
    u = random_spd(rng, n, (-mu_max, mu_max), complex_)
    a, b = random_ordered_pair(rng, n, mu_max, complex_)
    return u, HermitianForm(u.expand(a.entries)), HermitianForm(u.expand(b.entries))


def random_invertible(rng: np.random.Generator, n: int, complex_: bool = True) -> np.ndarray:
    q1 = haar_unitary(rng, n, complex_)
    q2 = haar_unitary(rng, n, complex_)
    return (q1 * np.exp(rng.uniform(-1.0, 1.0, n))) @ q2


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0,
                     complex_: bool = True) -> np.ndarray:
    z = rng.standard_normal((n, n))
    if complex_:
        z = z + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (z + z.conj().T)


def random_doubly_stochastic(rng: np.random.Generator, n: int, terms: int = 8) -> np.ndarray:
    """Convex combination of random permutation matrices."""
    weights = rng.dirichlet(np.ones(terms))
    out = np.zeros((n, n))
    for w in weights:
        out[np.arange(n), rng.permutation(n)] += w
    return out
