import numpy as np
import pytest

from modesc.manifolds import Euclidean, Hyperboloid, Sphere, SPDMatrices


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def all_manifolds():
    return [Euclidean(3), Sphere(2), Hyperboloid(2), SPDMatrices(2)]


def random_point(manifold, rng, spread=0.8):
    """A generic point: the image of a random tangent step from a base point."""
    if isinstance(manifold, Euclidean):
        return manifold.point(rng.standard_normal(manifold.m))
    if isinstance(manifold, Sphere):
        x = rng.standard_normal(manifold.m + 1)
        return manifold.point(x / np.linalg.norm(x))
    if isinstance(manifold, Hyperboloid):
        base = np.zeros(manifold.m + 1)
        base[0] = 1.0 / np.sqrt(-manifold.kappa)
        o = manifold.point(base)
        u = manifold.random_tangent(o, rng)
        return manifold.exp(o, u, spread * rng.uniform())
    if isinstance(manifold, SPDMatrices):
        o = manifold.point(np.eye(manifold.d))
        u = manifold.random_tangent(o, rng)
        return manifold.exp(o, u, spread * rng.uniform())
    raise TypeError(manifold)
