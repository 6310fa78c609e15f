import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_star_polygon(rng, cx, cy, r_lo, r_hi, n_vertices):
    """Simple (non-self-intersecting) polygon, star-shaped around (cx, cy)."""
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=n_vertices))
    radii = rng.uniform(r_lo, r_hi, size=n_vertices)
    xs = cx + radii * np.cos(angles)
    ys = cy + radii * np.sin(angles)
    return np.stack([xs, ys], axis=1)
