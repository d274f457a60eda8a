import numpy as np
import pytest

from handforge import primitives


@pytest.fixture(scope="session")
def unit_cube():
    return primitives.cube(1.0, center=(0.5, 0.5, 0.5))


@pytest.fixture(scope="session")
def ico10_4():
    return primitives.icosphere(10.0, 4)


@pytest.fixture(scope="session")
def ico10_6():
    # fine tessellation: vertex-normal offsets are radial to ~5e-7 mm
    return primitives.icosphere(10.0, 6)


@pytest.fixture(scope="session")
def ico5_3():
    return primitives.icosphere(5.0, 3)


def random_soup(rng, n_vertices=12, n_faces=8):
    """A valid random triangle soup (distinct indices per face)."""
    verts = rng.uniform(-100.0, 100.0, size=(n_vertices, 3))
    faces = np.array([rng.choice(n_vertices, size=3, replace=False) for _ in range(n_faces)])
    from handforge.mesh_io import TriangleMesh

    return TriangleMesh(verts, faces).validate()
