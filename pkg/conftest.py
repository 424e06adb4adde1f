"""Pytest configuration and shared fixtures."""

import math

import pytest

from periodforge.core.params import SurfaceParams


@pytest.fixture(autouse=True)
def reset_singletons():
    """Reset the global configuration between tests."""
    from periodforge.core.config import reset_config

    reset_config()

    yield

    reset_config()


@pytest.fixture
def env_setup(monkeypatch):
    """Set up environment variables for testing."""

    def _setup(**kwargs):
        for key, value in kwargs.items():
            monkeypatch.setenv(key, str(value))

    return _setup


@pytest.fixture
def half_i_params():
    """y = 0.5i with alpha = pi/2, where most closed forms are simple numbers."""
    return SurfaceParams(x=0.5, y=0.5j, alpha=math.pi / 2, c=1.0)


@pytest.fixture
def generic_params():
    """A tuple with no special symmetry; alpha matches the closed form for y."""
    y = complex(0.2, 0.45)
    cos_alpha = 2.0 * y.real / (1.0 + abs(y) ** 2)
    return SurfaceParams(x=0.3, y=y, alpha=math.acos(cos_alpha), c=1.3, rho=-0.2, lam=2.5)


@pytest.fixture(scope="session")
def solved_params():
    """Solved tuple at x = 1e-3, rho = 0, shared by the slow end-to-end tests."""
    from periodforge.core.config import reset_config
    from periodforge.period_solver import SolveConfig, solve_lambda

    reset_config()
    return solve_lambda(SolveConfig(x=1e-3, rho=0.0))


@pytest.fixture(scope="session")
def mesh_params():
    """Solved tuple at x = 1e-2, less multiscale than solved_params for meshing."""
    from periodforge.core.config import reset_config
    from periodforge.period_solver import SolveConfig, solve_lambda

    reset_config()
    return solve_lambda(SolveConfig(x=1e-2, rho=0.0))


@pytest.fixture(scope="session")
def solved_piece(mesh_params):
    """Assembled fundamental piece of mesh_params at resolution 32."""
    from periodforge.mesh import assemble_piece, build_grid, integrate_surface

    grid = build_grid(mesh_params, 32)
    return assemble_piece(integrate_surface(mesh_params, grid), mesh_params)
