import numpy as np
import pytest

from basis_approx.numerics import make_grid_function, three_bump_target

DESK_GRID = 200


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def target():
    """The three-bump target on a desk-scale grid."""
    return make_grid_function(three_bump_target(), DESK_GRID)


@pytest.fixture
def write_toml(tmp_path):
    def _write(text, name="experiment.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
