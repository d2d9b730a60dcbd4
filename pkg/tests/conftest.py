import pytest

from hopscan import Dimension, Mask, PointFilter, build_layout


@pytest.fixture
def f1_layout():
    """Two 3-bit dimensions interleaved y x y x y x (x on {5,3,1})."""
    return build_layout([Dimension("y", 3), Dimension("x", 3)], "interleave_by_cardinality")


@pytest.fixture
def f1_x_mask():
    return Mask.from_positions(6, [1, 3, 5])


@pytest.fixture
def f1_point_x5(f1_x_mask):
    """Restriction x == 5, i.e. pattern 17 in place."""
    return PointFilter(f1_x_mask, 17)
