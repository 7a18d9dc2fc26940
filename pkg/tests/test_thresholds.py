import random
from fractions import Fraction

import pytest

from ibfrecon.thresholds import (
    C_TABLE,
    Regime,
    c_h,
    cells_for,
    classify,
    compute_c_h,
    predicate_margin,
)


@pytest.mark.parametrize("h", [3, 4, 5, 6])
def test_computed_constants_match_table(h):
    assert compute_c_h(h) == pytest.approx(float(C_TABLE[h]), abs=1e-3)


def test_computed_constants_increase():
    vals = [compute_c_h(h, tol=1e-4) for h in range(3, 8)]
    assert vals == sorted(vals)


def test_compute_is_deterministic():
    assert compute_c_h(4) == compute_c_h(4)


def test_h2_is_table_driven():
    assert c_h(2) == 2
    with pytest.raises(ValueError):
        compute_c_h(2)


def test_predicate_is_monotone_in_alpha():
    rng = random.Random(2)
    for _ in range(30):
        h = rng.randrange(3, 7)
        a, b = sorted(rng.uniform(0.3, 0.99) for _ in range(2))
        if predicate_margin(h, b) > 0:
            assert predicate_margin(h, a) > 0


def test_classify_examples():
    assert classify(120, 60, 3) is Regime.UNDER
    assert classify(120, 100, 3) is Regime.OVER
    assert classify(120, 60, 2) is Regime.UNDER
    assert classify(120, 61, 2) is Regime.OVER


def test_cells_for_rounds_to_block_multiple():
    assert cells_for(10, 3) == 15  # ceil(12.22) = 13 -> 15
    assert cells_for(10, 2) == 20
    assert cells_for(1, 5) == 5
    assert c_h(8) > C_TABLE[7]
    assert isinstance(c_h(8), Fraction)
