import pytest
from hypothesis import strategies as st

from dualsource_aoi.model import ModelParams, default_params


def defaults(**overrides):
    """Fixed defaults with c1 = 5 plus the varied axes."""
    overrides.setdefault("cost_primary", 5)
    return default_params(**overrides)


@pytest.fixture
def scarce():
    return defaults(harvest_prob=0.2, reliability_backup=0.2, cost_backup=4)


@pytest.fixture
def tiny():
    """Four-state instance: B=1, age_max=2, primary always fresh, energy every slot."""
    return ModelParams(battery_capacity=1, cost_primary=1, cost_backup=1,
                       reliability_primary=1.0, reliability_backup=0.0, harvest_prob=1.0,
                       harvest_amount=1, age_fresh=1, age_stale=2, age_max=2, strict=False)


# interior probabilities stay clear of float underflow in 1 - p
probabilities = st.one_of(st.sampled_from([0.0, 1.0, 0.5]), st.floats(1e-3, 1 - 1e-3))


@st.composite
def small_params(draw, max_battery=6, max_age=6):
    """Arbitrary small configurations, including degenerate ones."""
    B = draw(st.integers(0, max_battery))
    age_max = draw(st.integers(1, max_age))
    age_fresh = draw(st.integers(1, age_max))
    age_stale = draw(st.integers(age_fresh, age_max))
    return ModelParams(
        battery_capacity=B,
        cost_primary=draw(st.integers(0, B + 1)),
        cost_backup=draw(st.integers(0, B + 1)),
        reliability_primary=draw(probabilities),
        reliability_backup=draw(probabilities),
        harvest_prob=draw(probabilities),
        harvest_amount=draw(st.integers(1, 4)),
        age_fresh=age_fresh, age_stale=age_stale, age_max=age_max, strict=False)
