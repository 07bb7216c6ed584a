"""Hypothesis strategies for valid parameter sets."""

import warnings

from hypothesis import strategies as st

from allee_defense.model import ModelParams

positive = st.floats(min_value=0.05, max_value=3.0, allow_nan=False, allow_infinity=False)


@st.composite
def params(draw, **fixed):
    values = {name: fixed.get(name, draw(positive)) for name in ("r", "K", "w", "h", "a", "b", "c", "delta")}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ModelParams(**values)


@st.composite
def weak_params(draw):
    p = draw(params())
    h = draw(st.floats(min_value=0.01, max_value=0.99)) * p.w
    return p.with_value("h", h)


@st.composite
def strong_params(draw):
    """Strong Allee effect with w < K."""
    p = draw(params())
    K = p.w * draw(st.floats(min_value=1.05, max_value=10.0))
    h = p.w * draw(st.floats(min_value=1.01, max_value=4.0))
    return p.with_value("K", K).with_value("h", h)
