import numpy as np
from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def ot_instances(draw, max_dim=6, balanced=True):
    """Random (p, q, phi) with probability margins unless ``balanced`` is False."""
    n = draw(st.integers(1, max_dim))
    m = draw(st.integers(1, max_dim))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.05, 1.0, n)
    q = rng.uniform(0.05, 1.0, m)
    if balanced:
        p, q = p / p.sum(), q / q.sum()
    return p, q, rng.uniform(-1, 1, (n, m))
