import random

from hypothesis import strategies as st

from taplab.adversary import GenParams, gen_random
from taplab.rationals import Rat


@st.composite
def rationals(draw, min_value=0, max_value=64, max_denominator=16):
    f = draw(
        st.fractions(
            min_value=min_value, max_value=max_value, max_denominator=max_denominator
        )
    )
    return Rat(f.numerator, f.denominator)


@st.composite
def small_taps(draw, max_n=6, pow2=False):
    seed = draw(st.integers(min_value=0, max_value=2**32))
    rng = random.Random(seed)
    return gen_random(
        GenParams(
            p=rng.choice([4, 8, 16]),
            n=draw(st.integers(min_value=0, max_value=max_n)),
            ratio_distribution="pow2" if pow2 else rng.choice(["uniform", "extremes"]),
            arrival_pattern=rng.choice(["batch", "poisson", "bursty"]),
            seed=seed,
        )
    )
