"""Caching of content fractions for maximal expected playback quality."""

from .channel_model import ChannelParams, capacity, threshold_k, threshold_l
from .content_model import CacheConstraintError, ContentLibrary, content_size, zipf_popularity
from .distance import Fixed, PoissonDisk, TabulatedPdf, UniformDisk
from .monte_carlo import SimEstimate, cross_evaluate, simulate_quality
from .policy_optimizer import (
    CachingPolicy,
    baseline_whole_content,
    brute_force_policy,
    invert_v_fixed,
    invert_v_radial,
    waterfill,
)
from .quality_analytics import (
    eval_g,
    expected_delivered_quality,
    increment_rate_fixed,
    increment_rate_radial,
    lower_incomplete_gamma,
    objective,
    radial_outage_integral,
)

__version__ = "0.1.0"
