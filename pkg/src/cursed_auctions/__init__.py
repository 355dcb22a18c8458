"""Single-item interdependent-value auctions for bidders prone to the winner's
curse: cursed valuations, individually rational compensated payments, the
revenue-optimal threshold rule, masking, and the masked generalized Vickrey
auction, together with property checkers, a brute-force oracle, and Monte
Carlo evaluation."""

from .mechanisms import (
    AuctionContext,
    ConstantOffsetRule,
    GVARule,
    MaskedRule,
    Mechanism,
    ModelUnsupportedError,
    OptSpec,
    Outcome,
    RevenueOptimalRule,
    TabulatedGridRule,
    ThresholdRule,
    compensation,
    critical_bid,
    make_context,
    mask,
    masked_gva,
    revenue_optimal_rule,
    run,
    run_batch,
)
from .reports import CheckReport
from .signals import (
    DiscreteGridIID,
    GenericIID,
    RandomStream,
    SignalSpace,
    UniformIID,
    cdf,
    quantile,
    sample_profile,
    sample_profiles,
)
from .valuations import (
    ConcaveSum,
    InterimCache,
    MaxSignal,
    QuadSpec,
    ScalarMap,
    WeightedSum,
    check_cursedness_monotonicity,
    check_single_crossing,
    cursed_value,
    cursed_virtual_value,
    interim_value,
    make_interim_cache,
    value,
)

__version__ = "0.1.0"
