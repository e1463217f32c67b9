"""Continuized acceleration: Poisson-clocked optimization, gossip, and
dual decentralized optimization with exact closed-form discretization."""

from .dynamics import (
    CoupledState,
    gradient_jump,
    initial_state,
    lyapunov_value,
    mix_closed_form,
    run_continuized,
    run_gd,
    run_nesterov,
    run_three_sequence,
)
from .graphs import (
    Graph,
    SpectralCache,
    build_graph,
    complete_graph,
    cycle_graph,
    edge_list_graph,
    gossip_rates,
    grid_graph,
    line_graph,
    spectral,
)
from .gossip import GossipParams, run_gossip
from .dual import DualParams, LocalFunction, run_decentralized
from .problems import (
    ConvexProblem,
    LeastSquaresProblem,
    NoiseModel,
    QuadraticProblem,
    compute_r2_kappa_tilde,
    gradient,
    make_least_squares,
    make_quadratic,
    stochastic_gradient,
)
from .schedules import (
    EventClock,
    LyapunovCoeffs,
    ParamSchedule,
    discrete_params,
    lyapunov_coeffs,
    sample_interarrival,
    schedule_eval,
)
from .seeding import RunStreams, derive_seed, run_streams, splitmix64
from .trace import Trace, TraceSample

__version__ = "0.1.0"
