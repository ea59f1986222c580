"""Content- and loss-aware instantly decodable network coding over D2D links."""
from .errors import CapacityError, ConfigError, IdncError, InvalidArgument, InvariantViolation, TraceParseError
from .model import (ChannelModel, DeviceState, PacketUniverse, ScenarioState, apply_stage1,
                    compute_distortion, make_scenario, xor_decode)
from .wants import (WantsFamily, advance_on_decode, completion_time_bounds, enumerate_wants_family,
                    per_device_completion_time)
from .graph import CodeSelection, LocalGraph, Vertex, build_local_graph, max_weight_clique, select_global
from .policies import PolicyConfig, PolicyKind, propose_code, weight_p1, weight_p2
from .engine import EpisodeResult, TransmissionRecord, make_rng, run_episode_p1, run_episode_p2, run_round

__version__ = "0.1.0"
