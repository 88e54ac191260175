"""Random-access multiuser channel coding with collision detection."""

from .channel import ChannelModel, build_dmc, collision_channel, load_channel, noiseless_channel
from .coding import CodebookLibrary, InputProfile, constant_profile, load_profile, prop1_profile
from .decoder import DecodeOutcome, TypicalityParams, candidate_set, decode_all, decode_user
from .errors import BudgetExceeded, ConfigError, GuardrailError
from .information import conditional_mutual_information, entropy
from .regions import MIOracle, contains_all, contains_subset, contains_user

__version__ = "0.1.0"
