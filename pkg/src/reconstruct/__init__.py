from .cover import FullCover, flag_cells, flag_cover, lift_flags, reconstruct
from .validation import SweepRecord, ValidationLog, replay_removals, validate

__all__ = [
    "FullCover",
    "SweepRecord",
    "ValidationLog",
    "flag_cells",
    "flag_cover",
    "lift_flags",
    "reconstruct",
    "replay_removals",
    "validate",
]
