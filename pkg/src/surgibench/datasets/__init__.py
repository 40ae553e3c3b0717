from .rawarray import read_array, write_array
from .store import (
    FORMAT_VERSION,
    DemonstrationSet,
    Episode,
    canonical_actions,
    episode_checksum,
    read_episode,
    write_episode,
)

__all__ = [
    "read_array",
    "write_array",
    "FORMAT_VERSION",
    "DemonstrationSet",
    "Episode",
    "canonical_actions",
    "episode_checksum",
    "read_episode",
    "write_episode",
]
