"""Jointly-sparse MMV recovery and massive-MIMO channel estimation.

Thin wrapper over the C++ core. The heavy lifting (solvers, channel
simulation, trained-network pursuit) lives in the compiled ``_mmvrec``
module; this package just re-exports it.
"""

from ._mmvrec import (
    ChannelScene,
    estimate_channel,
    generate_scene,
    inspect_weights,
    lstsq,
    nmse,
    recover,
)

__all__ = [
    "ChannelScene",
    "estimate_channel",
    "generate_scene",
    "inspect_weights",
    "lstsq",
    "nmse",
    "recover",
]
