from .basic import BasicMac
from .common import Frame, FrameKind, MacParams, Packet
from .node import MacNode, Phase
from .proposed import AsyncMac

VARIANTS = {"basic": BasicMac, "proposed": AsyncMac}

__all__ = ["AsyncMac", "BasicMac", "Frame", "FrameKind", "MacNode", "MacParams", "Packet",
           "Phase", "VARIANTS"]
