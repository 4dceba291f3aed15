"""Trail-following navigation from segmentation masks.

Masks in, steering commands out, plus a small closed-loop simulator for
checking how temporal compensation copes with bad segmentation frames.
"""

from trailnav.mask_core import FrameStamp, SegClass, SegMask, downsample, load_mask, save_mask

__version__ = "0.1.0"

__all__ = [
    "FrameStamp",
    "SegClass",
    "SegMask",
    "downsample",
    "load_mask",
    "save_mask",
]
