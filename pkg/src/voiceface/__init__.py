"""
voiceface

Voice-face cross-modal metric learning: embedders, triplet training,
matching/retrieval evaluation and speech segment detection.
"""

from .main import main

__all__ = ["main"]
