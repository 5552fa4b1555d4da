"""Thin exporter: run a frozen SAM2 checkpoint on a video under a single
first-frame point prompt and write the TPSM sequence layout."""

from .errors import AdapterError, ModelLoadError, PromptError, UnreadableVideoError
from .export import PromptSpec, export, load_frames
from .predictor import Sam2VideoPredictor

__version__ = "0.1.0"
