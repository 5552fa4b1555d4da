class AdapterError(Exception):
    """Base class for exporter errors."""


class UnreadableVideoError(AdapterError):
    """The video file or frame directory could not be decoded."""


class ModelLoadError(AdapterError):
    """The segmentation model or its checkpoint could not be loaded."""


class PromptError(AdapterError):
    """The prompt violates the weak-prompt protocol."""
