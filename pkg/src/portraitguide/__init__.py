"""Two-stage drawing guidance engine for freehand portrait sketching.

Global stage: user strokes are encoded with an oriented-filter bag of
features and matched against a corpus of facial contour sketches whose
top hits are blended into a shadow underlay. Local stage: the strokes are
mapped onto the matched template's label mask and a pluggable synthesizer
renders detailed portrait guidance conforming to the user's contours.
"""

__version__ = "0.1.0"

from .encoder import GalifEncoder
from .errors import (
    DegenerateGeometryError,
    DocumentError,
    FormatError,
    ValidationError,
)
from .strokes import StrokeSet, Stroke, Vertex

__all__ = [
    "GalifEncoder",
    "StrokeSet",
    "Stroke",
    "Vertex",
    "ValidationError",
    "DocumentError",
    "FormatError",
    "DegenerateGeometryError",
    "__version__",
]
