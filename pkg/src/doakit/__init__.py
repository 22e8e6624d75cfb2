"""Direction-of-arrival estimation toolkit for linear microphone arrays.

Onset-selected direct-path bins, bin-selective dereverberation, and
two-stage (middle-band fusion, high-band refinement) DOA estimation, plus
an image-method room simulator and an evaluation harness.
"""

__version__ = "0.1.0"

from .room import (  # noqa: F401
    ArrayGeometry,
    RoomSpec,
    SourcePlacement,
    SPEED_OF_SOUND,
    generate_rir,
    measure_t60,
    mix_at_sir,
    place_source,
    simulate_capture,
    t60_to_reflection,
)
from .stft import MultichannelSpectrogram, StftConfig, stft  # noqa: F401
from .onset import BinSet, OnsetConfig  # noqa: F401
from .dereverb import WpeConfig  # noqa: F401
from .doa import RefineConfig, SteeringGrid, TdoaNeighborhoodConfig  # noqa: F401
from .pipeline import (  # noqa: F401
    EstimateReport,
    PipelineConfig,
    estimate,
    estimate_baseline,
)
from .evaluate import MetricsTable, TrialSpec, run_suite  # noqa: F401
