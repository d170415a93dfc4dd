"""Joint sensing and task-oriented communications simulator.

Two encoders at a transmitter compress an image and the probe signal
reflected off the pictured object; a decoder at a fusion-center receiver
classifies the target as a potential transmitter (vehicle) or not (animal)
from both received vectors. All three networks train end-to-end through
differentiable AWGN or Rayleigh channels.
"""

from .channel import (
    ChannelConfig,
    ChannelRealization,
    SensingConfig,
    apply_channel,
    noise_std,
    normalize_power,
    sensing_reflect,
)
from .dataset import (
    Dataset,
    Split,
    batch_indices,
    load_cifar10,
    relabel_binary,
    synthetic_dataset,
    verify_checksums,
)
from .errors import (
    ConfigError,
    CorruptDatasetError,
    DivergenceError,
    LabelError,
    ShapeError,
)
from .harness import (
    ExperimentConfig,
    Metrics,
    SweepResult,
    emit_report,
    evaluate,
    run_experiment,
    sweep_comm_snr,
    sweep_output_size,
    sweep_sensing_snr,
)
from .models import (
    ModelConfig,
    Pipeline,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .rng import Rng

__version__ = "0.1.0"
