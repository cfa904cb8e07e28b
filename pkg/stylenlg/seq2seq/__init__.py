from .beam import Generation, beam_generate, greedy_generate
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import (
    Batch,
    PreparedDataset,
    PreparedExample,
    Vocabularies,
    make_batch,
    prepare_example,
    prepare_records,
)
from .model import (
    DecoderState,
    EncoderStates,
    Method,
    ModelConfig,
    ModelParams,
    Task,
    apply_method1,
    attention,
    constraint_vector,
    decode_step,
    encode,
    encode_slot_value,
    initial_state,
    loss,
)
from .training import (
    EpochStats,
    TrainingConfig,
    TrainingResult,
    grid_configs,
    grid_search,
    perplexity,
    select_best,
    train,
)

__all__ = [
    "Batch",
    "Checkpoint",
    "DecoderState",
    "EncoderStates",
    "EpochStats",
    "Generation",
    "Method",
    "ModelConfig",
    "ModelParams",
    "PreparedDataset",
    "PreparedExample",
    "Task",
    "TrainingConfig",
    "TrainingResult",
    "Vocabularies",
    "apply_method1",
    "attention",
    "beam_generate",
    "constraint_vector",
    "decode_step",
    "encode",
    "encode_slot_value",
    "greedy_generate",
    "grid_configs",
    "grid_search",
    "initial_state",
    "load_checkpoint",
    "loss",
    "make_batch",
    "perplexity",
    "prepare_example",
    "prepare_records",
    "save_checkpoint",
    "select_best",
    "train",
]
