"""Neural inverse kinematics for serial chains."""

from ._cycleik import (
    Dataset,
    DimensionError,
    Error,
    FormatError,
    InvalidArgument,
    KinematicChain,
    LossVariant,
    Model,
    ParseError,
    TrainingConfig,
    bezier_point,
    evaluate,
    generate_dataset,
    load_chain,
    load_checkpoint,
    parse_chain,
    plan_cartesian,
    preset,
    preset_names,
    read_dataset,
    save_checkpoint,
    solve_dls,
    train,
    write_dataset,
)

__all__ = [
    "Dataset",
    "DimensionError",
    "Error",
    "FormatError",
    "InvalidArgument",
    "KinematicChain",
    "LossVariant",
    "Model",
    "ParseError",
    "TrainingConfig",
    "bezier_point",
    "evaluate",
    "generate_dataset",
    "load_chain",
    "load_checkpoint",
    "parse_chain",
    "plan_cartesian",
    "preset",
    "preset_names",
    "read_dataset",
    "save_checkpoint",
    "solve_dls",
    "train",
    "write_dataset",
]
