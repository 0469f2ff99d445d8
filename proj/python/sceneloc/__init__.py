"""Learned scene-dependent odometry uncertainty for relative pose fusion."""

from sceneloc._core import (
    DataError,
    Error,
    InfoState,
    InvalidArgument,
    NumericalError,
    Pose2,
    RelativePoseFuser,
    SingularStateError,
    angle_diff,
    between,
    compare,
    compose,
    descriptor_to_info,
    evaluate,
    from_matrix,
    info_to_descriptor,
    initial_info_state,
    inverse,
    load_dataset,
    normalize_angle,
    rotate_information,
    rpf_step,
    simulate,
    to_matrix,
    train,
)

__all__ = [
    "DataError",
    "Error",
    "InfoState",
    "InvalidArgument",
    "NumericalError",
    "Pose2",
    "RelativePoseFuser",
    "SingularStateError",
    "angle_diff",
    "between",
    "compare",
    "compose",
    "descriptor_to_info",
    "evaluate",
    "from_matrix",
    "info_to_descriptor",
    "initial_info_state",
    "inverse",
    "load_dataset",
    "normalize_angle",
    "rotate_information",
    "rpf_step",
    "simulate",
    "to_matrix",
    "train",
]
