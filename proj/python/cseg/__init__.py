"""Curriculum semi-supervised segmentation on synthetic data."""

from ._cseg import (
    AccessDenied,
    ConfigError,
    UsageError,
    aggregate_last_k,
    augment,
    config_hash,
    config_text,
    dice,
    format_table,
    generate,
    generate_sample,
    make_membership,
    size_penalty,
    sweep,
    train,
)

__all__ = [
    "AccessDenied",
    "ConfigError",
    "UsageError",
    "aggregate_last_k",
    "augment",
    "config_hash",
    "config_text",
    "dice",
    "format_table",
    "generate",
    "generate_sample",
    "make_membership",
    "size_penalty",
    "sweep",
    "train",
]
