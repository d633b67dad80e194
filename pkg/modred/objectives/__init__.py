"""Reconstruction, triplet alignment and curriculum objectives."""

from modred.objectives.curriculum import (
    CurriculumState,
    combined_loss,
    curriculum_weights,
    epoch_weights,
)
from modred.objectives.losses import (
    DEFAULT_MARGIN,
    alignment_loss,
    masked_reconstruction_loss,
    reconstruction_loss,
    triplet_loss,
)
from modred.objectives.triplets import TripletAssignment, assign_triplets


__all__ = [
    "DEFAULT_MARGIN",
    "CurriculumState",
    "TripletAssignment",
    "alignment_loss",
    "assign_triplets",
    "combined_loss",
    "curriculum_weights",
    "epoch_weights",
    "masked_reconstruction_loss",
    "reconstruction_loss",
    "triplet_loss",
]
