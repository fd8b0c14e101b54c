"""Projection plans, label projection, quality matrices and reference selection."""

from .plans import (CENTER, MULTIVIEW, SCHEMES, TOPLEFT, Block, ProjectionPlan, make_plan, plan_center,
                    plan_multiview, plan_topleft, reference_positions)
from .project import fill_holes, project_labels, projection_quality, quality_matrix, run_plan
from .refselect import (HORIZONTAL, VERTICAL, RefSelectionInput, lower_hull, select_reference_spacing,
                        select_spacing_from_matrix)

__all__ = [
    "CENTER", "MULTIVIEW", "SCHEMES", "TOPLEFT", "Block", "ProjectionPlan", "make_plan", "plan_center",
    "plan_multiview", "plan_topleft", "reference_positions", "fill_holes", "project_labels",
    "projection_quality", "quality_matrix", "run_plan", "HORIZONTAL", "VERTICAL", "RefSelectionInput",
    "lower_hull", "select_reference_spacing", "select_spacing_from_matrix",
]
