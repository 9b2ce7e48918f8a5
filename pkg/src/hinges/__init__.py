"""Separated quotient-spaces by Hausdorff closure, and hinges of linear relations."""

from .metric import (EMPTY, ClosedSetSample, EuclideanSpace, FiniteMetricSpace, MetricError,
                     hausdorff_distance, limit_classes, liminf_set, limsup_set)
from .linrel import (GRASSMANN, LinearRelation, LinrelError, Subspace, equal_mod_scale,
                     gap_distance, is_scaling_fixed, scale_relation, span_from_columns)

__version__ = "0.1.0"
