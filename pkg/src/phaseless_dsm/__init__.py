"""Phaseless multi-frequency inverse source scattering with reference point sources."""

from .expression import Expression, ExpressionError
from .scene import (Component, Difference, Direction, Disc, Point2, Polygon, Rectangle,
                    ReferenceSource, SourceModel, contains, eval_source, strip_hull)
from .forward import (Dataset, FarFieldData, NoiseSpec, WaveNumberGrid, apply_absolute_noise,
                      apply_relative_noise, far_field, far_field_batch, far_field_with_ref,
                      default_directions, synthesize)
from .phase_retrieval import retrieve_far_field, retrieve_point
from .sampling import (IndicatorField, SamplingGrid, evaluate_on_grid, f_functional, g_functional,
                       indicator_i1, indicator_i2)

__version__ = "0.1.0"
