"""2-D Helmholtz fields from hard-constraint trial networks.

The trial field interpolates Dirichlet data exactly for any network
parameters, so training minimizes the equation residual alone; the package
also ships the soft-constraint baseline it improves on, and series / Bessel /
finite-element oracles for quantitative validation.
"""

from .domains import (Circle, DomainSpec, Ellipse, EllipticalCoords, Rect,
                      Sampling, Wavenumber, wavenumber)
from .geometry import (AdfExpr, CircleAdf, EllipseAdf, EquivalentAdf,
                       NonDifferentiablePointError, Point2, RConj, RDisj,
                       Segment, SegmentAdf, circle_adf, ellipse_adf,
                       equivalent_adf, eval_jet, max_min_boolean,
                       r_conjunction, r_disjunction, r_smooth, segment_adf,
                       signed_distance, trimming)
from .jets import Jet2, JetBatch
from .network import (Architecture, MlpParams, forward, forward_jet,
                      init_params, load_params, save_params)
from .oracle import (Comparison, FieldGrid, Mesh, NearResonantError,
                     bessel_j0, circle_bessel, fem_solve, mesh_rule_edge,
                     rect_series, relative_l2)
from .training import (DynamicLambda, FixedLambda, GradientHistogram,
                       LossBreakdown, TrainConfig, TrainReport,
                       gradient_histogram, lambda_target, lambda_update,
                       lbfgs_minimize, loss_boundary, loss_pde, train_soft,
                       train_trial)
from .trial import (BoundaryPiece, TrialForm, circle_form,
                    corner_exclusion_radius, ellipse_form, form_for_shape,
                    rectangle_form, shepard_weights, trial_eval, trial_jet)

__version__ = "0.1.0"
