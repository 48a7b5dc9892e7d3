"""Online feedback optimization for monotone plants without timescale separation."""

from .certify import (CertificationReport, Constants, SmallGainResult, Verdict, certify,
                      check_corollary1, check_lemma2, check_lemma3, check_lemma4,
                      check_lemma5_sampled, estimate_constants, small_gain_iterate,
                      solve_reference_optimum, suggest_regularization, surrogate_argmin)
from .control import (ClosedLoopSystem, CostModel, OfoController, assemble_closed_loop,
                      gradient_flow_reference, ofo_field, quadratic_cost, simulate_closed_loop)
from .geometry import Box, OrthantOrder, box_radius, orthant_leq, project_tangent
from .integrate import (IntegrationError, NonFiniteFieldError, StepConfig, StepSizeUnderflow,
                        Trajectory, integrate_projected, settle)
from .plant import (PlantModel, check_metzler, check_monotone, sensitivity, sensitivity_fd,
                    steady_output, steady_state, verify_order_preservation)
from .plants import gene_plant, lti_plant
from .scenarios import (ScenarioConfig, ScenarioResult, build_gene_scenario, build_lti_scenario,
                        run_scenario)
from .schedule import Schedule

__all__ = [name for name in dir() if not name.startswith("_")]
