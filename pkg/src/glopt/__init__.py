"""Stochastic first-order optimization under gap-proportional gradient growth.

The package provides: small numeric kernels (`numerics`), an objective suite
with exact constants and u+v stochastic oracles (`problems`), online learners
with exact regret evaluation (`online`), the online-to-batch conversion and
its stepsize schedules (`framework`), direct implementations of the named
algorithms (`optimizers`), falsifiable numeric checkers (`verify`), and a
reproducible experiment harness with a CLI (`harness`, `cli`).
"""

from .framework import (RunRecord, Schedule, make_schedule, run_conversion,
                        run_conversion_quasar)
from .numerics import clip_coord, clip_euclid, inv_sqrt_psd, project_ball
from .online import (LEARNER_IDS, RegretRecord, learner_play, learner_step,
                     make_learner, regret_eval)
from .optimizers import OPTIMIZER_IDS, OptimizerSpec, run_optimizer
from .problems import (OracleSample, Problem, ProblemConstants, QuasarOracle,
                       StochOracle, default_suite, exact_F, from_spec,
                       make_exp_inf, make_holder, make_inf_dist,
                       make_lower_bound, make_norm_power, make_power_inf,
                       make_quasar_ripple, mf_bound, sample_generalized_grad,
                       sample_grad)
from .rng import RunRng, run_stream

__version__ = "0.1.0"
