"""Dependent rounding with strong negative correlation and its scheduling application."""
from .biround import BipartiteInstance, Edge, depround, depround_many, normalize
from .corr_exp import joint_mgf, multivariate_geometric, sample_correlated_exponentials
from .errors import InputError, InternalError, InvalidParameterSet
from .negcorr import phi, phi_exponential_rule, phi_proportional_lb
from .params import DEFAULT, ParameterSet
from .relax import FractionalSolution, check_feasibility, sdp_objective
from .rng import RngStream
from .schedule import SchedulingInstance, objective, run_pipeline

__version__ = "0.1.0"
