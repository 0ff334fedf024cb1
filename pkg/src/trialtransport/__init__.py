"""Transporting trial results to a target population selected on treatment."""
from .estimators import (check_positivity, standardize_beta, standardize_phi, stratum_risks,
                         weight_beta, weight_phi)
from .errors import PositivityError
from .graph import Dag, builtin, check_phi_equals_beta, check_phi_equals_gamma, d_separated
from .oracle import beta, contrasts, gamma, phi_param, verify_identification
from .scm import (JointDistribution, Scm, VariableSpec, enumerate_joint, intervene, random_scm,
                  sample, validate_scm)
from .table import ContingencyTable

__version__ = "0.1.0"
