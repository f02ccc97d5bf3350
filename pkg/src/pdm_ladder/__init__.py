"""Ladder-operator solutions of complex-potential, position-dependent-mass models.

Modules
-------
profile
    Mass-profile expressions: parser, evaluator, symbolic derivatives.
numerics
    Grids, finite differences, quadrature and pairings.
ladder
    Model parameters, ladder operators, Hamiltonians and eigenstates.
validation
    Numerical checks of the operator identities and the validation report.
cli
    The ``pdm-ladder`` command.
"""
from .catalog import CATALOG, get_profile
from .errors import (
    DomainError, GridError, InsufficientDomainError, NonFiniteError, OrderingError,
    ParseError, PDMError, PositivityError,
)
from .ladder import (
    LadderSystem, ModelParams, OrderingParams, StateSet, apply_hamiltonian, apply_ladder,
    build_states, build_system, energy, factorization_defect, ground_state,
)
from .numerics import Grid, GridFunction, bilinear_pair, integrate, sesquilinear_pair
from .profile import MassProfile, make_profile, parse
from .validation import full_report

__version__ = "0.1.0"
