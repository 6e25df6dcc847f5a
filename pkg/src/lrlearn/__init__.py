"""Learning ground-state expectation values of long-range spin chains."""

from ._backend import BACKEND
from .exactdiag import generate_dataset, ground_state, measure, solve_ed
from .hamiltonian import HamiltonianFamily, Observable, PauliTerm, build_observable, sample_params
from .learner import TrainedModel, sweep_samples, train, train_equivariant_local

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HamiltonianFamily",
    "Observable",
    "PauliTerm",
    "TrainedModel",
    "build_observable",
    "generate_dataset",
    "ground_state",
    "measure",
    "sample_params",
    "solve_ed",
    "sweep_samples",
    "train",
    "train_equivariant_local",
]
