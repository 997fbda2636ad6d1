"""Coprime-array DoA estimation by cyclic rank-minimizing Toeplitz reconstruction."""
from .geometry import ArrayGeometry, GeometryError, coprime_positions, difference_coarray, virtual_ula_params
from .signal_sim import SourceScene, exact_covariance, generate_snapshots, sample_covariance, steering_vector
from .coarray import (ReferenceToeplitz, VirtualLagSignal, interpolate_init, lag_statistics,
                      reference_matrix, subarray_matrix)
from .toeplitz import bordered_matrix, toeplitz_adjoint, toeplitz_from_vec
from .subproblem import ZStepProblem, psd_project, solve_z_step
from .recovery import (RecoveryConfig, RecoveryState, closed_form_W, cyclic_minimize, f_objective,
                       numerical_rank, vandermonde_decomposition)
from .spectrum import DoaEstimate, SpectrumGrid, find_peaks, music_spectrum, segment_music_baseline
from ._backend import BACKEND

__version__ = "0.1.0"
