"""Simulator and verification harness for the damped stochastic wave equation with additive noise."""

__version__ = "0.1.0"

from .params import P_STAR, InvalidParams, Params, decay_rate_sigma, max_noise_intensity, validate
from .grid import Grid, cutoff_rho, tail_mask
from .nonlin import Nonlinearity, verify_assumption2
from .noise import NoisePath, NoiseProfile, member_seed, ou_trajectory, sample_path
from .dynamics import NoiseContext, SimulationError, State, System, cocycle, evolve, pullback
from .energy import absorbing_radius, check_energy_inequality, e_norm, energy_q
from .tails import tail_energy, tail_experiment, tail_norm
from .vitali import LatticeFunction, lp_norm, vitali_verdict
from .attractor import StateCloud, approximate_attractor, hausdorff_semidist
