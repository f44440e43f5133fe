"""Switched position/force control of a manipulator against a stiff wall.

Stability certificates for the switched error system, desired-trajectory
design, event-located simulation and damping synthesis.
"""
from .conewise import StabilityCertificate, Verdict, certify
from .model import (ConewisePair, ControllerGains, Environment, EnvEstimates, RigidPlant,
                    WristParams, closed_loop_matrices, reduced_env)

__version__ = "0.1.0"

__all__ = [
    "ConewisePair", "ControllerGains", "Environment", "EnvEstimates", "RigidPlant",
    "StabilityCertificate", "Verdict", "WristParams", "certify", "closed_loop_matrices",
    "reduced_env",
]
