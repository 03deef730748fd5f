"""Thermodynamics of adiabatic open quantum systems: superoperators, exact and
adiabatic propagation, heat/work/entropy ledgers and tomography tools."""

from .dynamics import Trajectory, fidelity, propagate_adiabatic, propagate_exact
from .models import PRESETS, preset
from .spectral import DefectiveLiouvillian, adiabatic_phases, decompose
from .superop import (CoherenceVector, Dissipator, HamiltonianVector, LindbladModel, OperatorBasis, Superoperator,
                      assemble_liouvillian, devectorize, hamiltonian_vector, operator_basis, vectorize)
from .thermo import ThermoLedger, conjugate_model, exact_ledger, heat_rate, total_heat_closed_form, work_rate

__version__ = "0.1.0"
