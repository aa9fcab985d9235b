"""Wavepacket-centre Lagrangian descriptors over the Gaussian preparation space
of the inverted harmonic oscillator."""
from .errors import ConfigError, DomainError, FlowOverflowError, FormatError, PreconditionError
from .flow import IntegratorSpec, LinearFlow, flow_velocity, integrate, iho_generator
from .ld import (FieldGrid, GridSpec, LDSample, QuadratureSpec, ScaleSpec, compute_field,
                 extract_ridges, ld_backward, ld_forward, m_diagnostic)
from .model import (CenterState, PhysicalParams, PrepPoint, WidthState, bohmian_velocity,
                    center_flow, internal_bohmian_trajectory, width)
from .sensitivity import (BoundReport, StabilityMatrix, ld_gradient_fd, otoc_proxy,
                          stability_matrix, verify_gradient_bound)

__version__ = "0.1.0"
