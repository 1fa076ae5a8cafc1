"""Built-in models: the DC electric drive and a wide synthetic bench load.

The DC drive is a fourth-order plant in relative units: position integrator,
mechanical lag, electrical lag and a power-converter lag.  Its physical
parameters expand to the state matrices through

    Tm = J R / c^2,  Te = L / R,
    a12 = 1,  a23 = 1/Tm,  a32 = a33 = -1/Te,  a34 = 1/Te,
    a44 = -1/Tc,  b4 = 1/Tc

with y = x1.  The default parameters give a23 = 50, a32 = a33 = -125,
a34 = 125, a44 = -1000 and b4 = 1000 (all 1/s).
"""

from __future__ import annotations

import numpy as np

from .channels import ParallelModel, realize_channels
from .model import StateSpaceModel, validate_model
from .pfd import ResidueSet
from .spectrum import ComplexGroup, SpectrumClassification

#: Relative-unit parameters reproducing the reference coefficient set.
DC_DRIVE_PARAMS = {"J": 0.02, "R": 1.0, "c": 1.0, "L": 0.008, "Tc": 0.001}


def expand_dc_drive(
    J: float, R: float, c: float, L: float, Tc: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """State matrices of the drive from its physical parameters."""
    Tm = J * R / c**2
    Te = L / R
    a12 = 1.0
    a23 = 1.0 / Tm
    a32 = a33 = -1.0 / Te
    a34 = 1.0 / Te
    a44 = -1.0 / Tc
    b4 = -a44
    A = np.array(
        [
            [0.0, a12, 0.0, 0.0],
            [0.0, 0.0, a23, 0.0],
            [0.0, a32, a33, a34],
            [0.0, 0.0, 0.0, a44],
        ]
    )
    B = np.array([[0.0], [0.0], [0.0], [b4]])
    C = np.array([[1.0, 0.0, 0.0, 0.0]])
    D = np.array([[0.0]])
    return A, B, C, D


def dc_drive_model(params: dict | None = None) -> StateSpaceModel:
    p = dict(DC_DRIVE_PARAMS if params is None else params)
    return validate_model(*expand_dc_drive(p["J"], p["R"], p["c"], p["L"], p["Tc"]))


def dc_drive_document(name: str = "dc-drive") -> dict:
    """Model document using the physical-parameter shortcut."""
    return {"name": name, "dcDriveParams": dict(DC_DRIVE_PARAMS)}


def widened_sections(count: int = 64) -> ParallelModel:
    """A parallel model of ``count`` independent second-order sections.

    Deterministic distinct conjugate pairs with unit-ish residues; built
    directly as a spectrum plus residues (a transfer function of order
    2*count would be numerically meaningless to root), then realized through
    the regular channel machinery.  Intended as an embarrassingly parallel
    bench workload.
    """
    if count < 1:
        raise ValueError("section count must be >= 1")
    groups = []
    cplx_terms = []
    for k in range(count):
        re = -1.0 - 0.05 * k
        im = 2.0 + 0.125 * k
        groups.append(ComplexGroup(re=re, im=im, multiplicity=1))
        c1 = np.array([[0.0]])
        c0 = np.array([[1.0 + 0.01 * k]])
        cplx_terms.append(((c1, c0),))
    spectrum = SpectrumClassification(0, (), tuple(groups))
    residues = ResidueSet(
        feedthrough=np.zeros((1, 1)),
        integrator_terms=(),
        real_terms=(),
        complex_terms=tuple(cplx_terms),
    )
    return realize_channels(residues, spectrum)
