"""Spectral toolkit for a three-particle lattice Hamiltonian on a truncated Fock space.

The package is organised in layers:

``torus``       grids, quadrature and trigonometric polynomials on ``T^nu``
``model``       separable kernels, model specifications and square roots
``friedrichs``  fiber determinants, band edges and fiber eigenvalues
``spectrum``    essential spectrum and the invertibility margin
``faddeev``     the ``lambda = 1`` characterization of eigenvalues of ``H``
``oracle``      brute-force dense discretizations for verification
``modelfile``   the plain-text model file format
``cli``         the ``fockspec`` command
"""
from importlib import resources as _resources

from ._kernels import BACKEND
from .faddeev import (assemble_A, assemble_K, find_H_eigenvalues, mu, reconstruct_H_eigenvector,
                      scan_mu, t_eigenvalues)
from .friedrichs import (BandEdges, assemble_A0, band_edges, det_E_plus_A0, fiber_eigenvalues,
                         fiber_roots, separable_deltas)
from .model import (ModelSpec, SeparableKernel, cubic_cosine_model, decoupled_chain_model,
                    kernel_sqrt, random_chain_model, toy_chain_model, validate)
from .modelfile import ModelFileError, dump_model, load_model, parse_model
from .oracle import compare_channel, compare_faddeev, discretize_h, discretize_H
from .spectrum import a_invertibility_margin, essential_spectrum, three_particle_branch
from .torus import TorusGrid, TrigPoly, integrate, make_grid

__version__ = "0.1.0"


def data_path(name: str):
    """Path of a bundled model file, e.g. ``data_path("cubic_cosine.model")``."""
    return _resources.files(__name__) / "data" / name


__all__ = [
    "BACKEND", "BandEdges", "ModelFileError", "ModelSpec", "SeparableKernel", "TorusGrid",
    "TrigPoly", "a_invertibility_margin", "assemble_A", "assemble_A0", "assemble_K", "band_edges",
    "compare_channel", "compare_faddeev", "cubic_cosine_model", "data_path", "decoupled_chain_model",
    "det_E_plus_A0", "discretize_H", "discretize_h", "dump_model", "essential_spectrum",
    "fiber_eigenvalues", "fiber_roots", "find_H_eigenvalues", "integrate", "kernel_sqrt",
    "load_model", "make_grid", "mu", "parse_model", "random_chain_model",
    "reconstruct_H_eigenvector", "scan_mu", "separable_deltas", "t_eigenvalues",
    "three_particle_branch", "toy_chain_model", "validate",
]
