"""Measurement-based squeezing of single photons into coherent-state superpositions.

Modules:

* :mod:`~photonsqueeze.fock` - truncated Fock states and operators
* :mod:`~photonsqueeze.gates` - Gaussian unitaries, loss and input-state models
* :mod:`~photonsqueeze.squeezer` - the measurement-based squeezing gate
* :mod:`~photonsqueeze.phasespace` - Wigner functions and quadrature marginals
* :mod:`~photonsqueeze.tomography` - homodyne sampling and maximum likelihood
* :mod:`~photonsqueeze.metrics` - D, V, classical bounds, anticorrelation, CSS fit
* :mod:`~photonsqueeze.cli` - command-line pipelines
"""

__version__ = "0.1.0"
