"""Quantum annealing of the fully connected p-spin ferromagnet with an
antiferromagnetic transverse-fluctuation driver.

The package covers four layers of the analysis:

* :mod:`pspin_aff.sector` -- the total Hamiltonian and its constituent
  operators as banded symmetric matrices in the maximal-spin sector.
* :mod:`pspin_aff.meanfield` -- zero- and finite-temperature
  self-consistent equations, closed-form free energies, phase
  classification, and transition detection along parameter slices.
* :mod:`pspin_aff.phasediagram` -- full (s, lambda) phase diagrams with
  traced boundaries, and safety checks of annealing paths against
  first-order boundaries.
* :mod:`pspin_aff.spectrum` / :mod:`pspin_aff.anneal` -- exact low-lying
  spectra, gap-minimum scaling fits, and unitary Schrodinger evolution
  along annealing paths.

``pspin_aff.cli`` exposes every analysis as a reproducible command-line
subcommand.
"""

from pspin_aff.sector import (
    BandedSymmetricOperator,
    ModelParams,
    SectorBasis,
    assemble,
    build_h0,
    build_vaff,
    build_vtf,
)
from pspin_aff.meanfield import (
    INFINITE,
    Magnetization,
    PhaseLabel,
    SaddleSolution,
    SchedulePoint,
    Transition,
    classify_phase,
    detect_jump,
    enumerate_solutions,
    f_qp,
    f_qp2,
    free_energy,
    pinf_free_energies,
    solve_saddle,
)
from pspin_aff.phasediagram import AnnealPath, PhaseDiagram, path_is_safe, scan
from pspin_aff.spectrum import (
    GapCurve,
    GapMinimum,
    ScalingFit,
    find_local_minima,
    gap_curve,
    lowest_two,
    scaling_fit,
)
from pspin_aff.anneal import AnnealRun, compare_paths, evolve

__version__ = "0.1.0"

__all__ = [
    "AnnealPath",
    "AnnealRun",
    "BandedSymmetricOperator",
    "GapCurve",
    "GapMinimum",
    "INFINITE",
    "Magnetization",
    "ModelParams",
    "PhaseDiagram",
    "PhaseLabel",
    "SaddleSolution",
    "ScalingFit",
    "SchedulePoint",
    "SectorBasis",
    "Transition",
    "assemble",
    "build_h0",
    "build_vaff",
    "build_vtf",
    "classify_phase",
    "compare_paths",
    "detect_jump",
    "enumerate_solutions",
    "evolve",
    "f_qp",
    "f_qp2",
    "find_local_minima",
    "free_energy",
    "gap_curve",
    "lowest_two",
    "path_is_safe",
    "pinf_free_energies",
    "scaling_fit",
    "scan",
    "solve_saddle",
    "__version__",
]
