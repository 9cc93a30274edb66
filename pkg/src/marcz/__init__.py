"""marcz: certified sampling discretization of L_p norms on finite-dimensional
function subspaces, via a preliminary random subsample followed by iterated
random halving with measured deviation targets."""

__version__ = "0.1.0"

from .certificates import DiscretizationCertificate, certify, discrete_norm
from .frames import (DirichletKernel, FrameReport, basis_invariance_check,
                     frame_constants, kernel_matrix, reproducing_check)
from .halving import SplitProposal, halve, propose_split, sign_sum_probability
from .kernels import BACKEND, HAVE_COMPILED
from .pipeline import (PipelineConfig, PipelineResult, run_mt1, run_mt2,
                       scaling_study, talagrand_rudelson_probe,
                       theoretical_budget)
from .schedules import (IterationSchedule, alpha_schedule,
                        cardinality_envelope, predict_final_m,
                        with_companions)
from .subspace import (Domain, OrthonormalSystem, build_domain, build_system,
                       christoffel, load_system, restrict_system, save_system)

__all__ = [
    "BACKEND",
    "DiscretizationCertificate",
    "DirichletKernel",
    "Domain",
    "FrameReport",
    "HAVE_COMPILED",
    "IterationSchedule",
    "OrthonormalSystem",
    "PipelineConfig",
    "PipelineResult",
    "SplitProposal",
    "alpha_schedule",
    "basis_invariance_check",
    "build_domain",
    "build_system",
    "cardinality_envelope",
    "certify",
    "christoffel",
    "discrete_norm",
    "frame_constants",
    "halve",
    "kernel_matrix",
    "load_system",
    "predict_final_m",
    "propose_split",
    "reproducing_check",
    "restrict_system",
    "run_mt1",
    "run_mt2",
    "save_system",
    "scaling_study",
    "sign_sum_probability",
    "talagrand_rudelson_probe",
    "theoretical_budget",
    "with_companions",
]
