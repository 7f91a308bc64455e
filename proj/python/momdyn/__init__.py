"""Stochastic momentum methods on random least squares: simulation and Volterra predictions."""

from ._momdyn import (
    AlgoParams,
    LsqProblem,
    NumericalError,
    SpectralMeasure,
    analyze,
    defaults,
    esm_from_eigenvalues,
    generate_gaussian,
    kernel_norm,
    limiting_loss,
    load_csv,
    mp_measure,
    predict,
    run_cli,
    sdahb,
    sdana,
    sgd,
    shb,
    simulate,
    simulate_homogenized,
)

__all__ = [name for name in dir() if not name.startswith("_")]
