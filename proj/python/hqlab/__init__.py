from ._core import (
    ConeViolation,
    ConsistencyError,
    DegenerateError,
    DomainError,
    Error,
    UsageError,
    cli,
    cn,
    concavity_quadratic,
    concavity_root,
    doubling,
    doubling_family_names,
    feasible_gap,
    in_gamma,
    kkt_oracle,
    lemma21,
    lemma22_min_margin,
    matrix_derivative,
    minimize,
    preset_names,
    qtilde,
    quotient_eval,
    run_suite,
    sample_gamma2,
    sigma,
    solve,
)

__all__ = [name for name in dir() if not name.startswith("_")]
