"""
pcsplit: prediction-correction splitting methods for separable convex programs.

Architecture Layers:
--------------------

1. **Model** (problem.py, matrices.py, subproblems.py):
   - Block functions, constraint sets, problems and their variational inequality
   - Dense kernels, SPD certificates, exact block subproblem solvers

2. **Calculus** (predictors.py, correction.py, certify.py):
   - The four predictors and their prediction matrices Q
   - Splits Qᵀ+Q = D + G, correction plans, structured correctors
   - Certificates, the contraction monitor, oracle reference solutions

3. **Driver** (solver.py, fixtures.py):
   - Scheme runners, stopping rule, traces and comparisons

4. **CLI Layer** (cli.py, __main__.py):
   - solve / trace / certify / compare / example, with the exit-code contract

The public API is loaded lazily, so `import pcsplit` stays cheap.
"""

from importlib import import_module

from pcsplit.__version__ import __version__

_lazy_imports: dict[str, str] = {
    'ProblemInstance': 'problem', 'Block': 'problem', 'Quadratic': 'problem', 'L1': 'problem',
    'Zero': 'problem', 'BoxIndicator': 'problem', 'Free': 'problem', 'Box': 'problem',
    'Sense': 'problem', 'PredictorKind': 'problem', 'kkt_residual': 'problem',
    'validate_problem': 'problem', 'load_problem': 'problem', 'parse_problem': 'problem',
    'spd_check': 'matrices',
    'solve_subproblem': 'subproblems', 'prox': 'subproblems',
    'predict_scprsm': 'predictors', 'predict_gs3': 'predictors', 'predict_multiblock': 'predictors',
    'split': 'correction', 'build_plan': 'correction', 'correct_dense': 'correction',
    'FromD': 'correction', 'FromG': 'correction', 'AlphaBlend': 'correction', 'Preset': 'correction',
    'monitor_step': 'certify', 'reference_solution': 'certify',
    'RunConfig': 'solver', 'SchemeName': 'solver', 'run': 'solver', 'compare': 'solver',
    'FIXTURES': 'fixtures',
}


def __getattr__(name: str):
    """Lazy import of the public API."""
    if name in _lazy_imports:
        value = getattr(import_module(f"pcsplit.{_lazy_imports[name]}"), name)
        globals()[name] = value
        return value
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")


# Keep __all__ in step with _lazy_imports; checked below.
__all__ = ['__version__',
    'ProblemInstance', 'Block', 'Quadratic', 'L1', 'Zero', 'BoxIndicator', 'Free', 'Box',  # type: ignore
    'Sense', 'PredictorKind', 'kkt_residual', 'validate_problem', 'load_problem',  # type: ignore
    'parse_problem', 'spd_check', 'solve_subproblem', 'prox',  # type: ignore
    'predict_scprsm', 'predict_gs3', 'predict_multiblock',  # type: ignore
    'split', 'build_plan', 'correct_dense', 'FromD', 'FromG', 'AlphaBlend', 'Preset',  # type: ignore
    'monitor_step', 'reference_solution',  # type: ignore
    'RunConfig', 'SchemeName', 'run', 'compare', 'FIXTURES',  # type: ignore
    ]

# Validate __all__ consistency at import time
_expected_all = set(_lazy_imports) | {'__version__'}
_actual_all = set(__all__)
if _expected_all != _actual_all:
    _missing = _expected_all - _actual_all
    _extra = _actual_all - _expected_all
    raise ImportError(
        f"__all__ inconsistency: "
        f"missing={list(_missing)}, unexpected_extra={list(_extra)}"
    )
