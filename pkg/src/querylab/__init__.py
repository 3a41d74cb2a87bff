__version__ = "0.1.0"

from .combinatorics import BitString, krawtchouk, wht
from .gram import GramSpectrum, gram_spectrum, sqrt_gram_entry
from .oracles import (
    CgtOracle,
    QueryKind,
    QueryLedger,
    WildcardOracle,
    WildcardQuery,
    wildcards_via_cgt,
)
from .cgt_quantum import cgt_k1, cgt_solve
from .wildcard_search import AccountingMode, simulate_search, stage_schedule
from .baselines import cgt_classical, classical_wildcards, info_bounds
from .adversary import adversary_bound, adversary_report
from .runner import ExperimentConfig, ExperimentResult, resolve_config, run_experiment
from .exceptions import (
    QuerylabException,
    ParameterError,
    InternalConsistencyError,
    ContractViolation,
    TrialCapExceeded,
    ConfigurationError,
    EmptyResults,
    StorageError,
    PrecisionWarning,
)


def simulate(command: str, config_path: str = None, **options) -> ExperimentResult:
    """
    Runs one experiment the way the command line does, without emitting it.

    Args:
        command (str): One of ``gram``, ``dk-sweep``, ``sww``, ``cgt``,
            ``cgt-classical``, ``adversary``, ``reduce`` or ``all-acceptance``.
        config_path (str, optional): YAML or JSON file of option defaults.
        **options: Option overrides, named as in :class:`ExperimentConfig`.

    Returns:
        ExperimentResult: The records and any precision alarms.

    Example:
        >>> from querylab import simulate
        >>>
        >>> result = simulate("cgt", n=1000, k=[1], trials=100, seed=7)
        >>> result.summary_line()
        'cgt: 100 record(s), mean queries 1'
    """
    return run_experiment(resolve_config(command, config_path, **options))


__all__ = [
    "simulate",
    "BitString",
    "krawtchouk",
    "wht",
    "GramSpectrum",
    "gram_spectrum",
    "sqrt_gram_entry",
    "CgtOracle",
    "QueryKind",
    "QueryLedger",
    "WildcardOracle",
    "WildcardQuery",
    "wildcards_via_cgt",
    "cgt_k1",
    "cgt_solve",
    "AccountingMode",
    "simulate_search",
    "stage_schedule",
    "cgt_classical",
    "classical_wildcards",
    "info_bounds",
    "adversary_bound",
    "adversary_report",
    "ExperimentConfig",
    "ExperimentResult",
    "resolve_config",
    "run_experiment",
    "QuerylabException",
    "ParameterError",
    "InternalConsistencyError",
    "ContractViolation",
    "TrialCapExceeded",
    "ConfigurationError",
    "EmptyResults",
    "StorageError",
    "PrecisionWarning",
    "exceptions",
    "__version__",
]
