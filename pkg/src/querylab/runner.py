import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml
from joblib import Parallel, delayed
from sklearn.linear_model import LinearRegression

from .adversary import adversary_report
from .baselines import cgt_classical, classical_wildcards, info_bounds
from .cgt_quantum import DEFAULT_MAX_CYCLES, CgtState, cgt_k1, cgt_solve
from .combinatorics import BitString
from .exceptions import (
    ConfigurationError,
    EmptyResults,
    ParameterError,
    PrecisionWarning,
    StorageError,
)
from .gram import (
    DEFAULT_PRECISION_BUDGET,
    genlower_bound,
    gram_spectrum,
    lower_bound_constant,
    spectrum_errors,
    upper_bound,
)
from .oracles import CgtOracle, QueryLedger, WildcardOracle, wildcards_via_cgt
from .wildcard_search import (
    AccountingMode,
    schedule_spectra,
    simulate_search,
    stage_schedule,
)

SCHEMA_VERSION = 1
FORMATS = ("csv", "json")
BRUTE_CHECK_TOLERANCE = 1e-8

# Stream ids keep per-trial generators of different commands apart.
COMMAND_STREAMS = {
    "gram": 0,
    "dk-sweep": 1,
    "sww": 2,
    "cgt": 3,
    "cgt-classical": 4,
    "adversary": 5,
    "reduce": 6,
    "all-acceptance": 7,
}

COMMAND_DEFAULTS = {
    "gram": {"n": 12},
    "dk-sweep": {"n_min": 2, "n_max": 64},
    "sww": {"n": 256},
    "cgt": {"n": 1000, "k": [8]},
    "cgt-classical": {"n": 1000, "k": [8]},
    "adversary": {"n": 4},
    "reduce": {"k": [4]},
    "all-acceptance": {"trials": 1000},
}

_INT_OPTIONS = {"n", "n_min", "n_max", "trials", "seed", "jobs", "max_cycles"}
_BOOL_OPTIONS = {"strict", "brute_check", "trace", "summary"}


def _silent_handler(message):
    """
    Simple "no-op" function to use as a default handler.
    """
    pass


## Configuration


@dataclass
class ExperimentConfig:
    """Resolved parameters of one subcommand run.

    Every emitted record embeds :meth:`to_dict` under ``config``.
    """

    command: str
    n: Optional[int] = None
    n_min: Optional[int] = None
    n_max: Optional[int] = None
    k: List[int] = field(default_factory=list)
    trials: int = 100
    seed: int = 0
    format: str = "json"
    out: Optional[str] = None
    strict: bool = False
    brute_check: bool = False
    trace: bool = False
    mode: str = AccountingMode.TRACE.value
    summary: bool = False
    jobs: int = 1
    precision_budget: float = DEFAULT_PRECISION_BUDGET
    max_cycles: int = DEFAULT_MAX_CYCLES

    def validate(self) -> "ExperimentConfig":
        """Checks ranges and enumerations.

        Raises:
            ConfigurationError: On the first invalid value.
        """
        if self.command not in COMMAND_STREAMS:
            raise ConfigurationError("command", f"unknown command '{self.command}'")
        if self.trials < 1:
            raise ConfigurationError("trials", "must be at least 1")
        if self.seed < 0:
            raise ConfigurationError("seed", "must be nonnegative")
        if self.format not in FORMATS:
            raise ConfigurationError("format", f"must be one of {', '.join(FORMATS)}")
        if self.mode not in {m.value for m in AccountingMode}:
            raise ConfigurationError("mode", "must be 'trace' or 'ledger'")
        if self.jobs < 1:
            raise ConfigurationError("jobs", "must be at least 1")
        if not self.precision_budget > 0:
            raise ConfigurationError("precision_budget", "must be positive")
        if self.max_cycles < 1:
            raise ConfigurationError("max_cycles", "must be at least 1")
        if (
            self.n_min is not None
            and self.n_max is not None
            and self.n_min > self.n_max
        ):
            raise ConfigurationError("n_min", "must not exceed n_max")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def settings(self) -> dict:
        """The embedded config: every parameter except the output path."""
        values = self.to_dict()
        del values["out"]
        return values


_FILE_OPTIONS = {f.name for f in fields(ExperimentConfig)} - {"command"}


def load_config(config_path: str) -> dict:
    """
    Reads an experiment config file (YAML or JSON) into option overrides.

    Keys may use dashes or underscores (``n-min`` or ``n_min``).

    Args:
        config_path (str): Path to the config file.

    Returns:
        dict: Option names mapped to their values.

    Raises:
        ConfigurationError: If the file cannot be read or parsed, is not a
            mapping, or names an unknown option.
    """
    try:
        with open(config_path, "r") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigurationError("config", f"cannot read '{config_path}' ({e})")
    except yaml.YAMLError as e:
        raise ConfigurationError(
            "config", f"'{config_path}' is not valid YAML or JSON ({e})"
        )

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError("config", "must map option names to values")

    options = {}
    for key, value in data.items():
        name = str(key).replace("-", "_")
        if name not in _FILE_OPTIONS:
            raise ConfigurationError(str(key), "unknown option")
        options[name] = value
    return options


def _coerce(name: str, value):
    try:
        if value is None:
            return None
        if name == "k":
            values = value if isinstance(value, (list, tuple)) else [value]
            return [int(v) for v in values]
        if name in _INT_OPTIONS:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(value)
            return int(value)
        if name in _BOOL_OPTIONS:
            if not isinstance(value, bool):
                raise ValueError(value)
            return value
        if name == "precision_budget":
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigurationError(name, f"invalid value {value!r}")


def resolve_config(
    command: str, config_path: Optional[str] = None, **overrides
) -> ExperimentConfig:
    """
    Merges per-command defaults, an optional config file and explicit flags.

    Flags win over the file and the file wins over the defaults. A flag
    counts as given when it is not ``None``, not an empty list and not
    ``False``.

    Raises:
        ConfigurationError: On unknown commands or options and invalid values.
    """
    if command not in COMMAND_STREAMS:
        raise ConfigurationError("command", f"unknown command '{command}'")
    values = dict(COMMAND_DEFAULTS[command])
    if config_path:
        values.update(load_config(config_path))
    for name, value in overrides.items():
        if name not in _FILE_OPTIONS:
            raise ConfigurationError(name, "unknown option")
        if value is None or value is False or (isinstance(value, list) and not value):
            continue
        values[name] = value
    resolved = {name: _coerce(name, value) for name, value in values.items()}
    return ExperimentConfig(command=command, **resolved).validate()


## Seeds and trials


def trial_rng(seed: int, stream: Sequence[int], index: int) -> np.random.Generator:
    """Generator for one trial, keyed by ``(seed, stream, index)``.

    Adding trials or sweep points never changes the streams of earlier ones.
    """
    key = tuple(int(s) for s in stream) + (int(index),)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def run_trials(trial: Callable[[int], dict], count: int, jobs: int = 1) -> List[dict]:
    """Runs ``trial(index)`` for every index, fanning out with joblib when ``jobs > 1``.

    Results come back ordered by trial index.
    """
    if jobs > 1 and count > 1:
        return Parallel(n_jobs=jobs)(delayed(trial)(index) for index in range(count))
    return [trial(index) for index in range(count)]


@dataclass(frozen=True)
class TrialStats:
    """Mean and spread of a query-count sample.

    Attributes:
        count (int): Number of samples.
        mean (float): Sample mean.
        std_dev (float): Sample standard deviation (0 for one sample).
        ci95_halfwidth (float): ``1.96 std_dev / sqrt(count)``.
    """

    count: int
    mean: float
    std_dev: float
    ci95_halfwidth: float

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "TrialStats":
        values = np.asarray(samples, dtype=float)
        if values.size == 0:
            raise ParameterError("samples", [], "must not be empty")
        std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        return cls(
            count=int(values.size),
            mean=float(values.mean()),
            std_dev=std,
            ci95_halfwidth=1.96 * std / math.sqrt(values.size),
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Envelope:
    """Fit of ``y ~ C x`` through the origin and the worst ratio ``max y/x``."""

    constant: float
    max_ratio: float

    def to_dict(self) -> dict:
        return {"C": self.constant, "max_ratio": self.max_ratio}


def fit_envelope(xs: Sequence[float], ys: Sequence[float]) -> Envelope:
    """Least-squares constant ``C`` with ``y ~ C x``.

    Raises:
        ParameterError: If the inputs are empty, misaligned or ``x <= 0``.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size == 0 or x.shape != y.shape:
        raise ParameterError("xs", x.size, "must be nonempty and aligned with ys")
    if np.any(x <= 0):
        raise ParameterError("xs", x.tolist(), "must be positive")
    model = LinearRegression(fit_intercept=False).fit(x.reshape(-1, 1), y)
    return Envelope(constant=float(model.coef_[0]), max_ratio=float(np.max(y / x)))


def _ledger(traced: bool, trace_handler) -> QueryLedger:
    return QueryLedger.traced(trace_handler) if traced else QueryLedger()


def _require(config: ExperimentConfig, name: str) -> int:
    value = getattr(config, name)
    if value is None:
        raise ParameterError(name, None, f"is required by '{config.command}'")
    return value


def _jobs(config: ExperimentConfig) -> int:
    # trace lines go to a handler in this process
    return 1 if config.trace else config.jobs


def _summarize(
    rows: List[dict],
    keys: Tuple[str, ...],
    scale: Callable[..., float],
    value: str = "queries",
) -> List[dict]:
    """One aggregate row per sweep point, with an envelope fit across points."""
    groups: Dict[tuple, List[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[key] for key in keys), []).append(row)

    summary = []
    for point, group in groups.items():
        stats = TrialStats.from_samples([r[value] for r in group])
        normalizer = scale(*point)
        summary.append(
            {
                **dict(zip(keys, point)),
                "trials": len(group),
                "recovered": sum(bool(r["recovered"]) for r in group),
                **stats.to_dict(),
                "normalizer": normalizer,
                "ratio": stats.mean / normalizer if normalizer > 0 else None,
            }
        )

    scored = [row for row in summary if row["normalizer"] > 0]
    if scored:
        envelope = fit_envelope(
            [row["normalizer"] for row in scored], [row["mean"] for row in scored]
        ).to_dict()
        for row in summary:
            row["envelope"] = envelope
    return summary


## Experiments


def _gram(config: ExperimentConfig, handler, trace_handler) -> List[dict]:
    n = _require(config, "n")
    rows = []
    for k in config.k or [n - math.ceil(math.sqrt(n))]:
        spectrum = gram_spectrum(n, k, config.precision_budget)
        row = spectrum.to_dict()
        row["D_agree"] = math.isclose(
            row["D_direct"], row["D_plancherel"], rel_tol=1e-6, abs_tol=1e-12
        )
        if config.brute_check:
            errors = spectrum_errors(spectrum)
            row["brute_check"] = {
                **errors,
                "agrees": max(errors.values()) <= BRUTE_CHECK_TOLERANCE,
            }
        handler(f"gram n={n} k={k}: D={row['D_direct']:.6g}")
        rows.append(row)
    return rows


def _dk_sweep(config: ExperimentConfig, handler, trace_handler) -> List[dict]:
    n_min = config.n_min if config.n_min is not None else _require(config, "n")
    n_max = config.n_max if config.n_max is not None else n_min
    if n_min < 1:
        raise ParameterError("n_min", n_min, "must be at least 1")
    rows = []
    for n in range(n_min, n_max + 1):
        k = n - math.ceil(math.sqrt(n))
        spectrum = gram_spectrum(n, k, config.precision_budget)
        record = spectrum.to_dict()
        rows.append(
            {
                "n": n,
                "k": k,
                "a": (n - k) / math.sqrt(n),
                "D_direct": record["D_direct"],
                "D_plancherel": record["D_plancherel"],
                "p_success": record["p_success"],
                "genlower": genlower_bound(n, k),
                "upper": upper_bound(n, k),
                "c": lower_bound_constant(n, k),
                "flagged": spectrum.flagged,
                "tail_mass": spectrum.tail_mass,
            }
        )
    handler(f"dk-sweep evaluated n={n_min}..{n_max}")
    return rows


def _sweep_sizes(config: ExperimentConfig) -> List[int]:
    """``n`` alone, or ``n_min`` doubled up to ``n_max``."""
    if config.n_min is None or config.n_max is None:
        return [_require(config, "n")]
    if config.n_min < 1:
        raise ParameterError("n_min", config.n_min, "must be at least 1")
    sizes, n = [], config.n_min
    while n <= config.n_max:
        sizes.append(n)
        n *= 2
    return sizes


def _sww_trial(n, mode, spectra, seed, stream, traced, trace_handler, index) -> dict:
    rng = trial_rng(seed, stream, index)
    x = BitString.random(n, rng)
    ledger = _ledger(traced, trace_handler)
    outcomes = []
    found = simulate_search(
        WildcardOracle(x, ledger),
        n,
        rng,
        mode=mode,
        spectra=spectra,
        on_stage=outcomes.append,
    )
    return {
        "n": n,
        "trial": index,
        "queries": ledger.total,
        "queries_by_kind": ledger.as_dict(),
        "recovered": found == x,
        "n0": outcomes[0].window,
        "stage0_queries": outcomes[0].queries_charged,
        "stages": len(outcomes) - 1,
        "stage_errors": [o.errors_sampled for o in outcomes[1:]],
    }


def _sww(config: ExperimentConfig, handler, trace_handler) -> List[dict]:
    rows, flagged = [], {}
    for n in _sweep_sizes(config):
        spectra = schedule_spectra(stage_schedule(n), config.precision_budget)
        # cached spectra do not warn again, so the flag rides on the rows
        flagged[n] = any(spectrum.flagged for spectrum in spectra.values())
        trial = partial(
            _sww_trial,
            n,
            AccountingMode(config.mode),
            spectra,
            config.seed,
            (COMMAND_STREAMS["sww"], n),
            config.trace,
            trace_handler,
        )
        batch = run_trials(trial, config.trials, _jobs(config))
        for row in batch:
            row["flagged"] = flagged[n]
        rows.extend(batch)
        handler(f"sww n={n}: {config.trials} trials")
    if config.summary:
        rows = _summarize(rows, ("n",), lambda n: math.sqrt(n) * math.log2(n))
        for row in rows:
            row["flagged"] = flagged[row["n"]]
    return rows


def _cgt_trial(n, k, max_cycles, seed, stream, traced, trace_handler, index) -> dict:
    rng = trial_rng(seed, stream, index)
    x = BitString.random_with_weight(n, k, rng)
    ledger = _ledger(traced, trace_handler)
    oracle = CgtOracle(x, ledger)
    state = CgtState(n, k)
    if k == 1:
        found = cgt_k1(oracle, rng)
    else:
        found = cgt_solve(oracle, n, k, rng, state=state, max_cycles=max_cycles)
    return {
        "n": n,
        "k": k,
        "trial": index,
        "queries": ledger.total,
        "queries_by_kind": ledger.as_dict(),
        "recovered": found == x,
        "cycles": state.cycles,
        "productive_cycles": state.productive_cycles,
    }


def _cgt(config: ExperimentConfig, handler, trace_handler) -> List[dict]:
    n = _require(config, "n")
    rows = []
    for k in config.k:
        trial = partial(
            _cgt_trial,
            n,
            k,
            config.max_cycles,
            config.seed,
            (COMMAND_STREAMS["cgt"], n, k),
            config.trace,
            trace_handler,
        )
        rows.extend(run_trials(trial, config.trials, _jobs(config)))
        handler(f"cgt n={n} k={k}: {config.trials} trials")
    if config.summary:
        return _summarize(rows, ("n", "k"), lambda n, k: k * math.log2(k + 1))
    return rows


def _classical_trial(n, k, seed, stream, traced, trace_handler, index) -> dict:
    rng = trial_rng(seed, stream, index)
    x = BitString.random_with_weight(n, k, rng)
    ledger = _ledger(traced, trace_handler)
    found = cgt_classical(CgtOracle(x, ledger), n, k)
    return {
        "n": n,
        "k": k,
        "trial": index,
        "queries": ledger.total,
        "recovered": found == x,
        "upper_bound": k * (math.ceil(math.log2(n)) + 1) + 1 if n > 0 else 1,
        "lower_bound": info_bounds(n, k).classical_cgt_lb,
    }


def _cgt_classical(config: ExperimentConfig, handler, trace_handler) -> List[dict]:
    n = _require(config, "n")
    rows = []
    for k in config.k:
        trial = partial(
            _classical_trial,
            n,
            k,
            config.seed,
            (COMMAND_STREAMS["cgt-classical"], n, k),
            config.trace,
            trace_handler,
        )
        rows.extend(run_trials(trial, config.trials, _jobs(config)))
        handler(f"cgt-classical n={n} k={k}: {config.trials} trials")
    if config.summary:
        return _summarize(
            rows, ("n", "k"), lambda n, k: info_bounds(n, k).classical_cgt_lb
        )
    return rows


def _adversary(config: ExperimentConfig, handler, trace_handler) -> List[dict]:
    n = _require(config, "n")
    report = adversary_report(n, jobs=config.jobs)
    handler(f"adversary n={n}: bound={report.bound:.12g}")
    return [report.to_dict()]


def _reduce_trial(k, max_cycles, seed, stream, traced, trace_handler, index) -> dict:
    rng = trial_rng(seed, stream, index)
    z = BitString.random(k, rng)

    classical = wildcards_via_cgt(z, ledger=_ledger(traced, trace_handler))
    classical_found = classical.decode(cgt_classical(classical.oracle, 2 * k, k))

    quantum = wildcards_via_cgt(z, ledger=_ledger(traced, trace_handler))
    h = cgt_solve(quantum.oracle, 2 * k, k, rng, max_cycles=max_cycles)
    quantum_found = quantum.decode(h)

    wildcard = wildcards_via_cgt(z, ledger=_ledger(traced, trace_handler))
    wildcard_found = ~classical_wildcards(wildcard, k)

    return {
        "k": k,
        "trial": index,
        "z": str(z),
        "recovered": classical_found == quantum_found == wildcard_found == z,
        "classical_queries": classical.ledger.total,
        "quantum_queries": quantum.ledger.total,
        "wildcard_queries": wildcard.ledger.total,
    }


def _reduce(config: ExperimentConfig, handler, trace_handler) -> List[dict]:
    rows = []
    for k in config.k:
        if k < 1:
            raise ParameterError("k", k, "must be at least 1")
        trial = partial(
            _reduce_trial,
            k,
            config.max_cycles,
            config.seed,
            (COMMAND_STREAMS["reduce"], k),
            config.trace,
            trace_handler,
        )
        rows.extend(run_trials(trial, config.trials, _jobs(config)))
        handler(f"reduce k={k}: {config.trials} trials")
    if config.summary:
        return _summarize(
            rows, ("k",), lambda k: k * math.log2(k + 1), value="quantum_queries"
        )
    return rows


def _all_acceptance(config: ExperimentConfig, handler, trace_handler) -> List[dict]:
    from .acceptance import run_acceptance

    return run_acceptance(config, handler)


EXPERIMENTS = {
    "gram": _gram,
    "dk-sweep": _dk_sweep,
    "sww": _sww,
    "cgt": _cgt,
    "cgt-classical": _cgt_classical,
    "adversary": _adversary,
    "reduce": _reduce,
    "all-acceptance": _all_acceptance,
}


@dataclass
class ExperimentResult:
    """Records of one run plus the precision alarms raised while producing them."""

    command: str
    records: List[dict]
    alarms: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """False when any acceptance record failed."""
        return all(record.get("passed", True) for record in self.records)

    def summary_line(self) -> str:
        line = f"{self.command}: {len(self.records)} record(s)"
        queries = [r["queries"] for r in self.records if "queries" in r]
        if queries:
            line += f", mean queries {np.mean(queries):.4g}"
        if self.command == "all-acceptance":
            passed = sum(bool(r["passed"]) for r in self.records)
            line += f", {passed}/{len(self.records)} criteria passed"
        if self.alarms:
            line += f", {len(self.alarms)} precision alarm(s)"
        return line


def run_experiment(
    config: ExperimentConfig, progress_handler=None, trace_handler=None
) -> ExperimentResult:
    """
    Runs the experiment named by ``config.command``.

    Args:
        config (ExperimentConfig): Resolved configuration.
        progress_handler (callable, optional): A function to call with
            progress messages. Defaults to a silent handler.
        trace_handler (callable, optional): Receives each oracle query as a
            JSON line when ``config.trace`` is set.

    Returns:
        ExperimentResult: Records tagged with the schema version and the
            resolved config, and the precision alarms raised.
    """
    handler = progress_handler or _silent_handler
    config.validate()
    experiment = EXPERIMENTS[config.command]

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PrecisionWarning)
        rows = experiment(config, handler, trace_handler)

    alarms = [
        str(w.message) for w in caught if issubclass(w.category, PrecisionWarning)
    ]
    for row in rows:
        if row.get("flagged"):
            point = " ".join(f"{key}={row[key]}" for key in ("n", "k") if key in row)
            alarms.append(f"{config.command} {point}: a spectrum exceeded the budget")
    alarms = list(dict.fromkeys(alarms))

    settings = config.settings()
    records = [
        {"schema": SCHEMA_VERSION, "command": config.command, **row, "config": settings}
        for row in rows
    ]
    return ExperimentResult(config.command, records, alarms)


## Emission


def _builtin(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def render(records: List[dict], format: str) -> str:
    """Encodes records as a JSON array or a flattened CSV table."""
    if format == "json":
        return json.dumps(records, indent=2, default=_builtin) + "\n"
    if format == "csv":
        # round-trip through JSON so numpy scalars become plain values
        plain = json.loads(json.dumps(records, default=_builtin))
        frame = pd.json_normalize(plain)
        for column in frame.columns:
            frame[column] = frame[column].map(
                lambda v: json.dumps(v) if isinstance(v, list) else v
            )
        return frame.to_csv(index=False, lineterminator="\n")
    raise ParameterError("format", format, f"must be one of {', '.join(FORMATS)}")


def emit(records: List[dict], format: str, path: Optional[str] = None) -> str:
    """
    Renders ``records`` and writes them to ``path`` when one is given.

    Args:
        records (list): Records from :func:`run_experiment`.
        format (str): ``csv`` or ``json``.
        path (str, optional): Output file; nothing is written when omitted.

    Returns:
        str: The rendered document.

    Raises:
        EmptyResults: If ``records`` is empty; no file is created.
        StorageError: If the file cannot be written.
    """
    if not records:
        raise EmptyResults(path)
    document = render(records, format)
    if path is not None:
        try:
            with open(path, "w", newline="") as f:
                f.write(document)
        except OSError as e:
            raise StorageError("write", path, e)
    return document
