"""Scenario configuration, batch execution, and deterministic reports.

A report is a flat list of quantity rows so the CSV and JSON emissions
are literally the same table.  Numbers are printed with 12 significant
digits, which round-trips exactly through a double.  For a fixed
configuration and seed the data rows are byte-identical across runs and
across thread counts; wall time is the one field excluded from that
guarantee.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .chsh import (
    chsh_value,
    correlator,
    hypothesis_comparison,
    local_deterministic_bound,
    optimize_settings,
    sample_inequality,
)
from .errors import ConfigError
from .hilbert import (
    CompositeSpace,
    DichotomicObservable,
    PureState,
    coherence_norm,
    partial_trace,
    purity,
)
from .measurement import (
    CollapseHypothesis,
    PointerCoupling,
    born_probabilities,
    couple_pointer,
    dephase,
    improper_mixture,
)
from .scenarios import (
    COUNTEREXAMPLE_ORDER,
    PROIETTI_ORDER,
    SINGLET_ORDER,
    bell_singlet,
    counterexample_frequencies,
    counterexample_probability,
    expected_final_state,
    proietti_scenario,
)

ENV_OUT_DIR = "WFSIM_OUT_DIR"

SCENARIOS = ("proietti", "counterexample", "pointer_basic", "bell_singlet")

_DEFAULT_HYPOTHESES = {
    "proietti": ("unitary_only", "friend_dephasing"),
    "counterexample": ("unitary_only", "subjective_collapse"),
    "pointer_basic": (),
    "bell_singlet": (),
}

_COUNTEREXAMPLE_ALLOWED = {"unitary_only", "subjective_collapse"}

CSV_COLUMNS = (
    "scenario",
    "hypothesis",
    "quantity",
    "exact_value",
    "estimate",
    "std_error",
    "shots",
    "seed",
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated description of one batch run."""

    scenario: str = "proietti"
    hypotheses: tuple[str, ...] | None = None
    shots: int = 0
    seed: int = 0
    grid_step: float = math.pi / 64
    output_format: str = "csv"
    output_path: str | None = None
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; known: {', '.join(SCENARIOS)}"
            )
        if self.hypotheses is None:
            object.__setattr__(
                self, "hypotheses", _DEFAULT_HYPOTHESES[self.scenario]
            )
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        for text in self.hypotheses:
            try:
                hyp = CollapseHypothesis.parse(text)
            except Exception as exc:
                raise ConfigError(f"bad hypotheses entry {text!r}: {exc}") from exc
            if (
                self.scenario == "counterexample"
                and hyp.variant not in _COUNTEREXAMPLE_ALLOWED
            ):
                raise ConfigError(
                    f"hypotheses for the counterexample scenario must come from "
                    f"{sorted(_COUNTEREXAMPLE_ALLOWED)}, got {hyp.name!r}"
                )
        if self.scenario in ("pointer_basic", "bell_singlet") and self.hypotheses:
            raise ConfigError(
                f"hypotheses are not accepted by scenario {self.scenario!r}"
            )
        if not isinstance(self.shots, int) or self.shots < 0:
            raise ConfigError(f"shots must be a non-negative integer, got {self.shots!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not 0.0 < float(self.grid_step) <= math.pi / 8 + 1e-12:
            raise ConfigError(
                f"grid_step must lie in (0, pi/8], got {self.grid_step!r}"
            )
        object.__setattr__(self, "grid_step", float(self.grid_step))
        if self.output_format not in ("csv", "json"):
            raise ConfigError(
                f"output_format must be 'csv' or 'json', got {self.output_format!r}"
            )
        if self.threads is not None and (
            not isinstance(self.threads, int) or self.threads < 1
        ):
            raise ConfigError(f"threads must be a positive integer, got {self.threads!r}")

    _KEYS = (
        "scenario",
        "hypotheses",
        "shots",
        "seed",
        "grid_step",
        "output_format",
        "output_path",
        "threads",
    )

    @classmethod
    def from_mapping(
        cls,
        mapping: dict,
        lines: dict[str, int] | None = None,
        source: str = "<config>",
    ) -> "ScenarioConfig":
        """Build and validate a config, pointing errors at source lines."""

        def fail(key: str, message: str) -> None:
            line = (lines or {}).get(key)
            where = f"{source}:{line}" if line else source
            raise ConfigError(f"{where}: {message}")

        for key in mapping:
            if key not in cls._KEYS:
                fail(key, f"unknown configuration key {key!r}")

        kwargs: dict = {}
        if "scenario" in mapping:
            kwargs["scenario"] = str(mapping["scenario"])
        if "hypotheses" in mapping and mapping["hypotheses"] is not None:
            raw = mapping["hypotheses"]
            if isinstance(raw, str):
                raw = [h.strip() for h in raw.split(",") if h.strip()]
            if not isinstance(raw, (list, tuple)):
                fail("hypotheses", "hypotheses must be a list of names")
            kwargs["hypotheses"] = tuple(str(h) for h in raw)
        for key in ("shots", "seed", "threads"):
            if key in mapping and mapping[key] is not None:
                value = mapping[key]
                if isinstance(value, bool) or not isinstance(value, int):
                    fail(key, f"{key} must be an integer, got {value!r}")
                kwargs[key] = value
        if "grid_step" in mapping and mapping["grid_step"] is not None:
            value = mapping["grid_step"]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                fail("grid_step", f"grid_step must be a number, got {value!r}")
            kwargs["grid_step"] = float(value)
        if "output_format" in mapping and mapping["output_format"] is not None:
            kwargs["output_format"] = str(mapping["output_format"])
        if "output_path" in mapping and mapping["output_path"] is not None:
            kwargs["output_path"] = str(mapping["output_path"])

        try:
            return cls(**kwargs)
        except ConfigError as exc:
            # Re-point a field-level failure at its source line when known.
            # The failing field is whichever key name the message mentions
            # first; validation messages always lead with the field name.
            message = str(exc)
            hits = [
                (message.find(key), key)
                for key in cls._KEYS
                if key in message and (lines or {}).get(key)
            ]
            if hits:
                _, key = min(hits)
                raise ConfigError(f"{source}:{lines[key]}: {message}") from None
            raise ConfigError(f"{source}: {message}") from None

    def echo(self) -> dict:
        """JSON-ready copy of the configuration as given."""
        return {
            "scenario": self.scenario,
            "hypotheses": list(self.hypotheses),
            "shots": self.shots,
            "seed": self.seed,
            "grid_step": _round12(self.grid_step),
            "output_format": self.output_format,
            "output_path": self.output_path,
            "threads": self.threads,
        }


@dataclass(frozen=True)
class ReportRow:
    """One audited quantity; estimate columns filled only when sampled."""

    scenario: str
    hypothesis: str
    quantity: str
    exact_value: float | None
    estimate: float | None = None
    std_error: float | None = None
    shots: int | None = None


@dataclass(frozen=True)
class RunReport:
    """Everything a run produced, ready for emission."""

    config: ScenarioConfig
    factor_order: tuple[str, ...]
    rows: tuple[ReportRow, ...]
    wall_time_s: float
    version: str


_FACTOR_ORDERS = {
    "proietti": PROIETTI_ORDER,
    "counterexample": COUNTEREXAMPLE_ORDER,
    "pointer_basic": ("s", "p"),
    "bell_singlet": SINGLET_ORDER,
}

_CORRELATOR_NAMES = ("correlator_e11", "correlator_e10", "correlator_e01", "correlator_e00")


def _binomial_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(0.0, p_hat * (1.0 - p_hat)) / n)


def _run_pointer_basic(config: ScenarioConfig, rng: np.random.Generator) -> list[ReportRow]:
    system = PureState(
        CompositeSpace.qubits("s"), np.array([1.0, 1.0]) / math.sqrt(2.0)
    )
    coupled = couple_pointer(system, PointerCoupling("s", "p"))
    rho = coupled.density()
    reduced = improper_mixture(coupled, ("s",))
    dephased = dephase(rho, ("s", "p"))
    probs = born_probabilities(coupled, ("s",))

    def row(quantity: str, value: float, estimate=None, std=None, shots=None):
        return ReportRow(config.scenario, "", quantity, value, estimate, std, shots)

    rows = [
        row("composite_purity", purity(rho)),
        row("reduced_purity", purity(reduced)),
        row("coherence_composite", coherence_norm(rho)),
        row("coherence_dephased", coherence_norm(dephased)),
    ]
    if config.shots > 0:
        counts = rng.multinomial(config.shots, probs)
        for k in range(probs.size):
            p_hat = counts[k] / config.shots
            rows.append(
                row(
                    f"born_p{k}",
                    float(probs[k]),
                    p_hat,
                    _binomial_se(p_hat, config.shots),
                    config.shots,
                )
            )
    else:
        for k in range(probs.size):
            rows.append(row(f"born_p{k}", float(probs[k])))
    return rows


def _run_bell_singlet(config: ScenarioConfig, rng: np.random.Generator) -> list[ReportRow]:
    psi = bell_singlet()
    rho = psi.density()
    reduced_e1 = partial_trace(rho, ("e1",))
    reduced_e2 = partial_trace(rho, ("e2",))
    zz = correlator(
        psi,
        DichotomicObservable.pauli("z", "e1"),
        DichotomicObservable.pauli("z", "e2"),
    )
    settings, s_max = optimize_settings(
        psi, config.grid_step, threads=config.threads
    )
    exact = chsh_value(psi, settings)

    def row(quantity, value, estimate=None, std=None, shots=None):
        return ReportRow(config.scenario, "", quantity, value, estimate, std, shots)

    rows = [
        row("composite_purity", purity(rho)),
        row("reduced_purity_e1", purity(reduced_e1)),
        row("reduced_purity_e2", purity(reduced_e2)),
        row("coherence_reduced_e1", coherence_norm(reduced_e1)),
        row("sigma_zz_correlator", zz),
        row("s_max", s_max),
    ]
    if config.shots > 0:
        sampled = sample_inequality(
            psi, settings, config.shots, rng.spawn(1)[0], config.threads
        )
        rows.append(
            row("s_at_optimal", exact.s_value, sampled.s_value, sampled.std_error, config.shots)
        )
        for name, ex, est in zip(_CORRELATOR_NAMES, exact.correlators, sampled.correlators):
            rows.append(row(name, ex, est, None, config.shots))
    else:
        rows.append(row("s_at_optimal", exact.s_value))
        for name, ex in zip(_CORRELATOR_NAMES, exact.correlators):
            rows.append(row(name, ex))
    return rows


def _run_proietti(config: ScenarioConfig, rng: np.random.Generator) -> list[ReportRow]:
    scenario = proietti_scenario()
    final = scenario.final.state
    rho_final = final.density()
    reference = expected_final_state()
    deviation = float(np.max(np.abs(final.amplitudes - reference.amplitudes)))
    herald_a, herald_b = scenario.herald_probabilities
    min_purity = min(
        purity(partial_trace(rho_final, (label,)))
        for label in rho_final.space.labels
    )

    rows = [
        ReportRow(config.scenario, "", "herald_probability_side_a", herald_a),
        ReportRow(config.scenario, "", "herald_probability_side_b", herald_b),
        ReportRow(
            config.scenario,
            "",
            "herald_probability_chained",
            scenario.chained_herald_probability,
        ),
        ReportRow(config.scenario, "", "final_vs_reference_error", deviation),
        ReportRow(config.scenario, "", "final_composite_purity", purity(rho_final)),
        ReportRow(config.scenario, "", "min_single_factor_purity", min_purity),
        ReportRow(
            config.scenario, "", "local_deterministic_bound", local_deterministic_bound()
        ),
    ]

    results = hypothesis_comparison(
        scenario,
        config.hypotheses,
        settings=None,
        shots=config.shots,
        rng=rng if config.shots > 0 else None,
        grid_step=config.grid_step,
        threads=config.threads,
    )
    for res in results:
        name = res.hypothesis.name
        rows.append(ReportRow(config.scenario, name, "s_max", res.s_max))
        if res.exact:
            rows.append(ReportRow(config.scenario, name, "s_at_witness_settings", res.s_value))
            for qname, ex in zip(_CORRELATOR_NAMES, res.correlators):
                rows.append(ReportRow(config.scenario, name, qname, ex))
        else:
            rows.append(
                ReportRow(
                    config.scenario,
                    name,
                    "s_at_witness_settings",
                    res.exact_s,
                    res.s_value,
                    res.std_error,
                    res.shots,
                )
            )
            for qname, ex, est in zip(
                _CORRELATOR_NAMES, res.exact_correlators, res.correlators
            ):
                rows.append(
                    ReportRow(config.scenario, name, qname, ex, est, None, res.shots)
                )
        rows.append(
            ReportRow(
                config.scenario,
                name,
                "consistent_with_unitary",
                1.0 if res.consistent_with_data else 0.0,
            )
        )
    return rows


def _run_counterexample(config: ScenarioConfig, rng: np.random.Generator) -> list[ReportRow]:
    hypotheses = [CollapseHypothesis.parse(h) for h in config.hypotheses]
    streams = rng.spawn(len(hypotheses)) if config.shots > 0 else None
    rows = []
    for k, hyp in enumerate(hypotheses):
        exact_p = counterexample_probability(hyp)
        if config.shots > 0:
            freq = counterexample_frequencies(hyp, config.shots, streams[k])
            rows.append(
                ReportRow(
                    config.scenario,
                    hyp.name,
                    "photon_probability",
                    exact_p,
                    freq,
                    _binomial_se(freq, config.shots),
                    config.shots,
                )
            )
        else:
            rows.append(
                ReportRow(config.scenario, hyp.name, "photon_probability", exact_p)
            )
    return rows


_RUNNERS = {
    "pointer_basic": _run_pointer_basic,
    "bell_singlet": _run_bell_singlet,
    "proietti": _run_proietti,
    "counterexample": _run_counterexample,
}


def run(config: ScenarioConfig) -> RunReport:
    """Execute the configured scenario and collect its report rows.

    The master generator is ``numpy.random.default_rng(seed)`` (PCG64);
    every consumer derives child streams from it in a fixed documented
    order, so the rows depend only on the configuration and seed.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    rows = _RUNNERS[config.scenario](config, rng)
    elapsed = time.perf_counter() - started
    return RunReport(
        config=config,
        factor_order=_FACTOR_ORDERS[config.scenario],
        rows=tuple(rows),
        wall_time_s=elapsed,
        version=__version__,
    )


def _format12(value) -> str:
    if value is None:
        return ""
    return f"{float(value):.12g}"


def _round12(value):
    if value is None:
        return None
    return float(f"{float(value):.12g}")


def render_csv(report: RunReport) -> str:
    """The CSV text: header plus one line per row, 12 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow(
            [
                row.scenario,
                row.hypothesis,
                row.quantity,
                _format12(row.exact_value),
                _format12(row.estimate),
                _format12(row.std_error),
                "" if row.shots is None else str(row.shots),
                str(report.config.seed),
            ]
        )
    return buf.getvalue()


def render_json(report: RunReport) -> str:
    """The JSON text mirroring the CSV schema, one object per row.

    Numeric fields are rounded to 12 significant digits before encoding,
    so parsing the file recovers exactly the values the CSV prints.
    ``wall_time_s`` is informational and excluded from the determinism
    guarantee.
    """
    body = {
        "version": report.version,
        "factor_order": list(report.factor_order),
        "config": report.config.echo(),
        "rows": [
            {
                "scenario": row.scenario,
                "hypothesis": row.hypothesis,
                "quantity": row.quantity,
                "exact_value": _round12(row.exact_value),
                "estimate": _round12(row.estimate),
                "std_error": _round12(row.std_error),
                "shots": row.shots,
                "seed": report.config.seed,
            }
            for row in report.rows
        ],
        "wall_time_s": _round12(report.wall_time_s),
    }
    return json.dumps(body, indent=2) + "\n"


def emit(
    report: RunReport,
    output_format: str | None = None,
    path: str | os.PathLike | None = None,
) -> Path:
    """Write the report; returns the path written.

    Location precedence: explicit ``path`` argument, then the config's
    ``output_path``, then ``$WFSIM_OUT_DIR`` (with a default file name),
    then the working directory.  OSError propagates to the caller.
    """
    fmt = output_format or report.config.output_format
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output_format must be 'csv' or 'json', got {fmt!r}")
    if path is None:
        path = report.config.output_path
    if path is None:
        default_name = f"{report.config.scenario}_seed{report.config.seed}.{fmt}"
        out_dir = os.environ.get(ENV_OUT_DIR, "")
        path = os.path.join(out_dir, default_name) if out_dir else default_name
    out = Path(path)
    text = render_csv(report) if fmt == "csv" else render_json(report)
    out.write_text(text, encoding="utf-8")
    return out
