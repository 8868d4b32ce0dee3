"""Monte-Carlo sweeps over random receiver drops.

Receiver positions come from a Philox counter-based generator keyed by the
trial seed (``base_seed + trial_index``), so a trial reproduces on any
platform and independently of how trials are scheduled.
"""

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .baselines import SCHEMES, GramProvider, run_scheme
from .channel import Scenario
from .fp_bcd import FpConfig
from .zf import SingularGram

SWEEP_KINDS = ("power", "aperture", "num-luts", "num-eves", "convergence", "single")


@dataclass(frozen=True)
class ScenarioDefaults:
    """Everything needed to draw a random scenario."""

    aperture_area: float = 0.25
    frequency: float = 2.4e9
    num_luts: int = 8
    num_eves: int = 3
    power_budget: float = 10.0
    noise_power_lut: float = 5.6e-3
    noise_power_eve: float = 5.6e-3
    weight: float = 1.0
    quadrature_order: int = 10
    impedance: float = 120 * np.pi
    current_unit: float = 1e-3
    region_half_x: float = 5.0
    region_half_y: float = 5.0
    region_z_min: float = 15.0
    region_z_max: float = 30.0

    @classmethod
    def from_dict(cls, data: dict | None) -> "ScenarioDefaults":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario default keys: {sorted(unknown)}")
        return cls(**data)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) % 2**64))


def sample_positions(rng: np.random.Generator, n: int, d: ScenarioDefaults) -> np.ndarray:
    u = rng.random((n, 3))
    lo = np.array([-d.region_half_x, -d.region_half_y, d.region_z_min])
    hi = np.array([d.region_half_x, d.region_half_y, d.region_z_max])
    return lo + u * (hi - lo)


def sample_scenario(defaults: ScenarioDefaults, seed: int) -> Scenario:
    """Square aperture of the default area with LUTs and Eves dropped uniformly."""
    rng = _rng(seed)
    luts = sample_positions(rng, defaults.num_luts, defaults)
    eves = sample_positions(rng, defaults.num_eves, defaults)
    side = math.sqrt(defaults.aperture_area)
    return Scenario(
        aperture_side_x=side, aperture_side_y=side, frequency=defaults.frequency,
        lut_positions=luts, eve_positions=eves,
        noise_powers_lut=defaults.noise_power_lut, noise_powers_eve=defaults.noise_power_eve,
        weights=defaults.weight, power_budget=defaults.power_budget,
        impedance=defaults.impedance, quadrature_order=defaults.quadrature_order,
        current_unit=defaults.current_unit,
    )


_SWEEP_FIELD = {
    "power": "power_budget",
    "aperture": "aperture_area",
    "convergence": "aperture_area",
    "num-luts": "num_luts",
    "num-eves": "num_eves",
}


def apply_sweep_value(defaults: ScenarioDefaults, kind: str, value) -> ScenarioDefaults:
    if kind == "single":
        return defaults
    name = _SWEEP_FIELD[kind]
    if name in ("num_luts", "num_eves"):
        value = int(value)
    return replace(defaults, **{name: value})


@dataclass(frozen=True)
class SweepSpec:
    sweep_kind: str
    values: tuple = (None,)
    trials: int = 200
    base_seed: int = 0
    schemes: tuple = ("capa-fp", "capa-zf", "capa-mrt")
    defaults: ScenarioDefaults = field(default_factory=ScenarioDefaults)
    fp: FpConfig = field(default_factory=FpConfig)
    fixed_scenario: Scenario | None = None  # bypasses random drops (kind "single")

    def __post_init__(self):
        if self.sweep_kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.sweep_kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.values) == 0:
            raise ValueError("sweep needs at least one value")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValueError(f"unknown schemes {bad}")
        if self.sweep_kind == "convergence" and any(not s.endswith(("-fp", "-opt")) for s in self.schemes):
            raise ValueError("convergence sweeps only apply to optimized schemes")


@dataclass
class SweepRecord:
    scheme: str
    sweep_value: float
    trial_index: int
    seed: int
    wssr: float | None
    per_user_secrecy: list
    iterations: int | None = None
    wall_time_ms: float = 0.0
    trace: list = field(default_factory=list)
    error: str = ""


def _sort_key(r: SweepRecord):
    return (r.scheme, r.sweep_value, r.trial_index)


def _run_trial(spec: SweepSpec, trial: int) -> list:
    seed = spec.base_seed + trial
    records = []
    grams = {}
    for value in spec.values:
        defaults = apply_sweep_value(spec.defaults, spec.sweep_kind, value)
        if spec.fixed_scenario is not None:
            scenario = spec.fixed_scenario
            if spec.sweep_kind == "power":
                scenario = scenario.replace(power_budget=float(value))
        else:
            scenario = sample_scenario(defaults, seed)
        for scheme in spec.schemes:
            array = scheme.split("-")[0]
            # the Gram matrix does not depend on the power budget
            key = (array, value if spec.sweep_kind != "power" else None)
            shown = scenario.power_budget if spec.sweep_kind == "single" else value
            rec = SweepRecord(scheme=scheme, sweep_value=shown, trial_index=trial,
                              seed=seed, wssr=None, per_user_secrecy=[])
            t0 = time.perf_counter()
            try:
                if key not in grams:
                    grams[key] = GramProvider(array)(scenario)
                gram = grams[key].with_power(scenario.power_budget)
                _, report, state = run_scheme(scheme, scenario, spec.fp, gram)
                rec.wssr = report.wssr
                rec.per_user_secrecy = report.per_user_secrecy.tolist()
                if state is not None:
                    rec.iterations = state.iterations
                    if spec.sweep_kind == "convergence":
                        rec.trace = list(state.wssr_trace)
            except SingularGram as exc:
                rec.error = f"singular-gram: {exc}"
            rec.wall_time_ms = 1e3 * (time.perf_counter() - t0)
            records.append(rec)
    return records


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list:
    """Run every (value, trial, scheme) combination; output sorted by scheme, value, trial."""
    trials = range(spec.trials)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_trial, [spec] * spec.trials, trials))
    else:
        chunks = [_run_trial(spec, t) for t in trials]
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=_sort_key)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (list, tuple)):
        return ";".join(_fmt(v) for v in x)
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


CSV_FIELDS = [f.name for f in fields(SweepRecord)]


def export_csv(records, path, include_timing: bool = False) -> None:
    """Write records as CSV.

    Wall-clock timings are left out unless requested so that identical sweeps
    give byte-identical files.
    """
    if not records:
        raise ValueError("no records to export")
    names = [n for n in CSV_FIELDS if include_timing or n != "wall_time_ms"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for r in records:
            row = asdict(r)
            if r.error:
                row["wssr"] = None
            writer.writerow([_fmt(row[n]) for n in names])


def read_csv(path) -> list:
    """Parse a CSV written by :func:`export_csv` back into dictionaries."""
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def export_traces_json(records, path) -> None:
    out = [{"scheme": r.scheme, "sweep_value": r.sweep_value, "trial_index": r.trial_index,
            "trace": r.trace} for r in records if r.trace]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=1)


def summarize(records) -> dict:
    """Mean WSSR per (scheme, sweep value), skipping failed trials."""
    acc = {}
    for r in records:
        if r.wssr is not None:
            acc.setdefault((r.scheme, r.sweep_value), []).append(r.wssr)
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}
