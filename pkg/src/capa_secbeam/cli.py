"""capa-secbeam: run WSSR sweeps and write CSV.

    capa-secbeam power --values 1:1e5:6 --trials 50 --out power.csv
    capa-secbeam single --config scenario.json --schemes capa-fp,capa-zf
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import SCHEMES
from .channel import Scenario
from .fp_bcd import FpConfig
from .sim import (SWEEP_KINDS, ScenarioDefaults, SweepSpec, export_csv,
                  export_traces_json, run_sweep, summarize)

DEFAULT_VALUES = {
    "power": "1,10,100,1000,10000,100000",
    "aperture": "0.1,0.2,0.3,0.4,0.5",
    "convergence": "0.1,0.25,0.5",
    "num-luts": "2,4,6,8,10",
    "num-eves": "1,2,3,4,5",
    "single": "0",
}

log = logging.getLogger("capa_secbeam")


def parse_values(text: str, kind: str) -> tuple:
    """Comma list, or ``start:stop:count`` (geometric for power sweeps, linear otherwise)."""
    if ":" in text:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
        if kind == "power":
            vals = np.geomspace(start, stop, count)
        else:
            vals = np.linspace(start, stop, count)
    else:
        vals = [float(v) for v in text.split(",") if v.strip()]
    if kind in ("num-luts", "num-eves"):
        return tuple(int(round(v)) for v in vals)
    return tuple(float(v) for v in vals)


def load_config(path):
    """Split a JSON config into (defaults, fixed scenario or None, FpConfig)."""
    if path is None:
        return ScenarioDefaults(), None, FpConfig()
    data = json.loads(Path(path).read_text())
    fp = FpConfig.from_dict(data.pop("fp", None))
    if "lut_positions" in data:
        return ScenarioDefaults(), Scenario.from_dict(data), fp
    return ScenarioDefaults.from_dict(data), None, fp


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="capa-secbeam", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("sweep_kind", choices=SWEEP_KINDS)
    ap.add_argument("--config", help="JSON scenario defaults or a full scenario, optional 'fp' key")
    ap.add_argument("--out", default="sweep.csv", help="CSV output path")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0, help="base seed; trial t uses seed+t")
    ap.add_argument("--schemes", default="capa-fp,capa-zf,capa-mrt")
    ap.add_argument("--values", help="comma list or start:stop:count")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--traces", help="JSON path for FP convergence traces")
    ap.add_argument("--timing", action="store_true", help="include wall_time_ms column")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        defaults, fixed, fp = load_config(args.config)
        schemes = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
        kind = args.sweep_kind
        if kind == "convergence" and args.schemes == build_parser().get_default("schemes"):
            schemes = ("capa-fp",)
        values = parse_values(args.values or DEFAULT_VALUES[kind], kind)
        if fixed is not None and kind not in ("single", "power"):
            raise ValueError(f"a fixed scenario cannot be swept over {kind}")
        spec = SweepSpec(sweep_kind=kind, values=values, trials=args.trials,
                         base_seed=args.seed, schemes=schemes, defaults=defaults,
                         fp=fp, fixed_scenario=fixed)
    except (OSError, ValueError, TypeError) as exc:
        print(f"capa-secbeam: config error: {exc}", file=sys.stderr)
        return 2

    records = run_sweep(spec, jobs=args.jobs)
    try:
        export_csv(records, args.out, include_timing=args.timing)
        if args.traces:
            export_traces_json(records, args.traces)
    except OSError as exc:
        print(f"capa-secbeam: io error: {exc}", file=sys.stderr)
        return 3

    for (scheme, value), mean in summarize(records).items():
        print(f"{scheme:9s} {value:>12g}  mean WSSR {mean:.4f}")
    failed = sum(1 for r in records if r.error)
    if failed:
        print(f"{failed} record(s) failed; see the error column", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
