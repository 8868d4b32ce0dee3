"""Helpers shared by the experiment scripts."""

import argparse
import logging
import time
from pathlib import Path

from capa_secbeam.sim import SweepSpec, export_csv, export_traces_json, run_sweep, summarize


def parser(description, out_default):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=f"results/{out_default}")
    return ap


def run_and_save(args, kind, values, schemes, traces=False):
    logging.basicConfig(level=logging.WARNING)
    spec = SweepSpec(kind, values=tuple(values), trials=args.trials, base_seed=args.seed,
                     schemes=tuple(schemes))
    t0 = time.perf_counter()
    records = run_sweep(spec, jobs=args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    export_csv(records, out)
    if traces:
        export_traces_json(records, out.with_suffix(".json"))
    means = summarize(records)
    print(f"{kind} sweep, {args.trials} trials, {time.perf_counter() - t0:.0f} s -> {out}")
    header = "value".rjust(10) + "".join(s.rjust(11) for s in schemes)
    print(header)
    for v in values:
        row = f"{v:>10g}" + "".join(f"{means.get((s, v), float('nan')):11.4f}" for s in schemes)
        print(row)
    return records
