"""Per-iteration WSSR of the FP optimizer for several aperture sizes (traces in JSON)."""

import numpy as np

from common import parser, run_and_save

if __name__ == "__main__":
    ap = parser(__doc__, "convergence.csv")
    args = ap.parse_args()
    recs = run_and_save(args, "convergence", (0.1, 0.25, 0.5), ["capa-fp"], traces=True)
    for area in (0.1, 0.25, 0.5):
        traces = [r.trace for r in recs if r.sweep_value == area]
        n = max(len(t) for t in traces)
        padded = np.array([t + [t[-1]] * (n - len(t)) for t in traces])
        mean = padded.mean(axis=0)
        shown = ", ".join(f"{x:.3f}" for x in mean[:12])
        print(f"A={area:g} m^2: mean trace {shown}{' ...' if n > 12 else ''}")
