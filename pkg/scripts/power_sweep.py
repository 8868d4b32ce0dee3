"""Mean WSSR versus transmit power for CAPA (FP, ZF, MRT) and the MIMO baselines."""

from common import parser, run_and_save

POWERS = (1.0, 10.0, 100.0, 1e3, 1e4, 1e5)  # mA^2

if __name__ == "__main__":
    ap = parser(__doc__, "power.csv")
    ap.add_argument("--capa-only", action="store_true")
    args = ap.parse_args()
    schemes = ["capa-fp", "capa-zf", "capa-mrt"]
    if not args.capa_only:
        schemes += ["mimo-opt", "mimo-zf", "mimo-mrt"]
    run_and_save(args, "power", POWERS, schemes)
