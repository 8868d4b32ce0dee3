"""Mean WSSR versus the number of legitimate users."""

from capa_secbeam.baselines import SCHEMES
from common import parser, run_and_save

if __name__ == "__main__":
    args = parser(__doc__, "num_luts.csv").parse_args()
    run_and_save(args, "num-luts", (4, 6, 8, 10, 12), SCHEMES)
