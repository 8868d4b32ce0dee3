"""Mean WSSR versus the number of eavesdroppers."""

from capa_secbeam.baselines import SCHEMES
from common import parser, run_and_save

if __name__ == "__main__":
    args = parser(__doc__, "num_eves.csv").parse_args()
    run_and_save(args, "num-eves", (1, 2, 3, 4, 5), SCHEMES)
