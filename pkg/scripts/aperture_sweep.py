"""Mean WSSR versus aperture area (square aperture)."""

from capa_secbeam.baselines import SCHEMES
from common import parser, run_and_save

if __name__ == "__main__":
    args = parser(__doc__, "aperture.csv").parse_args()
    run_and_save(args, "aperture", (0.1, 0.2, 0.3, 0.4, 0.5), SCHEMES)
