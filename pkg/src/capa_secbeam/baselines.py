"""MRT baseline and the discrete half-wavelength MIMO comparison schemes.

The MIMO array is handled by the same Gram-space solvers: any precoder
component orthogonal to the conjugate channel vectors only costs power, so
restricting precoders to that span loses nothing.
"""

from dataclasses import dataclass

import numpy as np

from .channel import MimoChannelSet, Scenario, build_mimo_channels
from .fp_bcd import FpConfig, init_mrt, run_bcd
from .gram import GramSystem, assemble_gram, evaluate_metrics, gram_from_vectors, scenario_gram
from .zf import run_zf

SCHEMES = ("capa-fp", "capa-zf", "capa-mrt", "mimo-opt", "mimo-zf", "mimo-mrt")


@dataclass(frozen=True)
class GramProvider:
    """Builds the Gram system of a scenario for either array type."""

    tag: str = "capa"

    def __post_init__(self):
        if self.tag not in ("capa", "mimo"):
            raise ValueError(f"unknown array type {self.tag!r}")

    def __call__(self, scenario: Scenario) -> GramSystem:
        if self.tag == "capa":
            return scenario_gram(scenario)
        return mimo_gram(build_mimo_channels(scenario), scenario.noise_powers,
                         scenario.weights, scenario.num_luts, scenario.power_budget)


def mimo_gram(mimo: MimoChannelSet, noise_powers, weights, num_luts: int,
              power_budget: float) -> GramSystem:
    """Gram of discrete channel vectors: H[n, k] = sum_a h_n(a) conj(h_k(a))."""
    raw = gram_from_vectors(mimo.channel_matrix.T)
    return assemble_gram(raw, noise_powers, weights, num_luts, power_budget)


def run_mrt(gram: GramSystem, power_budget: float | None = None, weights=None):
    beams = init_mrt(gram, power_budget)
    return beams, evaluate_metrics(gram, beams, weights)


def run_scheme(name: str, scenario: Scenario, config: FpConfig | None = None,
               gram: GramSystem | None = None):
    """Run one named scheme. Returns (beams, metrics, fp_state or None)."""
    if name not in SCHEMES:
        raise ValueError(f"unknown scheme {name!r}")
    array, method = name.split("-")
    if gram is None:
        gram = GramProvider(array)(scenario)
    if method in ("fp", "opt"):
        beams, state = run_bcd(gram, config=config)
        return beams, evaluate_metrics(gram, beams), state
    if method == "zf":
        beams, report = run_zf(gram)
        return beams, report, None
    beams, report = run_mrt(gram)
    return beams, report, None


def run_mimo_suite(scenario: Scenario, power_budget: float | None = None,
                   config: FpConfig | None = None) -> dict:
    if power_budget is not None:
        scenario = scenario.replace(power_budget=float(power_budget))
    gram = GramProvider("mimo")(scenario)
    return {name: run_scheme(name, scenario, config, gram)[1]
            for name in ("mimo-opt", "mimo-zf", "mimo-mrt")}
