"""Line-of-sight EM channels from the dyadic Green's function.

Receivers are always ordered LUTs first (indices 0..K-1) and eavesdroppers
after them (K..K+Q-1). Channel matrices use that ordering everywhere.
"""

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .numerics import QuadratureGrid, gauss_legendre_grid

SPEED_OF_LIGHT = 3e8
FREE_SPACE_IMPEDANCE = 120 * np.pi
Y_HAT = (0.0, 1.0, 0.0)

_ARRAY_FIELDS = {
    "lut_positions": (3,),
    "eve_positions": (3,),
    "lut_polarizations": (3,),
    "eve_polarizations": (3,),
    "tx_polarization": (),
    "noise_powers_lut": (),
    "noise_powers_eve": (),
    "weights": (),
}


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Physical description of one CAPA downlink with eavesdroppers.

    ``current_unit`` is the current amplitude, in amperes, of one unit of
    the source-current variable. The default 1e-3 lets ``power_budget`` be
    given in mA^2 as in the usual parameter tables.
    """

    aperture_side_x: float
    aperture_side_y: float
    frequency: float
    lut_positions: np.ndarray
    eve_positions: np.ndarray
    noise_powers_lut: np.ndarray
    noise_powers_eve: np.ndarray
    weights: np.ndarray
    power_budget: float = 10.0
    impedance: float = FREE_SPACE_IMPEDANCE
    lut_polarizations: np.ndarray = None
    eve_polarizations: np.ndarray = None
    tx_polarization: np.ndarray = field(default_factory=lambda: np.array(Y_HAT))
    quadrature_order: int = 10
    current_unit: float = 1e-3

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)
        lut = np.asarray(self.lut_positions, dtype=float).reshape(-1, 3)
        eve = np.asarray(self.eve_positions, dtype=float).reshape(-1, 3)
        set_("lut_positions", lut)
        set_("eve_positions", eve)
        K, Q = len(lut), len(eve)
        if self.lut_polarizations is None:
            set_("lut_polarizations", np.tile(Y_HAT, (K, 1)))
        if self.eve_polarizations is None:
            set_("eve_polarizations", np.tile(Y_HAT, (Q, 1)))
        set_("lut_polarizations", np.asarray(self.lut_polarizations, float).reshape(-1, 3))
        set_("eve_polarizations", np.asarray(self.eve_polarizations, float).reshape(-1, 3))
        set_("tx_polarization", np.asarray(self.tx_polarization, float).reshape(3))
        set_("noise_powers_lut", _broadcast(self.noise_powers_lut, K, "noise_powers_lut"))
        set_("noise_powers_eve", _broadcast(self.noise_powers_eve, Q, "noise_powers_eve"))
        set_("weights", _broadcast(self.weights, K, "weights"))
        for arr in (lut, eve, self.lut_polarizations, self.eve_polarizations,
                    self.noise_powers_lut, self.noise_powers_eve, self.weights):
            arr.setflags(write=False)
        self._validate()

    def _validate(self):
        if self.num_luts < 1:
            raise ChannelError("need at least one LUT")
        if len(self.lut_polarizations) != self.num_luts:
            raise ChannelError("one polarization per LUT required")
        if len(self.eve_polarizations) != self.num_eves:
            raise ChannelError("one polarization per Eve required")
        pols = np.vstack([self.lut_polarizations, self.eve_polarizations,
                          self.tx_polarization[None, :]])
        if np.any(np.abs(np.linalg.norm(pols, axis=1) - 1.0) > 1e-12):
            raise ChannelError("polarization vectors must have unit norm")
        if np.any(self.receiver_positions[:, 2] == 0.0):
            raise ChannelError("receivers must lie off the aperture plane")
        if self.power_budget <= 0:
            raise ChannelError("power budget must be positive")
        if np.any(self.noise_powers_lut <= 0) or np.any(self.noise_powers_eve <= 0):
            raise ChannelError("noise powers must be positive")
        if np.any(self.weights < 0):
            raise ChannelError("weights must be non-negative")
        if min(self.aperture_side_x, self.aperture_side_y, self.frequency) <= 0:
            raise ChannelError("aperture sides and frequency must be positive")
        if self.quadrature_order < 1:
            raise ChannelError("quadrature order must be >= 1")

    @property
    def num_luts(self) -> int:
        return len(self.lut_positions)

    @property
    def num_eves(self) -> int:
        return len(self.eve_positions)

    @property
    def num_receivers(self) -> int:
        return self.num_luts + self.num_eves

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def aperture_area(self) -> float:
        return self.aperture_side_x * self.aperture_side_y

    @property
    def receiver_positions(self) -> np.ndarray:
        return np.vstack([self.lut_positions, self.eve_positions])

    @property
    def receiver_polarizations(self) -> np.ndarray:
        return np.vstack([self.lut_polarizations, self.eve_polarizations])

    @property
    def noise_powers(self) -> np.ndarray:
        return np.concatenate([self.noise_powers_lut, self.noise_powers_eve])

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ChannelError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "Scenario":
        data = json.loads(Path(path).read_text())
        data.pop("fp", None)
        return cls.from_dict(data)


def _broadcast(value, n, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    arr = arr.reshape(-1).copy()
    if len(arr) != n:
        raise ChannelError(f"{name} has length {len(arr)}, expected {n}")
    return arr


def green_dyadic(receiver, source, wavelength: float,
                 impedance: float = FREE_SPACE_IMPEDANCE) -> np.ndarray:
    """Free-space dyadic Green's function G(r, s) as a 3x3 complex matrix."""
    d = np.asarray(receiver, float) - np.asarray(source, float)
    dist = np.linalg.norm(d)
    if dist < 1e-12:
        raise ChannelError("coincident receiver and source points")
    pre = 1j * impedance * np.exp(-2j * np.pi * dist / wavelength) / (2 * wavelength * dist)
    return pre * (np.eye(3) - np.outer(d, d) / dist**2)


def _channel_on_points(receiver, pol_rx, pol_tx, points, wavelength, impedance):
    """u_rx^T G(r, s) u_tx for many source points at once."""
    d = receiver[None, :] - points
    dist = np.linalg.norm(d, axis=1)
    if np.any(dist < 1e-12):
        raise ChannelError("coincident receiver and source points")
    pre = 1j * impedance * np.exp(-2j * np.pi * dist / wavelength) / (2 * wavelength * dist)
    proj = pol_rx @ pol_tx - (d @ pol_rx) * (d @ pol_tx) / dist**2
    return pre * proj


def scalar_channel(scenario: Scenario, receiver_index: int, node) -> complex:
    """Channel from a source point to receiver ``receiver_index`` (0-based).

    Expressed per unit of the scenario's current variable, so it carries the
    ``current_unit`` factor.
    """
    if not 0 <= receiver_index < scenario.num_receivers:
        raise ChannelError(f"receiver index {receiver_index} out of range")
    node = np.asarray(node, float).reshape(1, 3)
    h = _channel_on_points(
        scenario.receiver_positions[receiver_index],
        scenario.receiver_polarizations[receiver_index],
        scenario.tx_polarization, node, scenario.wavelength, scenario.impedance,
    )
    return complex(h[0] * scenario.current_unit)


def channels_at(scenario: Scenario, points: np.ndarray) -> np.ndarray:
    """(K+Q, len(points)) matrix of channel values at 3-D source points."""
    points = np.asarray(points, float).reshape(-1, 3)
    rows = [
        _channel_on_points(r, u, scenario.tx_polarization, points,
                           scenario.wavelength, scenario.impedance)
        for r, u in zip(scenario.receiver_positions, scenario.receiver_polarizations)
    ]
    return np.array(rows) * scenario.current_unit


@dataclass(frozen=True)
class ChannelSamples:
    values: np.ndarray  # (K+Q, M*M)
    grid: QuadratureGrid


def aperture_grid(scenario: Scenario, order: int | None = None) -> QuadratureGrid:
    order = scenario.quadrature_order if order is None else order
    return gauss_legendre_grid(scenario.aperture_side_x / 2, scenario.aperture_side_y / 2, order)


def sample_channels(scenario: Scenario, order: int | None = None) -> ChannelSamples:
    grid = aperture_grid(scenario, order)
    values = channels_at(scenario, grid.points3d())
    if not np.all(np.isfinite(values)):
        raise ChannelError("non-finite channel sample")
    return ChannelSamples(values=values, grid=grid)


@dataclass(frozen=True)
class MimoChannelSet:
    antenna_positions: np.ndarray  # (N_ant, 3)
    channel_matrix: np.ndarray  # (N_ant, K+Q), column n -> receiver n
    effective_area: float


def mimo_antenna_positions(len_x: float, len_y: float, wavelength: float) -> np.ndarray:
    d = wavelength / 2
    nx, ny = math.ceil(len_x / d - 1e-9), math.ceil(len_y / d - 1e-9)
    xs = np.arange(nx) * d - len_x / 2
    ys = np.arange(ny) * d - len_y / 2
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])


def build_mimo_channels(scenario: Scenario) -> MimoChannelSet:
    """Half-wavelength point-antenna array on the same footprint as the CAPA."""
    lam = scenario.wavelength
    pos = mimo_antenna_positions(scenario.aperture_side_x, scenario.aperture_side_y, lam)
    area = lam**2 / (4 * np.pi)
    h = np.sqrt(area) * channels_at(scenario, pos)
    return MimoChannelSet(antenna_positions=pos, channel_matrix=h.T, effective_area=area)


def fourier_basis_count(len_x: float, len_y: float, wavelength: float) -> int:
    """Number of 2-D Fourier basis functions needed to cover the aperture."""
    if min(len_x, len_y, wavelength) <= 0:
        raise ChannelError("lengths must be positive")
    cx = math.ceil(len_x / wavelength - 1e-9)
    cy = math.ceil(len_y / wavelength - 1e-9)
    return (2 * cx + 1) * (2 * cy + 1)
