"""Static description of the ion chain: geometry, beams, light shifts, modes, timing.

Everything the compiler and the simulators need to know about the hardware
lives on :class:`DeviceModel`.  Devices are loaded from YAML files; the
packaged defaults for two- and three-ion chains are in ``ionbv/data``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import constants as sc
from scipy.optimize import minimize

from .yamlio import ConfigError, line_of, load_with_lines

YB171_MASS = 170.936323 * sc.atomic_mass
RAMAN_WAVELENGTH = 355e-9
# counter-propagating Raman beams
DEFAULT_WAVEVECTOR = 2 * (2 * np.pi / RAMAN_WAVELENGTH)


class UnstableChainError(ValueError):
    pass


# ----------------------------------------------------------------------------
# normal modes
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class MotionalMode:
    label: str                    # COM | rocking | other
    frequency: float              # angular, rad/s
    eigenvector: tuple
    lamb_dicke: tuple = ()
    nbar: float = 0.0
    heating_rate: float = 0.0     # quanta/s
    direction: str = "radial"

    def __post_init__(self):
        v = np.asarray(self.eigenvector, dtype=float)
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ValueError("mode eigenvector must have unit norm")
        if self.nbar < 0 or self.heating_rate < 0:
            raise ValueError("nbar and heating_rate must be non-negative")
        object.__setattr__(self, "eigenvector", tuple(float(x) for x in v))
        object.__setattr__(self, "lamb_dicke", tuple(float(x) for x in self.lamb_dicke))


def equilibrium_positions(ion_count: int) -> np.ndarray:
    """Dimensionless axial positions minimising harmonic + Coulomb energy.

    Positions are in units of ``(e² / 4πε₀ m ω_z²)^(1/3)``.
    """
    if ion_count == 1:
        return np.zeros(1)

    def energy(u):
        d = np.abs(u[:, None] - u[None, :])
        iu = np.triu_indices(ion_count, 1)
        return 0.5 * np.sum(u ** 2) + np.sum(1.0 / d[iu])

    def grad(u):
        diff = u[:, None] - u[None, :]
        np.fill_diagonal(diff, np.inf)
        return u - np.sum(np.sign(diff) / diff ** 2, axis=1)

    u0 = np.linspace(-1, 1, ion_count) * ion_count ** 0.56
    res = minimize(energy, u0, jac=grad, method="BFGS", options={"gtol": 1e-13})
    return np.sort(res.x)


def _coulomb_terms(u):
    diff = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(diff, np.inf)
    return 1.0 / diff ** 3


def length_scale(axial_freq: float, ion_mass: float = YB171_MASS) -> float:
    """Characteristic ion spacing scale in metres (``axial_freq`` angular)."""
    k = sc.e ** 2 / (4 * np.pi * sc.epsilon_0)
    return (k / (ion_mass * axial_freq ** 2)) ** (1 / 3)


def normal_modes(ion_count, axial_freq, radial_freq, direction="both"):
    """Axial and/or radial normal modes of a linear chain.

    Frequencies are angular.  Radial modes are sorted highest first, so the
    first one is the COM mode at ``radial_freq`` and the second the rocking
    mode; axial modes are sorted lowest first (COM at ``axial_freq``).
    """
    if ion_count not in (1, 2, 3):
        raise ValueError("ion_count must be 1, 2 or 3")
    if axial_freq <= 0 or radial_freq <= 0:
        raise ValueError("trap frequencies must be positive")
    u = equilibrium_positions(ion_count)
    c = _coulomb_terms(u)
    modes = []
    if direction in ("both", "axial"):
        A = -2 * c
        np.fill_diagonal(A, 1 + 2 * c.sum(axis=1))
        w, v = np.linalg.eigh(A)
        for k in range(ion_count):
            modes.append(MotionalMode("COM" if k == 0 else "other",
                                      axial_freq * np.sqrt(w[k]), _fix_sign(v[:, k]),
                                      direction="axial"))
    if direction in ("both", "radial"):
        beta2 = (radial_freq / axial_freq) ** 2
        B = c.copy()
        np.fill_diagonal(B, beta2 - c.sum(axis=1))
        w, v = np.linalg.eigh(B)
        if w.min() <= 0:
            raise UnstableChainError(
                f"radial mode frequency squared {w.min():.3g}·ω_z² is not positive; "
                "increase the radial confinement")
        for rank, k in enumerate(np.argsort(w)[::-1]):
            label = "COM" if rank == 0 else ("rocking" if rank == 1 else "other")
            modes.append(MotionalMode(label, axial_freq * np.sqrt(w[k]), _fix_sign(v[:, k]),
                                      direction="radial"))
    return modes


def _fix_sign(v):
    v = np.asarray(v, dtype=float)
    k = np.flatnonzero(np.abs(v) > 1e-9)[0]
    return v if v[k] > 0 else -v


def lamb_dicke(mode: MotionalMode, wavevector=DEFAULT_WAVEVECTOR, ion_mass=YB171_MASS):
    """Per-ion Lamb-Dicke parameters ``Δk·sqrt(ħ/2mω)·b_i``."""
    if wavevector <= 0 or ion_mass <= 0 or mode.frequency <= 0:
        raise ValueError("wavevector, mass and mode frequency must be positive")
    x0 = np.sqrt(sc.hbar / (2 * ion_mass * mode.frequency))
    return wavevector * x0 * np.asarray(mode.eigenvector)


def light_shift_from_rabi(omega_ac: float, delta: float) -> float:
    """Light shift ``Ω²/(2Δ)`` in Hz from angular Rabi frequency and detuning."""
    if delta == 0:
        raise ZeroDivisionError("off-resonant detuning must be non-zero")
    return omega_ac ** 2 / (2 * delta) / (2 * np.pi)


# ----------------------------------------------------------------------------
# chain / beams / light shifts / timing
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainConfig:
    """Ion chain geometry.

    ``gate_locations`` holds one location per adjacent pair (``"P01"``,
    ``"P12"``) plus the end location ``"E0"`` where only ion 0 sits in the
    beam; the cascade needs it to give every ion an independent unitary.
    Locations are stored in sweep order, right to left.
    """
    ion_count: int
    ancilla_index: int
    ion_spacing_um: float = 5.0
    gate_locations: tuple = ()

    def __post_init__(self):
        n = self.ion_count
        if n not in (2, 3):
            raise ValueError("only 2- and 3-ion chains are supported")
        if n == 3 and self.ancilla_index != 1:
            raise ValueError("a 3-ion chain keeps the ancilla in the centre (index 1)")
        if not 0 <= self.ancilla_index < n:
            raise ValueError("ancilla_index out of range")
        locs = tuple(self.gate_locations) or default_locations(n)
        if sorted(locs) != sorted(default_locations(n)):
            raise ValueError(f"gate locations for {n} ions must be {default_locations(n)}")
        object.__setattr__(self, "gate_locations", default_locations(n))

    def targets(self, location: str) -> tuple:
        return location_targets(location)

    def distance(self, ion: int, location: str) -> int:
        """0 if targeted, else the index distance to the nearest beam site."""
        sites = location_sites(location)
        return min(abs(ion - s) for s in sites) if ion not in self.targets(location) else 0

    def pair_location(self, a: int, b: int) -> str:
        lo, hi = sorted((a, b))
        if hi - lo != 1:
            raise ValueError(f"ions {a},{b} are not adjacent")
        return f"P{lo}{hi}"

    @property
    def data_ions(self):
        return tuple(i for i in range(self.ion_count) if i != self.ancilla_index)


def default_locations(n):
    """Gate locations in cascade sweep order: ``P(n-2)(n-1) ... P01, E0``."""
    return tuple(f"P{k}{k + 1}" for k in reversed(range(n - 1))) + ("E0",)


def location_targets(location: str) -> tuple:
    if location.startswith("P"):
        return (int(location[1]), int(location[2]))
    if location.startswith("E"):
        return (int(location[1:]),)
    raise ValueError(f"unknown location {location!r}")


def location_sites(location: str) -> tuple:
    """Beam sites illuminated at a location (an end location has one empty site)."""
    if location.startswith("E"):
        k = int(location[1:])
        return (k - 1, k)
    return location_targets(location)


@dataclass(frozen=True)
class BeamProfile:
    relative_rabi: dict   # (ion, location) -> factor in [0, 1]

    def __getitem__(self, key):
        return self.relative_rabi[key]


@dataclass(frozen=True)
class LightShiftEntry:
    ion: int
    location: str
    shift_hz: float = None
    omega_ac: float = None    # angular, rad/s
    delta: float = None       # angular, rad/s

    def __post_init__(self):
        if self.omega_ac is not None and self.delta is not None:
            object.__setattr__(self, "shift_hz", light_shift_from_rabi(self.omega_ac, self.delta))
        if self.shift_hz is None:
            raise ValueError("light-shift entry needs shift_hz or (omega_ac, delta)")


@dataclass(frozen=True)
class LightShiftTable:
    entries: tuple
    ion_count: int
    locations: tuple

    def __post_init__(self):
        table = {(e.ion, e.location): e.shift_hz for e in self.entries}
        missing = [(i, l) for i in range(self.ion_count) for l in self.locations
                   if (i, l) not in table]
        if missing:
            raise ValueError(f"light-shift table missing entries for {missing}")
        object.__setattr__(self, "_table", table)

    def shift(self, ion, location) -> float:
        return self._table[(ion, location)]


@dataclass(frozen=True)
class TimingModel:
    """Durations in microseconds."""
    t_pi2: float = 6.0
    t_pb1: float = 102.0
    t_ms: float = 160.0
    t_transport: float = 100.0
    t_overhead: float = 0.0

    def __post_init__(self):
        for name in ("t_pi2", "t_pb1", "t_ms", "t_transport", "t_overhead"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.t_pb1 < 9 * self.t_pi2 - 1e-9:
            raise ValueError("t_pb1 must be at least 9·t_pi2")

    @property
    def pb1_delay(self) -> float:
        """Dead time per PB1 sequence beyond its 17 quarter-turns of rotation."""
        return max(0.0, self.t_pb1 - 17 * self.t_pi2)


@dataclass(frozen=True)
class MsPairCalibration:
    """Per-pair MS constants.

    ``frame_phase`` is the Raman phase offset sampled at MS confinement,
    ``lightshift_phase`` the z phase both ions pick up during the gate.
    ``crosstalk_p1`` is the unwanted |1> population on the untargeted ion
    after a Bell-state preparation and ``bell_fidelity`` the pair's Bell
    fidelity; both calibrate the simulator's MS error channels.
    """
    frame_phase: float = 0.0
    lightshift_phase: float = 0.0
    crosstalk_p1: float = 0.0
    crosstalk_phase: float = 0.0
    bell_fidelity: float = 1.0


@dataclass(frozen=True)
class DeviceModel:
    chain: ChainConfig
    beam: BeamProfile
    light_shifts: LightShiftTable
    modes: tuple
    timing: TimingModel
    ms_pairs: dict = field(default_factory=dict)
    axial_freq: float = 2 * np.pi * 1.0e6
    radial_freq: float = 2 * np.pi * 2.0e6
    ion_mass: float = YB171_MASS
    wavevector: float = DEFAULT_WAVEVECTOR
    source: str = "<defaults>"

    @property
    def ion_count(self):
        return self.chain.ion_count

    def ms_calibration(self, a, b) -> MsPairCalibration:
        key = "".join(str(i) for i in sorted((a, b)))
        return self.ms_pairs.get(key, MsPairCalibration())

    def mode(self, label, direction="radial") -> MotionalMode:
        for m in self.modes:
            if m.label == label and m.direction == direction:
                return m
        raise KeyError(label)

    def with_timing(self, **kw) -> "DeviceModel":
        return replace(self, timing=replace(self.timing, **kw))


# ----------------------------------------------------------------------------
# loading
# ----------------------------------------------------------------------------

_SCHEMA = {
    "chain": {"ion_count", "ancilla_index", "ion_spacing_um", "gate_locations"},
    "trap": {"axial_freq_mhz", "radial_freq_mhz", "ion_mass_amu", "wavelength_nm"},
    "timing": {"t_pi2_us", "t_pb1_us", "t_ms_us", "t_transport_us", "t_overhead_us"},
    "beam": {"neighbor_rabi", "two_away_rabi", "overrides"},
    "light_shifts": {"targeted_hz", "neighbor_hz", "two_away_hz", "overrides"},
    "modes": {"nbar", "heating_rate"},
    "ms_pairs": None,
}
_MS_KEYS = {"frame_phase", "lightshift_phase", "crosstalk_p1", "crosstalk_phase", "bell_fidelity"}


def _check_keys(block, allowed, path, lines, source):
    if not isinstance(block, dict):
        raise ConfigError(f"{'.'.join(map(str, path))} must be a mapping",
                          line_of(lines, path), source)
    for k in block:
        if k not in allowed:
            raise ConfigError(f"unknown key {'.'.join(map(str, path + (k,)))!r}",
                              line_of(lines, path + (k,)), source)


def device_from_dict(data, lines=None, source="<dict>") -> DeviceModel:
    lines = lines or {}

    def err(msg, path):
        return ConfigError(msg, line_of(lines, path), source)

    _check_keys(data, set(_SCHEMA), (), lines, source)
    for sec, keys in _SCHEMA.items():
        if sec not in data:
            raise err(f"missing section {sec!r}", ())
        if keys is not None:
            _check_keys(data[sec], keys, (sec,), lines, source)

    def get(sec, key, default=None, required=False):
        blk = data[sec]
        if key not in blk:
            if required:
                raise err(f"missing key {sec}.{key}", (sec,))
            return default
        return blk[key]

    def number(sec, key, default=None, lo=None, hi=None):
        v = get(sec, key, default, required=default is None)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise err(f"{sec}.{key} must be a number", (sec, key))
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise err(f"{sec}.{key}={v} outside [{lo}, {hi}]", (sec, key))
        return float(v)

    try:
        chain = ChainConfig(int(get("chain", "ion_count", required=True)),
                            int(get("chain", "ancilla_index", required=True)),
                            number("chain", "ion_spacing_um", 5.0, lo=0),
                            tuple(get("chain", "gate_locations", ())))
    except (ValueError, TypeError) as exc:
        raise err(str(exc), ("chain",)) from None
    n, locs = chain.ion_count, chain.gate_locations

    axial = 2 * np.pi * 1e6 * number("trap", "axial_freq_mhz", 1.0, lo=1e-6)
    radial = 2 * np.pi * 1e6 * number("trap", "radial_freq_mhz", 2.0, lo=1e-6)
    mass = number("trap", "ion_mass_amu", 170.936323, lo=1e-6) * sc.atomic_mass
    k = 2 * (2 * np.pi / (1e-9 * number("trap", "wavelength_nm", 355.0, lo=1e-6)))

    try:
        timing = TimingModel(number("timing", "t_pi2_us", 6.0), number("timing", "t_pb1_us", 102.0),
                             number("timing", "t_ms_us", 160.0),
                             number("timing", "t_transport_us", 100.0),
                             number("timing", "t_overhead_us", 0.0))
    except ValueError as exc:
        raise err(str(exc), ("timing",)) from None

    by_class = {0: 1.0, 1: number("beam", "neighbor_rabi", 0.2, 0, 1),
                2: number("beam", "two_away_rabi", 0.0, 0, 1)}
    rabi = {(i, l): by_class.get(chain.distance(i, l), 0.0) for i in range(n) for l in locs}
    for j, o in enumerate(get("beam", "overrides", []) or []):
        path = ("beam", "overrides", j)
        try:
            key = (int(o["ion"]), str(o["location"]))
            val = float(o["relative_rabi"])
        except (KeyError, TypeError, ValueError):
            raise err("beam override needs ion, location, relative_rabi", path) from None
        if key not in rabi or not 0 <= val <= 1:
            raise err(f"invalid beam override {o}", path)
        if chain.distance(*key) == 0 and val != 1.0:
            raise err("targeted ions must have relative Rabi 1.0", path)
        rabi[key] = val

    shift_class = {0: number("light_shifts", "targeted_hz", 650.0),
                   1: number("light_shifts", "neighbor_hz", 350.0),
                   2: number("light_shifts", "two_away_hz", 100.0)}
    entries = {(i, l): LightShiftEntry(i, l, shift_class.get(chain.distance(i, l), 0.0))
               for i in range(n) for l in locs}
    for j, o in enumerate(get("light_shifts", "overrides", []) or []):
        path = ("light_shifts", "overrides", j)
        try:
            key = (int(o["ion"]), str(o["location"]))
            if "shift_hz" in o:
                e = LightShiftEntry(*key, shift_hz=float(o["shift_hz"]))
            else:
                e = LightShiftEntry(*key, omega_ac=2e3 * np.pi * float(o["omega_ac_khz"]),
                                    delta=2e6 * np.pi * float(o["delta_mhz"]))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise err(f"invalid light-shift override: {exc}", path) from None
        if key not in entries:
            raise err(f"unknown ion/location {key}", path)
        entries[key] = e
    table = LightShiftTable(tuple(entries.values()), n, locs)

    nbar = data["modes"].get("nbar", {}) or {}
    heat = data["modes"].get("heating_rate", {}) or {}
    for name, blk in (("nbar", nbar), ("heating_rate", heat)):
        _check_keys(blk, {"COM", "rocking", "other"}, ("modes", name), lines, source)
        for key, v in blk.items():
            if not isinstance(v, (int, float)) or v < 0:
                raise err(f"modes.{name}.{key} must be a non-negative number", ("modes", name, key))
    try:
        raw = normal_modes(n, axial, radial, direction="radial")
    except UnstableChainError as exc:
        raise err(str(exc), ("trap",)) from None
    modes = []
    for m in raw:
        eta = lamb_dicke(m, k, mass)
        key = m.label if m.label in ("COM", "rocking") else "other"
        modes.append(replace(m, lamb_dicke=tuple(eta),
                             nbar=float(nbar.get(key, nbar.get("other", 0.0))),
                             heating_rate=float(heat.get(key, heat.get("other", 0.0)))))

    pairs = {}
    for key, blk in (data["ms_pairs"] or {}).items():
        key = str(key)
        path = ("ms_pairs", key)
        _check_keys(blk, _MS_KEYS, path, lines, source)
        a, b = int(key[0]), int(key[1])
        if len(key) != 2 or b - a != 1 or b >= n:
            raise err(f"ms pair {key!r} is not an adjacent pair of this chain", path)
        vals = {kk: float(v) for kk, v in blk.items()}
        for kk in ("crosstalk_p1", "bell_fidelity"):
            if kk in vals and not 0 <= vals[kk] <= 1:
                raise err(f"{kk} must lie in [0, 1]", path + (kk,))
        pairs[key] = MsPairCalibration(**vals)

    return DeviceModel(chain, BeamProfile(rabi), table, tuple(modes), timing, pairs,
                       axial, radial, mass, k, source)


def load_device(path) -> DeviceModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read device file: {exc}", source=str(path)) from exc
    data, lines = load_with_lines(text, str(path))
    return device_from_dict(data, lines, str(path))


def default_device(ion_count: int) -> DeviceModel:
    """Packaged device description for a 2- or 3-ion chain."""
    name = {2: "device_2ion.yaml", 3: "device_3ion.yaml"}.get(ion_count)
    if name is None:
        raise ValueError("default devices exist for 2 and 3 ions")
    ref = resources.files("ionbv") / "data" / name
    data, lines = load_with_lines(ref.read_text(), name)
    return device_from_dict(data, lines, name)
