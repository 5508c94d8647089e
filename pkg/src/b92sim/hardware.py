"""Stochastic models of the physical layer.

Attenuated-laser source with Poisson photon statistics, fiber loss as
per-photon binomial thinning, and a gated Geiger-mode avalanche
photodiode with dark counts and an exponentially decaying afterpulse
hazard fed by trapped avalanche charge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, ModelValidityError
from .photonics import InterferometerConfig


@dataclass(frozen=True)
class SourceParams:
    """Pulsed light source. mean_photons is the Poisson mean per pulse;
    with ideal_single_photon every pulse carries exactly one photon."""

    mean_photons: float = 0.1
    pulse_rate: float = 10e3
    ideal_single_photon: bool = False

    def __post_init__(self):
        if self.mean_photons < 0:
            raise ConfigError("mean_photons must be >= 0")
        if self.pulse_rate <= 0:
            raise ConfigError("pulse_rate must be positive")


@dataclass(frozen=True)
class FiberParams:
    length_km: float = 0.0
    attenuation_db_per_km: float = 0.3

    def __post_init__(self):
        if self.length_km < 0 or self.attenuation_db_per_km < 0:
            raise ConfigError("fiber length and attenuation must be >= 0")


@dataclass(frozen=True)
class DetectorParams:
    """Gated single-photon detector.

    afterpulse_prob0 is the hazard immediately after an avalanche;
    it decays with time constant afterpulse_tau. max_gate_rate is the
    ceiling above which afterpulsing makes operation pointless.
    """

    efficiency: float = 0.2
    dark_rate: float = 50e3
    gate_window: float = 100e-12
    afterpulse_prob0: float = 0.0
    afterpulse_tau: float = 3e-6
    max_gate_rate: float = 100e3

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError("efficiency must lie in [0, 1]")
        if not 0.0 <= self.afterpulse_prob0 <= 1.0:
            raise ConfigError("afterpulse_prob0 must lie in [0, 1]")
        for name in ("dark_rate", "gate_window", "afterpulse_tau", "max_gate_rate"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")


@dataclass(frozen=True)
class DetectorState:
    """Trapped-charge bookkeeping between gates.

    trap_charge is the residual charge as of ``last_avalanche_time``;
    it resets to 1 on every avalanche and decays exponentially between
    them, so the afterpulse hazard falls monotonically until the next
    hit.
    """

    trap_charge: float = 0.0
    last_avalanche_time: float = 0.0


@dataclass(frozen=True)
class HardwareProfile:
    """One bundle of everything the physical layer needs."""

    source: SourceParams = field(default_factory=SourceParams)
    fiber: FiberParams = field(default_factory=FiberParams)
    detector: DetectorParams = field(default_factory=DetectorParams)
    interferometer: InterferometerConfig = field(default_factory=InterferometerConfig)


def default_profile() -> HardwareProfile:
    return HardwareProfile()


def sample_photon_count(src: SourceParams, rng: np.random.Generator) -> int:
    """Photons in one pulse: Poisson(mean) or exactly 1 for an ideal source."""
    if src.ideal_single_photon:
        return 1
    return int(rng.poisson(src.mean_photons))


def fiber_transmission(f: FiberParams) -> float:
    """Power transmission 10^(-attenuation * length / 10)."""
    return 10.0 ** (-f.attenuation_db_per_km * f.length_km / 10.0)


def thin_photons(n: int, transmission: float, rng: np.random.Generator) -> int:
    """Binomial survival of n photons through a lossy element."""
    if not 0.0 <= transmission <= 1.0:
        raise ConfigError(f"transmission must lie in [0, 1], got {transmission}")
    if n == 0:
        return 0
    return int(rng.binomial(n, transmission))


def dark_probability(d: DetectorParams) -> float:
    """Chance of a dark count within one gate window: rate * window.

    Only valid while the product is small; otherwise the linear model
    (no Poisson saturation, no dead time) no longer applies.
    """
    p = d.dark_rate * d.gate_window
    if p >= 0.1:
        raise ModelValidityError(
            f"dark_rate * gate_window = {p:.3g}; linear dark-count model "
            "requires the product to be well below 1"
        )
    return p


def afterpulse_probability(d: DetectorParams, st: DetectorState, now: float) -> float:
    """Afterpulse hazard at gate time ``now``."""
    if d.afterpulse_prob0 == 0.0 or st.trap_charge == 0.0:
        return 0.0
    if d.afterpulse_tau <= 0.0:
        return 0.0
    decay = math.exp(-(now - st.last_avalanche_time) / d.afterpulse_tau)
    return d.afterpulse_prob0 * st.trap_charge * decay


def gate_detector(
    photon_arrives: bool,
    optical_prob: float,
    d: DetectorParams,
    st: DetectorState,
    now: float,
    rng: np.random.Generator,
) -> tuple[bool, DetectorState]:
    """One gated exposure of the detector.

    The three hazards (signal = optical_prob * efficiency when a photon
    arrives, dark count, afterpulse) are physically independent, so the
    hit probability is 1 - product of their complements. A hit refills
    the trap and restarts the decay clock; a miss folds the elapsed
    decay into the stored charge.
    """
    if now < st.last_avalanche_time:
        raise ValueError("gate time precedes the detector state's clock")
    p_signal = optical_prob * d.efficiency if photon_arrives else 0.0
    p_dark = dark_probability(d)
    p_after = afterpulse_probability(d, st, now)
    p_hit = 1.0 - (1.0 - p_signal) * (1.0 - p_dark) * (1.0 - p_after)
    hit = bool(rng.random() < p_hit)
    if hit:
        new_state = DetectorState(trap_charge=1.0, last_avalanche_time=now)
    elif st.trap_charge == 0.0:
        new_state = st
    else:
        if d.afterpulse_tau > 0.0:
            decayed = st.trap_charge * math.exp(
                -(now - st.last_avalanche_time) / d.afterpulse_tau
            )
        else:
            decayed = 0.0
        new_state = DetectorState(trap_charge=decayed, last_avalanche_time=now)
    return hit, new_state


_PROFILE_KEYS = {
    f.name: (section, f.type)
    for section, cls in (
        ("source", SourceParams),
        ("fiber", FiberParams),
        ("detector", DetectorParams),
        ("interferometer", InterferometerConfig),
    )
    for f in fields(cls)
}

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def _parse_value(key: str, raw: str):
    if key == "ideal_single_photon":
        word = raw.strip().lower()
        if word in _TRUE_WORDS:
            return True
        if word in _FALSE_WORDS:
            return False
        raise ConfigError(f"cannot parse boolean {key}={raw!r}")
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key}={raw!r} as a number") from exc


def load_profile(path) -> HardwareProfile:
    """Read a flat key=value profile file.

    Keys are the field names of the four parameter groups (units as
    declared there); '#' starts a comment; unknown keys are an error.
    """
    overrides: dict[str, dict] = {"source": {}, "fiber": {}, "detector": {}, "interferometer": {}}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _PROFILE_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown profile key {key!r}")
            section, _ = _PROFILE_KEYS[key]
            overrides[section][key] = _parse_value(key, raw)
    base = HardwareProfile()
    return HardwareProfile(
        source=replace(base.source, **overrides["source"]),
        fiber=replace(base.fiber, **overrides["fiber"]),
        detector=replace(base.detector, **overrides["detector"]),
        interferometer=replace(base.interferometer, **overrides["interferometer"]),
    )
