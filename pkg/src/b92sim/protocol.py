"""B92 session engine.

One session block: both parties draw independent random bits, every
bit becomes one pulse on the quantum link (exact qubit in Ideal mode,
attenuated laser pulse through fiber and a gated detector in Physical
mode, optionally intercepted by an eavesdropper), the receiver's
hit/miss record crosses the public channel, both sides keep the hit
positions (sifting), a disclosed sample estimates the error rate, and
block parities reconcile the remainder.

Two deployment shapes share all of this code:

* in-process: the receiver's side owns the physics RNG and reports
  hits over a loopback queue, like the real apparatus would;
* two-process (TCP): a wire cannot carry a qubit, so the sender's
  process simulates the whole quantum layer (rebuilding the
  receiver's bit stream from the shared seed) and streams the hit
  flags; the receiver learns nothing beyond what the message schema
  carries.

Either way each party's decisions depend only on its own bits plus
schema-level messages, and sessions are bit-for-bit reproducible from
the (alice, bob, physics) seed triple.
"""
from __future__ import annotations

import math
import queue
import threading
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import qstate
from .channel import (
    MessagePipe,
    PublicMessage,
    loopback_pair,
    recv_bit_frames,
    send_bit_frames,
)
from .errors import (
    ChannelError,
    ConfigError,
    InsufficientKeyError,
    ProtocolDesyncError,
    SessionAbort,
)
from .hardware import (
    DetectorState,
    HardwareProfile,
    dark_probability,
    default_profile,
    fiber_transmission,
    gate_detector,
    sample_photon_count,
    thin_photons,
)
from .photonics import effective_hit_prob
from .qstate import DOWN, P_DOWN, P_LEFT, P_UP, RIGHT, UP, StateVector, measure, pass_probability


class Mode(Enum):
    IDEAL = "ideal"
    PHYSICAL = "physical"

    @classmethod
    def from_str(cls, s: str) -> "Mode":
        try:
            return cls(s.lower())
        except ValueError as exc:
            raise ConfigError(f"unknown mode {s!r}") from exc


class EveStrategy(Enum):
    """Eavesdropping tactics on the quantum link.

    FIXED_PROJECTION projects every pulse onto the spin-up state and
    resends the collapsed state. Further strategies slot in here.
    """

    NONE = "none"
    FIXED_PROJECTION = "fixed"

    @classmethod
    def from_str(cls, s: str) -> "EveStrategy":
        try:
            return cls(s.lower())
        except ValueError as exc:
            raise ConfigError(f"unknown eve strategy {s!r}") from exc


@dataclass(frozen=True)
class SessionConfig:
    seed_alice: int
    seed_bob: int
    seed_physics: int
    bits_per_block: int = 1024
    mode: Mode = Mode.IDEAL
    eve: EveStrategy = EveStrategy.NONE
    hardware: HardwareProfile = field(default_factory=default_profile)
    error_sample_fraction: float = 0.25
    reconcile_block_size: int = 8
    alarm_ber_threshold: float = 0.05
    alarm_bias_threshold: float = 0.05

    def __post_init__(self):
        if self.bits_per_block <= 0:
            raise ConfigError("bits_per_block must be positive")
        if not 0.0 <= self.error_sample_fraction < 1.0:
            raise ConfigError("error_sample_fraction must lie in [0, 1)")
        if self.reconcile_block_size < 2:
            raise ConfigError("reconcile_block_size must be >= 2")
        for name in ("alarm_ber_threshold", "alarm_bias_threshold"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.mode is Mode.PHYSICAL:
            src = self.hardware.source
            det = self.hardware.detector
            if src.pulse_rate > det.max_gate_rate:
                raise ConfigError(
                    f"pulse_rate {src.pulse_rate:g} Hz exceeds the detector's "
                    f"afterpulse-limited gate ceiling {det.max_gate_rate:g} Hz"
                )

    def session_id(self) -> int:
        return (
            self.seed_alice * 1000003 ^ self.seed_bob * 10007 ^ self.seed_physics
        ) & 0x7FFFFFFF


@dataclass(frozen=True)
class RoundLog:
    index: int
    alice_bit: int
    bob_bit: int
    photon_count: int
    eve_guess: int | None
    hit: bool


class RoundLogs:
    """Columnar per-round record; eve_guess is -1 where Eve saw nothing."""

    def __init__(self):
        self.alice_bits = np.zeros(0, dtype=np.uint8)
        self.bob_bits = np.zeros(0, dtype=np.uint8)
        self.photon_counts = np.zeros(0, dtype=np.int64)
        self.eve_guesses = np.zeros(0, dtype=np.int8)
        self.hits = np.zeros(0, dtype=np.uint8)

    def __len__(self) -> int:
        return int(self.hits.size)

    def extend(self, alice_bits, bob_bits, photon_counts, eve_guesses, hits) -> None:
        self.alice_bits = np.concatenate([self.alice_bits, alice_bits])
        self.bob_bits = np.concatenate([self.bob_bits, bob_bits])
        self.photon_counts = np.concatenate([self.photon_counts, photon_counts])
        self.eve_guesses = np.concatenate([self.eve_guesses, eve_guesses])
        self.hits = np.concatenate([self.hits, hits])

    def row(self, i: int) -> RoundLog:
        g = int(self.eve_guesses[i])
        return RoundLog(
            index=i,
            alice_bit=int(self.alice_bits[i]),
            bob_bit=int(self.bob_bits[i]),
            photon_count=int(self.photon_counts[i]),
            eve_guess=None if g < 0 else g,
            hit=bool(self.hits[i]),
        )

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["index", "alice_bit", "bob_bit", "photon_count", "eve_guess", "hit"])
            for i in range(len(self)):
                g = int(self.eve_guesses[i])
                w.writerow([
                    i,
                    int(self.alice_bits[i]),
                    int(self.bob_bits[i]),
                    int(self.photon_counts[i]),
                    "" if g < 0 else g,
                    int(self.hits[i]),
                ])


@dataclass
class SessionReport:
    sifted_key_alice: np.ndarray
    sifted_key_bob: np.ndarray
    sifted_fraction: float
    ber_estimate: float
    zero_bias: float
    reconciled_key: np.ndarray
    key_rate_bits_per_pulse: float
    alarm: bool
    alarm_reason: str | None
    n_rounds: int
    round_logs: RoundLogs | None = None


# ---------------------------------------------------------------------------
# elementary protocol operations


def generate_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent fair bits from the given stream."""
    if n <= 0:
        raise ValueError("n must be positive")
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def alice_prepare(bit: int) -> StateVector:
    """Sender's state for a bit: 0 -> spin-z up, 1 -> spin-x up."""
    if bit == 0:
        return UP
    if bit == 1:
        return RIGHT
    raise ValueError(f"bit must be 0 or 1, got {bit!r}")


def bob_projector(bit: int) -> qstate.Projector:
    """Receiver's measurement for a bit: 0 -> P(left), 1 -> P(down)."""
    if bit == 0:
        return P_LEFT
    if bit == 1:
        return P_DOWN
    raise ValueError(f"bit must be 0 or 1, got {bit!r}")


def eve_intercept(
    state: StateVector, strategy: EveStrategy, rng: np.random.Generator
) -> tuple[int | None, StateVector]:
    """Apply the eavesdropper to one logical signal.

    FIXED_PROJECTION measures P(up): a pass is recorded as a guess of
    0 and forwards the up state, a fail as 1 and forwards down.
    """
    if strategy is EveStrategy.NONE:
        return None, state
    passed, collapsed = measure(state, P_UP, rng)
    return (0 if passed else 1), collapsed


# Born-rule tables, derived from the state algebra rather than typed in.
_PASS_TABLE = np.array(
    [[pass_probability(alice_prepare(a), bob_projector(b)) for b in (0, 1)] for a in (0, 1)]
)
_EVE_PASS = np.array([pass_probability(alice_prepare(a), P_UP) for a in (0, 1)])
_FWD_STATES = (UP, DOWN)  # Eve forwards index 0 on pass, 1 on fail
_FWD_PASS = np.array(
    [[pass_probability(s, bob_projector(b)) for b in (0, 1)] for s in _FWD_STATES]
)


def _central_window_prob(q, visibility: float):
    """Detector central-window probability for a logical pass
    probability q: (1/8) * (1 + V * (2q - 1))."""
    return 0.125 * (1.0 + visibility * (2.0 * np.asarray(q, dtype=float) - 1.0))


@dataclass(frozen=True)
class BlockPhysics:
    hits: np.ndarray
    photon_counts: np.ndarray
    eve_guesses: np.ndarray
    detector_state: DetectorState


class PhysicsKernel:
    """Owns the physics RNG and simulates transmission blocks.

    Whole blocks are vectorized; only a detector with live afterpulsing
    forces a sequential gate-by-gate walk, because its trapped charge
    couples consecutive gates.
    """

    def __init__(self, cfg: SessionConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.detector_state = DetectorState()
        self.logs = RoundLogs()

    def transmit_block(self, alice_bits: np.ndarray, bob_bits: np.ndarray) -> BlockPhysics:
        if len(alice_bits) != len(bob_bits):
            raise ProtocolDesyncError("bit blocks differ in length")
        if self.cfg.mode is Mode.IDEAL:
            out = self._ideal_block(alice_bits, bob_bits)
        else:
            out = self._physical_block(alice_bits, bob_bits)
        self.detector_state = out.detector_state
        self.logs.extend(alice_bits, bob_bits, out.photon_counts, out.eve_guesses, out.hits)
        return out

    def _eve_layer(self, alice_bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Sample Eve for every round; returns (guesses, forwarded state idx)."""
        n = len(alice_bits)
        eve_pass = self.rng.random(n) < _EVE_PASS[alice_bits]
        guesses = np.where(eve_pass, 0, 1).astype(np.int8)
        return guesses, guesses.astype(np.intp)  # forwarded index == guess

    def _ideal_block(self, alice_bits, bob_bits) -> BlockPhysics:
        n = len(alice_bits)
        if self.cfg.eve is EveStrategy.NONE:
            q = _PASS_TABLE[alice_bits, bob_bits]
            guesses = np.full(n, -1, dtype=np.int8)
        else:
            guesses, fwd = self._eve_layer(alice_bits)
            q = _FWD_PASS[fwd, bob_bits]
        hits = (self.rng.random(n) < q).astype(np.uint8)
        return BlockPhysics(
            hits=hits,
            photon_counts=np.ones(n, dtype=np.int64),
            eve_guesses=guesses,
            detector_state=self.detector_state,
        )

    def _physical_block(self, alice_bits, bob_bits) -> BlockPhysics:
        cfg = self.cfg
        hw = cfg.hardware
        n = len(alice_bits)
        if hw.source.ideal_single_photon:
            counts = np.ones(n, dtype=np.int64)
        else:
            counts = self.rng.poisson(hw.source.mean_photons, size=n).astype(np.int64)
        if cfg.eve is EveStrategy.NONE:
            q = _PASS_TABLE[alice_bits, bob_bits]
            guesses = np.full(n, -1, dtype=np.int8)
        else:
            # Eve measures the logical signal ahead of fiber loss; her
            # statistics commute with per-photon survival. Empty pulses
            # give her nothing to measure.
            guesses, fwd = self._eve_layer(alice_bits)
            q = _FWD_PASS[fwd, bob_bits]
            guesses = np.where(counts > 0, guesses, -1).astype(np.int8)
        transmission = fiber_transmission(hw.fiber)
        survivors = self.rng.binomial(counts, transmission).astype(np.int64)
        p_window = _central_window_prob(q, hw.interferometer.visibility)
        det = hw.detector
        if det.afterpulse_prob0 == 0.0:
            p_signal = 1.0 - (1.0 - p_window * det.efficiency) ** survivors
            p_dark = dark_probability(det)
            p_hit = 1.0 - (1.0 - p_signal) * (1.0 - p_dark)
            hits = (self.rng.random(n) < p_hit).astype(np.uint8)
            state = self.detector_state
        else:
            hits, state = self._gated_walk(p_window, survivors)
        return BlockPhysics(
            hits=hits, photon_counts=counts, eve_guesses=guesses, detector_state=state
        )

    def _gated_walk(self, p_window, survivors) -> tuple[np.ndarray, DetectorState]:
        det = self.cfg.hardware.detector
        dt = 1.0 / self.cfg.hardware.source.pulse_rate
        base = self.detector_state.last_avalanche_time
        state = self.detector_state
        hits = np.zeros(len(survivors), dtype=np.uint8)
        eta = det.efficiency
        for i, (p, k) in enumerate(zip(p_window, survivors)):
            # pulse-equivalent window probability so the detector's
            # efficiency factor reproduces 1 - (1 - p*eta)^k exactly
            if k > 0 and eta > 0.0:
                p_eff = (1.0 - (1.0 - p * eta) ** int(k)) / eta
            else:
                p_eff = 0.0
            hit, state = gate_detector(
                k > 0, p_eff, det, state, base + (i + 1) * dt, self.rng
            )
            hits[i] = hit
        return hits, state


def transmit_round(
    alice_bit: int,
    bob_bit: int,
    cfg: SessionConfig,
    detector_state: DetectorState,
    rng: np.random.Generator,
) -> tuple[bool, RoundLog, DetectorState]:
    """One pulse end to end, as a standalone scalar operation.

    Ideal mode sends a single perfect qubit through the eavesdropper
    and measures it; Physical mode draws a photon count, lets Eve act
    on the logical signal, thins through the fiber, and gates the
    detector on the central-window probability.
    """
    hw = cfg.hardware
    if cfg.mode is Mode.IDEAL:
        state = alice_prepare(alice_bit)
        guess, forwarded = eve_intercept(state, cfg.eve, rng)
        hit, _ = measure(forwarded, bob_projector(bob_bit), rng)
        log = RoundLog(0, alice_bit, bob_bit, 1, guess, hit)
        return hit, log, detector_state
    count = sample_photon_count(hw.source, rng)
    guess = None
    if cfg.eve is not EveStrategy.NONE and count > 0:
        state = alice_prepare(alice_bit)
        guess, forwarded = eve_intercept(state, cfg.eve, rng)
        q = pass_probability(forwarded, bob_projector(bob_bit))
        p_window = float(_central_window_prob(q, hw.interferometer.visibility))
    else:
        p_window = effective_hit_prob(alice_bit, bob_bit, hw.interferometer.visibility)
    survivors = thin_photons(count, fiber_transmission(hw.fiber), rng)
    det = hw.detector
    eta = det.efficiency
    if survivors > 0 and eta > 0.0:
        p_eff = (1.0 - (1.0 - p_window * eta) ** survivors) / eta
    else:
        p_eff = 0.0
    now = detector_state.last_avalanche_time + 1.0 / hw.source.pulse_rate
    hit, new_state = gate_detector(survivors > 0, p_eff, det, detector_state, now, rng)
    log = RoundLog(0, alice_bit, bob_bit, count, guess, hit)
    return hit, log, new_state


# ---------------------------------------------------------------------------
# classical post-processing


def _sift(bits: np.ndarray, hits: np.ndarray) -> np.ndarray:
    if len(bits) != len(hits):
        raise ProtocolDesyncError(
            f"hit record of {len(hits)} entries against {len(bits)} bits"
        )
    return bits[hits == 1]


def sift(logs: RoundLogs, results_msg: PublicMessage):
    """Keep exactly the hit positions named by a Results message.

    Returns (alice_key, bob_key, kept_indices).
    """
    if results_msg.kind != "Results":
        raise ProtocolDesyncError(f"expected a Results message, got {results_msg.kind}")
    payload = results_msg.payload
    total = int(payload["total"])
    if int(payload.get("offset", 0)) != 0 or total != len(logs):
        raise ProtocolDesyncError(
            f"Results covers {total} rounds, log has {len(logs)}"
        )
    from .channel import hex_to_bits

    hits = hex_to_bits(payload["bits"], total)
    kept = np.nonzero(hits)[0]
    return logs.alice_bits[kept], logs.bob_bits[kept], kept


def estimate_ber(
    alice_key: np.ndarray,
    bob_key: np.ndarray,
    fraction: float,
    rng: np.random.Generator,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Disclose a random sample of positions and compare them.

    The disclosed positions are removed from both returned keys, since
    their values are now public.
    """
    if len(alice_key) != len(bob_key):
        raise ProtocolDesyncError("keys differ in length")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    k = int(fraction * len(alice_key))
    if k == 0:
        raise InsufficientKeyError("error-check sample is empty")
    idx = np.sort(rng.choice(len(alice_key), size=k, replace=False))
    ber = float(np.mean(alice_key[idx] != bob_key[idx]))
    keep = np.ones(len(alice_key), dtype=bool)
    keep[idx] = False
    return ber, alice_key[keep], bob_key[keep]


def zero_bias(bob_key: np.ndarray) -> float:
    """Fraction of zeros in the receiver's sifted key."""
    if len(bob_key) == 0:
        raise InsufficientKeyError("cannot estimate bias of an empty key")
    return float(np.mean(np.asarray(bob_key) == 0))


def block_parities(key: np.ndarray, block_size: int) -> np.ndarray:
    """Per-block parity bits; a trailing partial block counts too."""
    if block_size < 2:
        raise ValueError("block_size must be >= 2")
    n_blocks = math.ceil(len(key) / block_size)
    out = np.zeros(n_blocks, dtype=np.uint8)
    for i in range(n_blocks):
        out[i] = int(key[i * block_size: (i + 1) * block_size].sum()) & 1
    return out


def apply_block_verdicts(key: np.ndarray, drop_mask: np.ndarray, block_size: int) -> np.ndarray:
    """Drop flagged blocks whole; unflagged blocks lose their last bit
    (paying for the parity that went over the public channel)."""
    pieces = []
    n_blocks = math.ceil(len(key) / block_size)
    if len(drop_mask) != n_blocks:
        raise ProtocolDesyncError(
            f"verdicts for {len(drop_mask)} blocks, key has {n_blocks}"
        )
    for i in range(n_blocks):
        if drop_mask[i]:
            continue
        block = key[i * block_size: (i + 1) * block_size]
        pieces.append(block[:-1])
    if not pieces:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(pieces)


def reconcile_block_parity(
    alice_key: np.ndarray, bob_key: np.ndarray, block_size: int
) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Block-parity error rejection over both keys at once.

    Blocks whose parities disagree are discarded entirely; agreeing
    blocks keep all but their last bit. Returns the two surviving keys
    plus (bits_discarded_per_key, blocks_dropped).
    """
    if len(alice_key) != len(bob_key):
        raise ProtocolDesyncError("keys differ in length")
    pa = block_parities(alice_key, block_size)
    pb = block_parities(bob_key, block_size)
    drop = (pa != pb).astype(np.uint8)
    a2 = apply_block_verdicts(alice_key, drop, block_size)
    b2 = apply_block_verdicts(bob_key, drop, block_size)
    return a2, b2, len(alice_key) - len(a2), int(drop.sum())


def _evaluate_alarm(cfg: SessionConfig, ber: float, bias: float | None) -> tuple[bool, str | None]:
    reasons = []
    if ber > cfg.alarm_ber_threshold:
        reasons.append("ber")
    if bias is not None and abs(bias - 0.5) > cfg.alarm_bias_threshold:
        reasons.append("bias")
    return bool(reasons), "+".join(reasons) if reasons else None


# ---------------------------------------------------------------------------
# party engines


def _hello_payload(cfg: SessionConfig) -> dict:
    return {
        "bits_per_block": cfg.bits_per_block,
        "mode": cfg.mode.value,
        "eve": cfg.eve.value,
        "reconcile_block_size": cfg.reconcile_block_size,
        "error_sample_fraction": cfg.error_sample_fraction,
    }


class AliceEngine:
    """Sender-side state machine.

    With ``link`` set (in-process) the prepared bit blocks go down the
    quantum-link queue and the hit record comes back over the public
    channel. Without a link (two-process) this side owns the physics:
    it rebuilds the receiver's bit stream from the shared seed, runs
    the kernel, and streams the hit flags out as Results frames.
    """

    def __init__(self, cfg: SessionConfig, pipe: MessagePipe, link: queue.Queue | None = None):
        self.cfg = cfg
        self.pipe = pipe
        self.link = link
        self.rng = np.random.default_rng(cfg.seed_alice)
        self.kernel: PhysicsKernel | None = None
        if link is None:
            self.kernel = PhysicsKernel(cfg, np.random.default_rng(cfg.seed_physics))
            self._bob_replica_rng = np.random.default_rng(cfg.seed_bob)
        self.blocks_done = 0
        self.rounds_sent = 0
        self.sifted_blocks: list[np.ndarray] = []
        self.reconciled_blocks: list[np.ndarray] = []
        self.disclosed_total = 0
        self.mismatch_total = 0
        self.bob_bias: float | None = None
        self.ber = 0.0
        self.alarm = False
        self.alarm_reason: str | None = None

    def handshake(self) -> None:
        hello = self.pipe.recv(expect_kind="Hello")
        if hello.payload != _hello_payload(self.cfg):
            raise SessionAbort(
                f"peer configuration mismatch: {hello.payload} != {_hello_payload(self.cfg)}"
            )
        self.pipe.send("Hello", {"ok": True})

    def run_block(self) -> None:
        cfg = self.cfg
        bits = generate_bits(cfg.bits_per_block, self.rng)
        if self.kernel is not None:
            bob_bits = generate_bits(cfg.bits_per_block, self._bob_replica_rng)
            phys = self.kernel.transmit_block(bits, bob_bits)
            hits = phys.hits
            send_bit_frames(self.pipe, "Results", hits)
        else:
            self.link.put(bits)
            hits, _ = recv_bit_frames(self.pipe, "Results")
            if len(hits) != len(bits):
                raise ProtocolDesyncError("Results length does not match the block")
        key = _sift(bits, hits)
        self.rounds_sent += len(bits)
        self.sifted_blocks.append(key)

        k = int(cfg.error_sample_fraction * len(key))
        mask = np.zeros(len(key), dtype=np.uint8)
        if k > 0:
            idx = self.rng.choice(len(key), size=k, replace=False)
            mask[idx] = 1
        send_bit_frames(self.pipe, "ErrorCheckIndices", mask)
        values, head = recv_bit_frames(self.pipe, "ErrorCheckValues")
        self.bob_bias = head.get("bias")
        mine = key[mask == 1]
        if len(values) != len(mine):
            raise ProtocolDesyncError("disclosed values do not match the sample size")
        self.disclosed_total += len(mine)
        self.mismatch_total += int(np.sum(mine != values))
        trimmed = key[mask == 0]

        parities = block_parities(trimmed, cfg.reconcile_block_size)
        send_bit_frames(
            self.pipe, "Parities", parities, extra={"block_size": cfg.reconcile_block_size}
        )
        drop_mask, _ = recv_bit_frames(self.pipe, "DiscardList")
        self.reconciled_blocks.append(
            apply_block_verdicts(trimmed, drop_mask, cfg.reconcile_block_size)
        )
        self.blocks_done += 1

    def send_done(self, more: bool) -> None:
        self.ber = (
            self.mismatch_total / self.disclosed_total if self.disclosed_total else 0.0
        )
        self.alarm, self.alarm_reason = _evaluate_alarm(self.cfg, self.ber, self.bob_bias)
        self.pipe.send(
            "Done",
            {
                "more": more,
                "ber": self.ber,
                "bias": self.bob_bias,
                "alarm": self.alarm,
                "reason": self.alarm_reason,
            },
        )

    def run(self, continue_fn) -> "AliceEngine":
        self.handshake()
        while True:
            self.run_block()
            more = bool(continue_fn(self))
            self.send_done(more)
            if not more:
                return self

    def sifted_key(self) -> np.ndarray:
        return np.concatenate(self.sifted_blocks) if self.sifted_blocks else np.zeros(0, np.uint8)

    def reconciled_key(self) -> np.ndarray:
        return (
            np.concatenate(self.reconciled_blocks)
            if self.reconciled_blocks
            else np.zeros(0, np.uint8)
        )


class BobEngine:
    """Receiver-side state machine.

    With ``link`` set (in-process) this side owns the physics kernel,
    detects each block, and reports the hit record over the public
    channel; without one it receives the hit flags as Results frames.
    Decisions here read only this party's bits and the messages.
    """

    def __init__(self, cfg: SessionConfig, pipe: MessagePipe, link: queue.Queue | None = None):
        self.cfg = cfg
        self.pipe = pipe
        self.link = link
        self.rng = np.random.default_rng(cfg.seed_bob)
        self.kernel: PhysicsKernel | None = None
        if link is not None:
            self.kernel = PhysicsKernel(cfg, np.random.default_rng(cfg.seed_physics))
        self.sifted_blocks: list[np.ndarray] = []
        self.reconciled_blocks: list[np.ndarray] = []
        self.zeros_total = 0
        self.sifted_total = 0
        self.final: dict | None = None

    def handshake(self) -> None:
        self.pipe.send("Hello", _hello_payload(self.cfg))
        reply = self.pipe.recv(expect_kind="Hello")
        if not reply.payload.get("ok"):
            raise SessionAbort("peer rejected the session configuration")

    def _bias(self) -> float | None:
        return self.zeros_total / self.sifted_total if self.sifted_total else None

    def run_block(self) -> None:
        cfg = self.cfg
        bits = generate_bits(cfg.bits_per_block, self.rng)
        if self.kernel is not None:
            try:
                alice_bits = self.link.get(timeout=30.0)
            except queue.Empty as exc:
                raise ChannelError("quantum link stayed empty") from exc
            phys = self.kernel.transmit_block(alice_bits, bits)
            hits = phys.hits
            send_bit_frames(self.pipe, "Results", hits)
        else:
            hits, _ = recv_bit_frames(self.pipe, "Results")
            if len(hits) != len(bits):
                raise ProtocolDesyncError("Results length does not match the block")
        key = _sift(bits, hits)
        self.sifted_blocks.append(key)
        self.zeros_total += int(np.sum(key == 0))
        self.sifted_total += len(key)

        mask, _ = recv_bit_frames(self.pipe, "ErrorCheckIndices")
        if len(mask) != len(key):
            raise ProtocolDesyncError("error-check mask does not match the key length")
        send_bit_frames(
            self.pipe, "ErrorCheckValues", key[mask == 1], extra={"bias": self._bias()}
        )
        trimmed = key[mask == 0]

        parities_a, head = recv_bit_frames(self.pipe, "Parities")
        if int(head.get("block_size", -1)) != cfg.reconcile_block_size:
            raise ProtocolDesyncError("peer used a different reconciliation block size")
        mine = block_parities(trimmed, cfg.reconcile_block_size)
        if len(parities_a) != len(mine):
            raise ProtocolDesyncError("parity lists differ in length")
        drop = (mine != parities_a).astype(np.uint8)
        send_bit_frames(self.pipe, "DiscardList", drop)
        self.reconciled_blocks.append(
            apply_block_verdicts(trimmed, drop, cfg.reconcile_block_size)
        )

    def run(self) -> "BobEngine":
        self.handshake()
        while True:
            self.run_block()
            done = self.pipe.recv(expect_kind="Done")
            self.final = done.payload
            if not done.payload.get("more"):
                return self

    def sifted_key(self) -> np.ndarray:
        return np.concatenate(self.sifted_blocks) if self.sifted_blocks else np.zeros(0, np.uint8)

    def reconciled_key(self) -> np.ndarray:
        return (
            np.concatenate(self.reconciled_blocks)
            if self.reconciled_blocks
            else np.zeros(0, np.uint8)
        )


def run_session(
    cfg: SessionConfig,
    channel: tuple | None = None,
    n_blocks: int = 1,
) -> SessionReport:
    """Run a complete in-process session and assemble its report.

    ``channel`` may supply a (alice_transport, bob_transport) pair so
    tests can watch the frames; by default a loopback pair is built.
    The two parties run as two logical threads joined by the blocking
    message channel and the quantum-link queue.
    """
    if n_blocks < 1:
        raise ConfigError("n_blocks must be >= 1")
    if channel is None:
        t_a, t_b = loopback_pair()
    else:
        t_a, t_b = channel
    sid = cfg.session_id()
    alice = AliceEngine(cfg, MessagePipe(t_a, sid), link=queue.Queue())
    bob = BobEngine(cfg, MessagePipe(t_b, sid), link=alice.link)
    failures: list[Exception] = []

    def bob_main():
        try:
            bob.run()
        except Exception as exc:  # propagate to the main thread
            failures.append(exc)
            t_b.close()

    worker = threading.Thread(target=bob_main, daemon=True)
    worker.start()
    try:
        alice.run(lambda eng: eng.blocks_done < n_blocks)
    except Exception as exc:
        t_a.close()
        worker.join(timeout=5.0)
        raise SessionAbort(f"session failed: {exc}", partial=alice) from exc
    worker.join(timeout=30.0)
    if failures:
        raise SessionAbort(f"receiver failed: {failures[0]}", partial=alice) from failures[0]
    if worker.is_alive():
        raise SessionAbort("receiver thread did not finish", partial=alice)

    sifted_a = alice.sifted_key()
    sifted_b = bob.sifted_key()
    kernel = bob.kernel if bob.kernel is not None else alice.kernel
    n_rounds = alice.rounds_sent
    bias = bob._bias()
    return SessionReport(
        sifted_key_alice=sifted_a,
        sifted_key_bob=sifted_b,
        sifted_fraction=len(sifted_a) / n_rounds,
        ber_estimate=alice.ber,
        zero_bias=float("nan") if bias is None else bias,
        reconciled_key=alice.reconciled_key(),
        key_rate_bits_per_pulse=len(sifted_a) / n_rounds,
        alarm=alice.alarm,
        alarm_reason=alice.alarm_reason,
        n_rounds=n_rounds,
        round_logs=kernel.logs if kernel is not None else None,
    )


# ---------------------------------------------------------------------------
# analytic link budget


@dataclass(frozen=True)
class KeyRatePrediction:
    bits_per_pulse: float
    bits_per_second: float
    factors: dict


def predict_key_rate(cfg: SessionConfig) -> KeyRatePrediction:
    """Analytic sifted-key rate of the physical link.

    The product of four factors: the chance a pulse holds a photon
    (the attenuated-laser mean, read as the small-mean occupancy
    probability; exactly 1 for an ideal source), fiber transmission,
    the 1/16 protocol-and-multiplexing factor (1/4 intrinsic sifting
    times 1/4 for the central time window), and detector efficiency.
    """
    if cfg.mode is not Mode.PHYSICAL:
        raise ConfigError("key-rate prediction applies to Physical mode only")
    hw = cfg.hardware
    src = hw.source
    non_empty = 1.0 if src.ideal_single_photon else min(src.mean_photons, 1.0)
    transmission = fiber_transmission(hw.fiber)
    protocol_factor = 1.0 / 16.0
    efficiency = hw.detector.efficiency
    bpp = non_empty * transmission * protocol_factor * efficiency
    return KeyRatePrediction(
        bits_per_pulse=bpp,
        bits_per_second=bpp * src.pulse_rate,
        factors={
            "source_nonempty": non_empty,
            "fiber_transmission": transmission,
            "protocol_factor": protocol_factor,
            "detector_efficiency": efficiency,
        },
    )


def analytic_ber(hw: HardwareProfile, distance_km: float | None = None) -> float:
    """Expected sifted-key error rate of the physical link.

    Signal hits follow the central-window probabilities (1/8 on
    agreeing bits, (1/8)(1-V) on differing bits); dark counts land on
    either kind of round alike, and only differing-bit hits are
    errors. As the fiber eats the signal the dark counts dominate and
    the error rate climbs toward 1/2.
    """
    fiber = hw.fiber if distance_km is None else replace(hw.fiber, length_km=distance_km)
    t = fiber_transmission(fiber)
    eta = hw.detector.efficiency
    v = hw.interferometer.visibility
    src = hw.source
    if src.ideal_single_photon:
        p_same = t * eta * 0.125
        p_diff = t * eta * 0.125 * (1.0 - v)
    else:
        mu = src.mean_photons
        p_same = 1.0 - math.exp(-mu * t * eta * 0.125)
        p_diff = 1.0 - math.exp(-mu * t * eta * 0.125 * (1.0 - v))
    dark = dark_probability(hw.detector)
    hit_same = 1.0 - (1.0 - p_same) * (1.0 - dark)
    hit_diff = 1.0 - (1.0 - p_diff) * (1.0 - dark)
    if hit_same + hit_diff == 0.0:
        return 0.0
    return hit_diff / (hit_same + hit_diff)


def ber_crossing_distance(
    hw: HardwareProfile, threshold: float, d_max: float = 10000.0
) -> float | None:
    """Shortest fiber length at which the analytic error rate reaches
    ``threshold``; None if it never does below ``d_max`` km."""
    if analytic_ber(hw, 0.0) >= threshold:
        return 0.0
    lo, hi = 0.0, 10.0
    while analytic_ber(hw, hi) < threshold:
        lo, hi = hi, hi * 2.0
        if hi > d_max:
            return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if analytic_ber(hw, mid) >= threshold:
            hi = mid
        else:
            lo = mid
    return hi
