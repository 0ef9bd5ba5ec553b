"""Single-particle detection events with coincidence measurements.

Positions are drawn first from the screen marginal by rejection sampling;
measurement outcomes are then drawn from the Born conditionals at the
detected position. Randomness comes from counter-based Philox streams keyed
by ``(master_seed, stream_id, block)``. Events are grouped into fixed-size
blocks, so any contiguous index range can be regenerated on its own and
merges to exactly the single-task result.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .config import ExperimentConfig
from .exceptions import PreconditionError, SamplerError
from .model import gaussian_mode, joint_amplitudes, norm_constant, propagation_state, sigma_t

BLOCK_SIZE = 8192
CHUNK_SIZE = 8192

POSITION_STREAM = 0
BASIS_STREAM = 1
OUTCOME_STREAM = 2

MIN_ACCEPTANCE_RATE = 1e-3
ACCEPTANCE_WINDOW = 100_000


class Basis(IntEnum):
    NONE = 0
    WHICH_WAY = 1
    ERASER = 2
    LOCATION = 3
    LOCATION_THEN_WHICH_WAY = 4

    @property
    def label(self):
        return _BASIS_LABELS[self]

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        try:
            return cls(_BASIS_LABELS.index(text))
        except ValueError:
            raise PreconditionError("basis", f"unknown basis {text!r}; expected one of {_BASIS_LABELS}") from None


class LocationOutcome(IntEnum):
    UNMEASURED = 0
    Y = 1
    N = 2

    @property
    def label(self):
        return _LOCATION_LABELS[self]


class DetectorOutcome(IntEnum):
    UNMEASURED = 0
    FRAME0 = 1
    FRAME1 = 2
    PLUS = 3
    MINUS = 4

    @property
    def label(self):
        return _DETECTOR_LABELS[self]


_BASIS_LABELS = ["None", "WhichWay", "Eraser", "Location", "LocationThenWhichWay"]
_LOCATION_LABELS = ["U", "Y", "N"]
_DETECTOR_LABELS = ["U", "F0", "F1", "P", "M"]


@dataclass(frozen=True)
class DetectionEvent:
    index: int
    x: float
    basis: Basis
    location_outcome: LocationOutcome
    detector_outcome: DetectorOutcome


@dataclass(frozen=True)
class RngStreamSpec:
    master_seed: int
    stream_id: int = POSITION_STREAM

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise PreconditionError("master_seed", "must be an unsigned 64-bit integer")
        if not 0 <= int(self.stream_id) < 2**32:
            raise PreconditionError("stream_id", "must be an unsigned 32-bit integer")

    def substream(self, stream_id: int) -> "RngStreamSpec":
        return RngStreamSpec(self.master_seed, stream_id)

    def generator(self, block: int) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id), int(block)))
        return np.random.Generator(np.random.Philox(seq))


class MeasurementPolicy:
    """Which basis is measured in coincidence with each detection."""

    def __init__(self, probabilities):
        probs = {Basis.parse(k): float(v) for k, v in dict(probabilities).items() if float(v) > 0}
        if not probs:
            raise PreconditionError("policy", "needs at least one basis with positive probability")
        if any(p < 0 for p in probs.values()) or abs(sum(probs.values()) - 1.0) > 1e-9:
            raise PreconditionError("policy", f"probabilities must be non-negative and sum to 1, got {probs}")
        self.bases = sorted(probs)
        self.probabilities = np.array([probs[b] for b in self.bases])

    @classmethod
    def fixed(cls, basis):
        return cls({Basis.parse(basis): 1.0})

    @classmethod
    def parse(cls, text: str) -> "MeasurementPolicy":
        """``"Eraser"`` or ``"WhichWay:0.5,Eraser:0.5"``."""
        if ":" not in text:
            return cls.fixed(text.strip())
        probs = {}
        for part in text.split(","):
            name, _, p = part.partition(":")
            try:
                probs[Basis.parse(name.strip())] = float(p)
            except ValueError:
                raise PreconditionError("policy", f"bad probability in {part!r}") from None
        return cls(probs)

    @property
    def is_fixed(self):
        return len(self.bases) == 1

    def __str__(self):
        if self.is_fixed:
            return self.bases[0].label
        return ",".join(f"{b.label}:{float(p)!r}" for b, p in zip(self.bases, self.probabilities))

    def __eq__(self, other):
        return isinstance(other, MeasurementPolicy) and str(self) == str(other)

    def choose(self, u):
        """Map uniforms to basis codes."""
        if self.is_fixed:
            return np.full(len(u), int(self.bases[0]), dtype=np.int8)
        cdf = np.cumsum(self.probabilities)
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(self.bases) - 1)
        return np.asarray(self.bases, dtype=np.int8)[idx]


def check_basis(config: ExperimentConfig, basis) -> None:
    basis = Basis.parse(basis)
    if basis in (Basis.WHICH_WAY, Basis.ERASER) and config.presence_c != 1.0:
        raise PreconditionError("presence_c", f"{basis.label} measurement needs c = 1, got {config.presence_c}")
    if basis is Basis.ERASER and config.overlap_r != 0.0:
        raise PreconditionError("overlap_r", f"Eraser measurement needs orthogonal detector states (r = 0), got {config.overlap_r}")


# ---------------------------------------------------------------- positions

def _positions_block(config: ExperimentConfig, spec: RngStreamSpec, block: int, count: int) -> np.ndarray:
    """First ``count`` accepted positions of one block.

    Proposals come in fixed-size chunks, so the accepted prefix does not
    depend on ``count``.
    """
    gen = spec.generator(block)
    state = propagation_state(config)
    half_d = config.slit_separation_d / 2.0
    s_t = sigma_t(config)
    norm_sq = norm_constant(config)
    out = []
    have = proposed = accepted = 0
    while have < count:
        side = np.where(gen.random(CHUNK_SIZE) < 0.5, half_d, -half_d)
        x = side + s_t * gen.standard_normal(CHUNK_SIZE)
        u = gen.random(CHUNK_SIZE)
        # proposal density q = |g+|^2 + |g-|^2; bound constant M = 2 / N^2
        q = np.abs(gaussian_mode(x, "+", config, state)) ** 2 + np.abs(gaussian_mode(x, "-", config, state)) ** 2
        target = joint_amplitudes(x, config).density
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(q > 0, target * norm_sq / (2.0 * q), 0.0)
        if np.any(ratio > 1.0 + 1e-9):
            raise SamplerError(f"acceptance ratio {ratio.max()!r} exceeds 1: envelope bound violated")
        keep = x[u < ratio]
        out.append(keep)
        have += len(keep)
        proposed += CHUNK_SIZE
        accepted += len(keep)
        if proposed >= ACCEPTANCE_WINDOW:
            if accepted / proposed < MIN_ACCEPTANCE_RATE:
                raise SamplerError(f"acceptance rate {accepted / proposed:.2e} below {MIN_ACCEPTANCE_RATE}")
            proposed = accepted = 0
    return np.concatenate(out)[:count]


def _blocks(start, stop):
    for block in range(start // BLOCK_SIZE, (stop - 1) // BLOCK_SIZE + 1):
        b0 = block * BLOCK_SIZE
        yield block, max(start, b0) - b0, min(stop, b0 + BLOCK_SIZE) - b0


def sample_positions(config: ExperimentConfig, n: int, rng: RngStreamSpec, start: int = 0) -> np.ndarray:
    """Screen positions for event indices ``start .. start + n - 1``."""
    if n < 1:
        raise PreconditionError("n", f"need at least one event, got {n}")
    parts = [_positions_block(config, rng, block, hi)[lo:hi] for block, lo, hi in _blocks(start, start + n)]
    return np.concatenate(parts)


# ------------------------------------------------------------- measurement

@dataclass(frozen=True)
class ConditionalProbabilities:
    """Born probabilities of measurement outcomes given a hit at ``x``."""

    frame1: np.ndarray  # detector Frame1, location unmeasured
    location_y: np.ndarray
    frame1_given_y: np.ndarray
    plus: np.ndarray  # eraser outcome d_plus


def conditional_probabilities(x, config: ExperimentConfig) -> ConditionalProbabilities:
    amps = joint_amplitudes(np.atleast_1d(np.asarray(x, dtype=float)), config)
    y1, y0, n0 = amps.branch_weights
    total = y1 + y0 + n0
    # d_pm = (d1 +/- d2)/sqrt(2) = (|1> +/- |0>)/sqrt(2) in the detector frame
    plus = 0.5 * (np.abs(amps.amp_Y_1 + amps.amp_Y_0) ** 2 + n0)
    with np.errstate(invalid="ignore", divide="ignore"):
        # positions with zero density are never sampled; 0.5 keeps the arrays finite
        return ConditionalProbabilities(
            frame1=np.where(total > 0, y1 / total, 0.5),
            location_y=np.where(total > 0, (y1 + y0) / total, 0.5),
            frame1_given_y=np.where(y1 + y0 > 0, y1 / (y1 + y0), 0.5),
            plus=np.where(total > 0, plus / total, 0.5),
        )


def _measure(x, config, basis_codes, u):
    """Vectorised Born sampling of (location, detector) outcomes.

    ``u`` has shape (n, 2); column 0 drives the first measurement, column 1
    the which-way measurement that follows a Y location outcome.
    """
    probs = conditional_probabilities(x, config)
    p_frame1, p_y, p_frame1_given_y, p_plus = probs.frame1, probs.location_y, probs.frame1_given_y, probs.plus

    loc = np.zeros(len(x), dtype=np.int8)
    det = np.zeros(len(x), dtype=np.int8)
    u0, u1 = u[:, 0], u[:, 1]

    m = basis_codes == Basis.WHICH_WAY
    det[m] = np.where(u0[m] < p_frame1[m], DetectorOutcome.FRAME1, DetectorOutcome.FRAME0)

    m = basis_codes == Basis.ERASER
    det[m] = np.where(u0[m] < p_plus[m], DetectorOutcome.PLUS, DetectorOutcome.MINUS)

    m = (basis_codes == Basis.LOCATION) | (basis_codes == Basis.LOCATION_THEN_WHICH_WAY)
    is_y = u0 < p_y
    loc[m] = np.where(is_y[m], LocationOutcome.Y, LocationOutcome.N)

    m = (basis_codes == Basis.LOCATION_THEN_WHICH_WAY) & is_y
    det[m] = np.where(u1[m] < p_frame1_given_y[m], DetectorOutcome.FRAME1, DetectorOutcome.FRAME0)
    return loc, det


def measure_conditional(x: float, config: ExperimentConfig, basis, rng: np.random.Generator):
    """Draw ``(location_outcome, detector_outcome)`` given a hit at ``x``."""
    basis = Basis.parse(basis)
    check_basis(config, basis)
    loc, det = _measure(np.array([float(x)]), config, np.array([int(basis)]), rng.random((1, 2)))
    return LocationOutcome(int(loc[0])), DetectorOutcome(int(det[0]))


# ------------------------------------------------------------------ events

@dataclass
class EventTable:
    """Column-oriented list of detection events, ordered by index."""

    index: np.ndarray
    x: np.ndarray
    basis: np.ndarray
    location: np.ndarray
    detector: np.ndarray

    def __len__(self):
        return len(self.index)

    def __getitem__(self, i) -> DetectionEvent:
        return DetectionEvent(
            int(self.index[i]),
            float(self.x[i]),
            Basis(int(self.basis[i])),
            LocationOutcome(int(self.location[i])),
            DetectorOutcome(int(self.detector[i])),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, EventTable):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("index", "x", "basis", "location", "detector")
        )

    def select(self, mask) -> "EventTable":
        return EventTable(self.index[mask], self.x[mask], self.basis[mask], self.location[mask], self.detector[mask])

    @classmethod
    def concat(cls, tables) -> "EventTable":
        tables = list(tables)
        return cls(*(np.concatenate([getattr(t, f) for t in tables])
                     for f in ("index", "x", "basis", "location", "detector")))

    @classmethod
    def from_events(cls, events) -> "EventTable":
        events = list(events)
        return cls(
            np.array([e.index for e in events], dtype=np.int64),
            np.array([e.x for e in events], dtype=float),
            np.array([int(e.basis) for e in events], dtype=np.int8),
            np.array([int(e.location_outcome) for e in events], dtype=np.int8),
            np.array([int(e.detector_outcome) for e in events], dtype=np.int8),
        )

    CSV_HEADER = ("index", "x", "basis", "location_outcome", "detector_outcome")

    def to_csv(self, path) -> None:
        b = np.asarray(_BASIS_LABELS, dtype=object)[self.basis]
        lo = np.asarray(_LOCATION_LABELS, dtype=object)[self.location]
        de = np.asarray(_DETECTOR_LABELS, dtype=object)[self.detector]
        lines = [",".join(self.CSV_HEADER)]
        lines.extend(f"{i},{x:.17g},{bb},{ll},{dd}" for i, x, bb, ll, dd in zip(self.index.tolist(), self.x.tolist(), b, lo, de))
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def read_csv(cls, path) -> "EventTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            np.array([int(r["index"]) for r in rows], dtype=np.int64),
            np.array([float(r["x"]) for r in rows], dtype=float),
            np.array([_BASIS_LABELS.index(r["basis"]) for r in rows], dtype=np.int8),
            np.array([_LOCATION_LABELS.index(r["location_outcome"]) for r in rows], dtype=np.int8),
            np.array([_DETECTOR_LABELS.index(r["detector_outcome"]) for r in rows], dtype=np.int8),
        )


def _as_policy(policy) -> MeasurementPolicy:
    if isinstance(policy, MeasurementPolicy):
        return policy
    if isinstance(policy, dict):
        return MeasurementPolicy(policy)
    if isinstance(policy, str) and ":" in policy:
        return MeasurementPolicy.parse(policy)
    return MeasurementPolicy.fixed(policy)


def generate_range(config: ExperimentConfig, start: int, stop: int, policy, seed: int) -> EventTable:
    """Events with indices in ``[start, stop)`` of the run keyed by ``seed``."""
    policy = _as_policy(policy)
    for b in policy.bases:
        check_basis(config, b)
    root = RngStreamSpec(seed)
    xs = sample_positions(config, stop - start, root.substream(POSITION_STREAM), start=start)
    bases, uniforms = [], []
    for block, lo, hi in _blocks(start, stop):
        bases.append(policy.choose(root.substream(BASIS_STREAM).generator(block).random(BLOCK_SIZE)[lo:hi]))
        uniforms.append(root.substream(OUTCOME_STREAM).generator(block).random((BLOCK_SIZE, 2))[lo:hi])
    basis_codes = np.concatenate(bases)
    loc, det = _measure(xs, config, basis_codes, np.concatenate(uniforms))
    return EventTable(np.arange(start, stop, dtype=np.int64), xs, basis_codes, loc, det)


def run_experiment(config: ExperimentConfig, n: int, policy="None", seed: int = 0, n_tasks: int = 1) -> EventTable:
    """Generate ``n`` detection events.

    ``n_tasks > 1`` splits the index range into contiguous pieces generated
    concurrently; the merged table equals the single-task one.
    """
    if n < 1:
        raise PreconditionError("n", f"need at least one event, got {n}")
    policy = _as_policy(policy)
    if n_tasks <= 1:
        return generate_range(config, 0, n, policy, seed)
    bounds = np.linspace(0, n, min(n_tasks, n) + 1).astype(int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
        parts = list(pool.map(lambda ab: generate_range(config, ab[0], ab[1], policy, seed), ranges))
    return EventTable.concat(parts)


def sort_subensembles(events) -> dict:
    """Partition event positions by ``(basis, location_outcome, detector_outcome)``."""
    table = events if isinstance(events, EventTable) else EventTable.from_events(events)
    keys = table.basis.astype(np.int64) * 64 + table.location.astype(np.int64) * 8 + table.detector
    out = {}
    for key in np.unique(keys).tolist():
        mask = keys == key
        label = (Basis(key // 64), LocationOutcome((key // 8) % 8), DetectorOutcome(key % 8))
        out[label] = table.x[mask]
    return out
