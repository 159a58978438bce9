"""Safety oracles: map a complete solution to an unsafe/safe verdict.

Built-in oracles are pure functions of (solution, seed) and may be called
from many threads at once. The external-process adapter talks to child
processes over a JSON line protocol, one request in flight per child.
"""
from __future__ import annotations

import hashlib
import json
import queue
import shlex
import subprocess
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distance import HeterogeneousDistance
from .genotypes import CompleteSolution, ParamSpec, SearchSpaceSpec, solution_to_json


class OracleError(RuntimeError):
    """An evaluation could not produce a verdict."""


class SafetyOracle(ABC):
    name = "oracle"

    def __init__(self, space: SearchSpaceSpec):
        self.space = space

    @abstractmethod
    def evaluate(self, solution: CompleteSolution) -> bool:
        """True iff the solution violates the safety requirement."""

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def hash_uniform(key: Sequence[float], seed: int) -> float:
    """Deterministic uniform [0, 1) number from a gene vector and a seed."""
    payload = np.asarray(key, dtype="<f8").tobytes() + int(seed).to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little") / 2.0**64


@dataclass(frozen=True)
class Region:
    center: tuple
    radius: float
    unsafe_prob: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not 0 <= self.unsafe_prob <= 1:
            raise ValueError("unsafe_prob must be in [0, 1]")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")


class SyntheticRegionOracle(SafetyOracle):
    """Probabilistic unsafe regions around fixed centres.

    A solution inside a region (normalised distance to its centre <= radius)
    is unsafe with that region's probability, otherwise with the background
    probability. Overlapping regions use the largest probability. The coin is
    a hash of the gene vector and ``noise_seed``, so verdicts never depend on
    call order.
    """

    name = "synthetic"

    def __init__(self, space, regions, background_prob=0.0, noise_seed=0, weighting="count"):
        super().__init__(space)
        self.regions = [r if isinstance(r, Region) else Region(**r) for r in regions]
        if not 0 <= background_prob <= 1:
            raise ValueError("background_prob must be in [0, 1]")
        for r in self.regions:
            if len(r.center) != space.dimensionality:
                raise ValueError("region centre does not match the space dimensionality")
        self.background_prob = background_prob
        self.noise_seed = int(noise_seed)
        self.metric = HeterogeneousDistance(space.layout, weighting)
        self._centers = np.array([r.center for r in self.regions]).reshape(-1, space.dimensionality)

    def unsafe_probability(self, key) -> float:
        prob = None
        if len(self.regions):
            d = self.metric.pairwise(np.asarray(key, dtype=float)[None, :], self._centers)[0]
            inside = [r.unsafe_prob for r, di in zip(self.regions, d) if di <= r.radius]
            if inside:
                prob = max(inside)
        return self.background_prob if prob is None else prob

    def evaluate(self, solution: CompleteSolution) -> bool:
        return hash_uniform(solution.key, self.noise_seed) < self.unsafe_probability(solution.key)


def mtq_space() -> SearchSpaceSpec:
    return SearchSpaceSpec(
        (ParamSpec.numeric("x", 0.0, 1.0),),
        custom_mlco_params=(ParamSpec.numeric("y", 0.0, 1.0),),
    )


class MTQOracle(SafetyOracle):
    """Maximum of two quadratics, thresholded.

    ``f(x, y) = max_i h_i * (1 - 16 (x - cx_i)^2 / s_i - 16 (y - cy_i)^2 / s_i)``;
    a point is unsafe iff ``f >= threshold``.
    """

    name = "mtq"

    def __init__(self, h1=50.0, h2=150.0, s1=1.6, s2=1 / 32, center1=(0.75, 0.75),
                 center2=(0.25, 0.25), threshold=25.0, space=None):
        super().__init__(space if space is not None else mtq_space())
        if self.space.dimensionality != 2:
            raise ValueError("MTQ needs a 2-dimensional space")
        if min(s1, s2) <= 0:
            raise ValueError("peak widths must be positive")
        self.peaks = ((h1, s1, tuple(center1)), (h2, s2, tuple(center2)))
        self.threshold = threshold

    def value(self, x: float, y: float) -> float:
        return max(h * (1 - 16 * (x - cx) ** 2 / s - 16 * (y - cy) ** 2 / s)
                   for h, s, (cx, cy) in self.peaks)

    def evaluate(self, solution: CompleteSolution) -> bool:
        x, y = solution.key
        return self.value(x, y) >= self.threshold


def mtq_oracle(h1, h2, s1, s2, center1, center2, threshold=25.0) -> MTQOracle:
    return MTQOracle(h1, h2, s1, s2, center1, center2, threshold)


def onemax_space(scenario_bits: int, mlco_bits: int) -> SearchSpaceSpec:
    return SearchSpaceSpec(
        tuple(ParamSpec.categorical(f"s{i}", 2) for i in range(scenario_bits)),
        custom_mlco_params=tuple(ParamSpec.categorical(f"m{i}", 2) for i in range(mlco_bits)),
    )


class OnemaxOracle(SafetyOracle):
    """Unsafe iff the number of set bits reaches ``threshold``."""

    name = "onemax"

    def __init__(self, space: SearchSpaceSpec, threshold: int):
        super().__init__(space)
        if not space.layout.categorical.all() or (space.layout.cardinality != 2).any():
            raise ValueError("onemax needs a space of binary categorical genes")
        self.threshold = threshold

    def evaluate(self, solution: CompleteSolution) -> bool:
        return sum(solution.key) >= self.threshold


class _Child:
    def __init__(self, argv):
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, encoding="utf-8", bufsize=1,
        )
        self.lines: queue.Queue = queue.Queue()
        threading.Thread(target=self._pump, daemon=True).start()

    def _pump(self):
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)

    def kill(self):
        if self.proc.poll() is None:
            self.proc.kill()
        self.proc.wait()


class ExternalProcessOracle(SafetyOracle):
    """Delegates evaluation to child processes speaking a JSON line protocol.

    Request: the canonical solution JSON on one line. Reply: one line
    ``{"is_unsafe": true|false}``. Up to ``pool_size`` children are started
    on demand; each serves one request at a time. Any failure (exit, timeout,
    malformed reply) raises ``OracleError`` and discards that child.
    """

    name = "external"

    def __init__(self, command, space: SearchSpaceSpec, timeout: float = 60.0, pool_size: int = 1):
        super().__init__(space)
        self.command = command
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self.pool_size = max(1, int(pool_size))
        self._idle: queue.Queue = queue.Queue()
        self._started = 0
        self._lock = threading.Lock()
        self._children: list[_Child] = []

    def _acquire(self) -> _Child:
        try:
            return self._idle.get_nowait()
        except queue.Empty:
            pass
        with self._lock:
            if self._started < self.pool_size:
                self._started += 1
                try:
                    child = _Child(self.argv)
                except OSError as exc:
                    self._started -= 1
                    raise OracleError(f"cannot start {self.command!r}: {exc}") from exc
                self._children.append(child)
                return child
        return self._idle.get()

    def _discard(self, child: _Child) -> None:
        child.kill()
        with self._lock:
            self._started -= 1
            if child in self._children:
                self._children.remove(child)

    def evaluate(self, solution: CompleteSolution) -> bool:
        child = self._acquire()
        request = json.dumps(solution_to_json(solution, self.space), separators=(",", ":"))
        try:
            child.proc.stdin.write(request + "\n")
            child.proc.stdin.flush()
            line = child.lines.get(timeout=self.timeout)
        except queue.Empty:
            self._discard(child)
            raise OracleError(f"oracle timed out after {self.timeout}s") from None
        except (BrokenPipeError, OSError) as exc:
            self._discard(child)
            raise OracleError(f"oracle process failed: {exc}") from exc
        if line is None:
            code = child.proc.wait()
            self._discard(child)
            raise OracleError(f"oracle process exited with status {code}")
        try:
            reply = json.loads(line)
            verdict = reply["is_unsafe"]
            if not isinstance(verdict, bool):
                raise TypeError("is_unsafe must be a boolean")
        except (ValueError, KeyError, TypeError) as exc:
            self._discard(child)
            raise OracleError(f"malformed oracle reply {line.strip()!r}: {exc}") from exc
        self._idle.put(child)
        return verdict

    def close(self) -> None:
        with self._lock:
            children, self._children = self._children, []
            self._started = 0
        for child in children:
            if child.proc.stdin:
                try:
                    child.proc.stdin.close()
                except OSError:
                    pass
            child.kill()
        self._idle = queue.Queue()


def external_process_oracle(command, timeout, space, pool_size=1) -> ExternalProcessOracle:
    return ExternalProcessOracle(command, space, timeout=timeout, pool_size=pool_size)
