"""Random sources used by every randomized operation.

All randomized code takes an explicit RNG handle.  `Rng` is backed by the
counter-based Philox bit generator so streams can be split deterministically;
`ScriptedRng` replays a fixed list of draws, which lets tests force specific
walk paths and sampling outcomes.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable

import numpy as np

_BUFFER = 8192


class Rng:
    """Buffered uniform draws over a Philox stream.

    Scalar draws from numpy carry a large per-call overhead, so uniforms are
    pulled in blocks and served from a Python list.  Short-lived streams can
    use a small ``buffer``.
    """

    def __init__(self, seed: int | np.random.SeedSequence | None = None, buffer: int = _BUFFER) -> None:
        if buffer < 1:
            raise ValueError("buffer must hold at least one draw")
        self._block = buffer
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.Philox(self._seq))
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        pos = self._pos
        if pos >= len(self._buf):
            self._buf = self._gen.random(self._block).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        i = int(self.random() * n)
        return i if i < n else n - 1

    def binomial(self, n: int, p: float) -> int:
        if n <= 0 or p <= 0.0:
            return 0
        if p >= 1.0:
            return n
        return int(self._gen.binomial(n, p))

    def spawn(self, count: int) -> list["Rng"]:
        """Independent child streams."""
        return [Rng(child, self._block) for child in self._seq.spawn(count)]


class ScriptExhausted(AssertionError):
    pass


class ScriptedRng:
    """Replays a script of ``(kind, value)`` draws.

    ``kind`` is one of ``"random"``, ``"below"``, ``"binomial"``.  A draw of
    the wrong kind, or running past the end of the script, raises so that a
    scenario test fails loudly instead of silently diverging.
    """

    def __init__(self, script: Iterable[tuple[str, float | int]]) -> None:
        self._script = deque(script)
        self.log: list[tuple[str, object]] = []

    def _next(self, kind: str, arg: object):
        if not self._script:
            raise ScriptExhausted(f"script exhausted at {kind}({arg})")
        got, value = self._script.popleft()
        if got != kind:
            raise AssertionError(f"scripted {got!r} but code drew {kind}({arg})")
        self.log.append((kind, arg))
        return value

    def random(self) -> float:
        return float(self._next("random", None))

    def randbelow(self, n: int) -> int:
        value = int(self._next("below", n))
        if not 0 <= value < n:
            raise AssertionError(f"scripted index {value} outside [0, {n})")
        return value

    def binomial(self, n: int, p: float) -> int:
        value = int(self._next("binomial", (n, p)))
        if not 0 <= value <= max(n, 0):
            raise AssertionError(f"scripted binomial {value} outside [0, {n}]")
        return value

    def remaining(self) -> int:
        return len(self._script)


def as_rng(rng: Rng | ScriptedRng | int | None) -> Rng | ScriptedRng:
    if rng is None or isinstance(rng, int):
        return Rng(rng)
    return rng
