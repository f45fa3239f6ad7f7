"""Out-of-process objective evaluation over a line-delimited JSON pipe.

The child program speaks a three-part protocol on stdin/stdout:

* on startup it prints one handshake line ``{"d": <int>, "m": <int>}``
  announcing its design and objective dimensions;
* for each request line ``{"id": <int>, "x": [<float>, ...]}`` it prints
  exactly one reply line ``{"id": <int>, "y": [<float>, ...]}`` echoing
  the request id;
* it exits when stdin closes.

Floats travel as JSON numbers; Python emits the shortest round-trip
representation, so values survive the pipe bit for bit and an external
evaluator that computes the same arithmetic as an in-process one yields
identical histories.

Every failure mode (timeout, malformed line, id mismatch, early exit)
raises :class:`EvaluatorError`. The per-reply timeout defaults to 300
seconds and can be overridden with the ``CAS_LMS_TIMEOUT_S`` environment
variable or the ``timeout_s`` argument.
"""

from __future__ import annotations

import json
import os
import queue
import subprocess
import threading

import numpy as np

from .errors import EvaluatorError, InputError
from .problems import ProblemDef

DEFAULT_TIMEOUT_S = 300.0
TIMEOUT_ENV_VAR = "CAS_LMS_TIMEOUT_S"


def _env_timeout() -> float:
    raw = os.environ.get(TIMEOUT_ENV_VAR)
    if raw is None:
        return DEFAULT_TIMEOUT_S
    try:
        value = float(raw)
    except ValueError:
        raise EvaluatorError(f"{TIMEOUT_ENV_VAR} must be a number, got {raw!r}")
    if value <= 0:
        raise EvaluatorError(f"{TIMEOUT_ENV_VAR} must be positive")
    return value


class ExternalEvaluator:
    """Client side of the evaluator protocol. Use as a context manager."""

    def __init__(self, cmd: list[str], timeout_s: float | None = None):
        if not cmd:
            raise InputError("evaluator command must be nonempty")
        self.cmd = list(cmd)
        self.timeout_s = _env_timeout() if timeout_s is None else float(timeout_s)
        if self.timeout_s <= 0:
            raise InputError("timeout_s must be positive")
        self._next_id = 0
        try:
            self._child = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as err:
            raise EvaluatorError(f"could not start evaluator {self.cmd}: {err}")
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        handshake = self._read_message("handshake")
        if set(handshake) != {"d", "m"}:
            raise EvaluatorError(f"handshake must have exactly keys d and m, got {handshake}")
        d, m = handshake["d"], handshake["m"]
        if not all(type(v) is int and v > 0 for v in (d, m)):
            raise EvaluatorError(f"handshake dimensions must be positive ints, got {handshake}")
        self.d = d
        self.m = m

    def _pump(self):
        assert self._child.stdout is not None
        for line in self._child.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _read_message(self, what: str) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            self._kill()
            raise EvaluatorError(f"timed out after {self.timeout_s}s waiting for {what}")
        if line is None:
            code = self._child.wait()
            raise EvaluatorError(f"evaluator exited with code {code} before sending {what}")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as err:
            self._kill()
            raise EvaluatorError(f"malformed {what} line {line!r}: {err}")
        if not isinstance(message, dict):
            self._kill()
            raise EvaluatorError(f"{what} must be a JSON object, got {line!r}")
        return message

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.d:
            raise InputError(f"design has {x.size} coords, evaluator expects {self.d}")
        if self._child.poll() is not None:
            raise EvaluatorError(f"evaluator already exited with code {self._child.returncode}")
        request_id = self._next_id
        self._next_id += 1
        payload = json.dumps({"id": request_id, "x": [float(v) for v in x]})
        try:
            assert self._child.stdin is not None
            self._child.stdin.write(payload + "\n")
            self._child.stdin.flush()
        except (BrokenPipeError, OSError):
            code = self._child.wait()
            raise EvaluatorError(f"evaluator pipe closed (exit code {code})")
        reply = self._read_message(f"reply to id {request_id}")
        if reply.get("id") != request_id:
            self._kill()
            raise EvaluatorError(f"reply id {reply.get('id')!r} does not match request {request_id}")
        y = reply.get("y")
        if not isinstance(y, list) or len(y) != self.m:
            self._kill()
            raise EvaluatorError(f"reply must carry a {self.m}-element y list, got {reply}")
        arr = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(arr)):
            self._kill()
            raise EvaluatorError(f"reply contains non-finite objectives: {y}")
        return arr

    def _kill(self):
        if self._child.poll() is None:
            self._child.kill()
            self._child.wait()

    def close(self):
        if self._child.poll() is None:
            try:
                if self._child.stdin is not None:
                    self._child.stdin.close()
                self._child.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._kill()

    def __enter__(self) -> "ExternalEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_problem(
    cmd: list[str],
    bounds,
    thresholds,
    resolution: float,
    timeout_s: float | None = None,
    name: str = "external",
) -> tuple[ProblemDef, ExternalEvaluator]:
    """Wrap a child evaluator as a ProblemDef.

    The caller owns the returned evaluator and should close it when the
    run finishes. The handshake dimensions must agree with ``bounds`` and
    ``thresholds``.
    """
    evaluator = ExternalEvaluator(cmd, timeout_s=timeout_s)
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if bounds.shape[0] != evaluator.d:
        evaluator.close()
        raise EvaluatorError(
            f"evaluator announced d={evaluator.d} but bounds describe {bounds.shape[0]} dims"
        )
    if thresholds.size != evaluator.m:
        evaluator.close()
        raise EvaluatorError(
            f"evaluator announced m={evaluator.m} but {thresholds.size} thresholds given"
        )
    def evaluate(x):
        return evaluator.evaluate(problem.check_design(x))

    problem = ProblemDef(
        name=name,
        bounds=bounds,
        thresholds=thresholds,
        resolution=resolution,
        evaluate=evaluate,
        evaluate_batch=None,
    )
    return problem, evaluator
