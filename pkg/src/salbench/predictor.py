"""Black-box predictors: the exact function-as-predictor oracle and the
wire bridge to external trained models.

The bridge speaks newline-delimited JSON over a child process's stdin/stdout:

    handshake (child -> parent, first line):
        {"proto": 1, "name": str, "is_classifier": bool, "raw_logit": bool}
    request (parent -> child):
        {"id": int, "images": [{"w": int, "h": int, "pix_b64": base64}, ...]}
    response (child -> parent):
        {"id": int, "values": [float, ...]}

Pixel payloads are row-major uint8 bytes.  Request ids are strictly
increasing and responses must arrive in request order.
"""

from __future__ import annotations

import base64
import json
import queue
import shlex
import subprocess
import threading
from abc import ABC, abstractmethod

import numpy as np

from .attribution import AttributionFunction
from .scene import Scene, object_mask

PROTO_VERSION = 1


class BridgeError(RuntimeError):
    """Base class for bridge transport failures."""


class BridgeProcessError(BridgeError):
    """The child process died or could not be started."""


class BridgeProtocolError(BridgeError):
    """The child sent something that violates the line protocol."""


class BridgeTimeoutError(BridgeError):
    """The child did not answer within the configured timeout."""


class Predictor(ABC):
    """Deterministic scalar predictor over grayscale images."""

    name: str = "predictor"
    output_range: tuple[float, float] = (0.0, 1.0)
    is_classifier: bool = False

    @abstractmethod
    def predict(self, image: np.ndarray) -> float:
        ...

    def predict_batch(self, images: list[np.ndarray]) -> list[float]:
        return [self.predict(image) for image in images]


class OraclePredictor(Predictor):
    """Evaluates the attribution function on pattern counts recovered from pixels.

    An object counts as present when at least ``presence_threshold`` of its
    footprint still shows the object's intensity; with the explainer's
    full-object occlusions that fraction is always exactly 0 or 1.
    """

    def __init__(self, scene: Scene, function: AttributionFunction,
                 presence_threshold: float = 0.5):
        if not 0.0 < presence_threshold <= 1.0:
            raise ValueError("presence_threshold must be in (0, 1]")
        self.scene = scene
        self.function = function
        self.presence_threshold = presence_threshold
        self.name = f"oracle-{function.kind.value}"
        self.is_classifier = function.is_classifier
        self._mask_indices = [
            np.nonzero(object_mask(obj, scene.width, scene.height))
            for obj in scene.objects
        ]

    def predict(self, image: np.ndarray) -> float:
        if image.shape != (self.scene.height, self.scene.width):
            raise ValueError(
                f"image shape {image.shape} does not match scene "
                f"{(self.scene.height, self.scene.width)}"
            )
        counts = [0] * len(self.scene.pattern_catalog)
        for obj, idx in zip(self.scene.objects, self._mask_indices):
            at_intensity = np.count_nonzero(image[idx] == obj.intensity)
            if at_intensity / idx[0].size >= self.presence_threshold:
                counts[obj.pattern_index] += 1
        return float(self.function.evaluate(counts))


class BridgePredictor(Predictor):
    """Client side of the line protocol; one child process, serialized requests."""

    def __init__(self, command: str | list[str], timeout: float = 60.0,
                 max_batch: int = 64):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self.max_batch = max_batch
        self._proc = None
        self._lines: queue.Queue = queue.Queue()
        self._reader = None
        self._next_id = 0
        self._lock = threading.Lock()
        self.raw_logit = False

    def start(self) -> None:
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BridgeProcessError(f"could not launch bridge: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        handshake = self._next_line()
        try:
            meta = json.loads(handshake)
        except json.JSONDecodeError as exc:
            raise BridgeProtocolError(f"bad handshake line: {handshake!r}") from exc
        if meta.get("proto") != PROTO_VERSION:
            raise BridgeProtocolError(f"unsupported protocol version: {meta.get('proto')}")
        self.name = str(meta.get("name", "bridge"))
        self.is_classifier = bool(meta.get("is_classifier", False))
        self.raw_logit = bool(meta.get("raw_logit", False))

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=5)
        except Exception:
            self._proc.kill()
        self._proc = None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_loop(self):
        proc = self._proc
        for line in proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _next_line(self) -> str:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise BridgeTimeoutError(f"no reply from bridge within {self.timeout}s")
        if line is None:
            code = self._proc.poll() if self._proc else None
            raise BridgeProcessError(f"bridge process exited (code {code})")
        return line

    def predict(self, image: np.ndarray) -> float:
        return self.predict_batch([image])[0]

    def predict_batch(self, images: list[np.ndarray]) -> list[float]:
        if self._proc is None:
            self.start()
        values = []
        with self._lock:
            for lo in range(0, len(images), self.max_batch):
                values.extend(self._request(images[lo : lo + self.max_batch]))
        return values

    def _request(self, images) -> list[float]:
        request_id = self._next_id
        self._next_id += 1
        payload = {
            "id": request_id,
            "images": [
                {
                    "w": int(img.shape[1]),
                    "h": int(img.shape[0]),
                    "pix_b64": base64.b64encode(
                        np.ascontiguousarray(img, dtype=np.uint8).tobytes()
                    ).decode("ascii"),
                }
                for img in images
            ],
        }
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeProcessError(f"bridge stdin closed: {exc}") from exc
        line = self._next_line()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeProtocolError(f"bad response line: {line!r}") from exc
        if reply.get("id") != request_id:
            raise BridgeProtocolError(
                f"response id {reply.get('id')} does not match request id {request_id}"
            )
        values = reply.get("values")
        if not isinstance(values, list) or len(values) != len(images):
            raise BridgeProtocolError(
                f"expected {len(images)} values, got {values!r}"
            )
        return [float(v) for v in values]
