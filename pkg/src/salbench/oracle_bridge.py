"""Serve oracle predictions over the bridge line protocol.

Run as ``python -m salbench.oracle_bridge --manifest DIR --function ssin``.
The wire protocol carries only pixels, so the child identifies which manifest
scene a (possibly occluded) image came from by exact footprint matching:
every object must be fully present or fully blanked and no stray nonzero
pixels may remain.  Full-object occlusions guarantee a match; an all-black
image matches any scene with all objects absent, which is harmless because
the function value then depends only on the all-zero counts.

This doubles as the reference implementation of the protocol's child side.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys

import numpy as np

from .attribution import attribution_function
from .datagen import load_dataset
from .scene import object_mask


class _IndexedScene:
    def __init__(self, scene):
        self.scene = scene
        self.mask_indices = [
            np.nonzero(object_mask(obj, scene.width, scene.height))
            for obj in scene.objects
        ]
        self.footprints = np.array([idx[0].size for idx in self.mask_indices])
        n = len(self.footprints)
        combos = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
        self.subset_sums = {int(s) for s in (combos * self.footprints).sum(axis=1)}

    def match(self, image) -> list | None:
        """Pattern counts if the image is an occlusion state of this scene."""
        if image.shape != (self.scene.height, self.scene.width):
            return None
        counts = [0] * len(self.scene.pattern_catalog)
        present_pixels = 0
        for obj, idx in zip(self.scene.objects, self.mask_indices):
            pixels = image[idx]
            if np.all(pixels == obj.intensity):
                counts[obj.pattern_index] += 1
                present_pixels += idx[0].size
            elif not np.all(pixels == 0):
                return None
        if np.count_nonzero(image) != present_pixels:
            return None
        return counts


def _decode_image(spec) -> np.ndarray:
    data = base64.b64decode(spec["pix_b64"])
    return np.frombuffer(data, dtype=np.uint8).reshape(spec["h"], spec["w"])


def serve(manifest_path: str, function_kind: str,
          stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    function = attribution_function(function_kind)
    dataset = load_dataset(manifest_path)
    indexed = [_IndexedScene(dataset.load(i).scene) for i in range(len(dataset))]
    by_count: dict = {}
    for entry in indexed:
        for total in entry.subset_sums:
            by_count.setdefault(total, []).append(entry)

    handshake = {
        "proto": 1,
        "name": f"oracle-bridge-{function_kind}",
        "is_classifier": function.is_classifier,
        "raw_logit": False,
    }
    stdout.write(json.dumps(handshake) + "\n")
    stdout.flush()

    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            values = []
            for spec in request["images"]:
                image = _decode_image(spec)
                counts = None
                for entry in by_count.get(int(np.count_nonzero(image)), []):
                    counts = entry.match(image)
                    if counts is not None:
                        break
                if counts is None:
                    raise ValueError("image does not match any manifest scene")
                values.append(float(function.evaluate(counts)))
            reply = {"id": request["id"], "values": values}
        except Exception as exc:  # noqa: BLE001 - protocol demands an error reply
            reply = {"id": request.get("id", -1) if isinstance(request, dict) else -1,
                     "error": str(exc)}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--function", required=True, choices=["ssin", "suum", "class"])
    args = parser.parse_args(argv)
    return serve(args.manifest, args.function)


if __name__ == "__main__":
    sys.exit(main())
