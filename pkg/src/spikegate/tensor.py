"""Dense tensors and named parameter collections.

The dense-tensor currency of the toolkit is the C-contiguous float64
``numpy.ndarray`` (shape + row-major data). Helpers here enforce the two
invariants every kernel relies on: values stay finite and gradient shapes
mirror parameter shapes exactly. The module also owns the binary checkpoint
container.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, NonFiniteError

CHECKPOINT_MAGIC = b"SGWT"
CHECKPOINT_VERSION = 1


def as_tensor(values) -> np.ndarray:
    """Coerce to a C-contiguous float64 array, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    require_finite(arr)
    return arr


def require_finite(arr: np.ndarray, context: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{context} contains NaN or Inf")
    return arr


class ParameterSet:
    """Named parameters with a parallel, shape-mirrored gradient map.

    Keys are layer-id paths (``"0.weight"``, ``"3.main.1.gamma"``). Entries
    whose name starts with a prefix in :attr:`NON_TRAINABLE_PREFIXES` are
    carried through checkpoints and updates untouched (per-layer thresholds,
    batchnorm running statistics).
    """

    NON_TRAINABLE_PREFIXES = ("thresh.", "running.")

    def __init__(self, params: dict[str, np.ndarray] | None = None):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        if params:
            for name, value in params.items():
                self.add(name, value)

    def add(self, name: str, value) -> None:
        arr = as_tensor(value)
        self.params[name] = arr
        self.grads[name] = np.zeros_like(arr)

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def accumulate_grad(self, name: str, delta: np.ndarray) -> None:
        self.grads[name] += delta

    def trainable_names(self) -> list[str]:
        return [
            n
            for n in self.params
            if not n.startswith(self.NON_TRAINABLE_PREFIXES)
        ]

    def is_trainable(self, name: str) -> bool:
        return not name.startswith(self.NON_TRAINABLE_PREFIXES)

    def copy(self) -> "ParameterSet":
        out = ParameterSet()
        for name, value in self.params.items():
            out.add(name, value.copy())
            out.grads[name][...] = self.grads[name]
        return out

    def n_params(self, trainable_only: bool = False) -> int:
        names = self.trainable_names() if trainable_only else self.params
        return int(sum(self.params[n].size for n in names))

    def flat(self, names=None) -> np.ndarray:
        names = list(names) if names is not None else sorted(self.params)
        if not names:
            return np.zeros(0)
        return np.concatenate([self.params[n].ravel() for n in names])

    def flat_grads(self, names=None) -> np.ndarray:
        names = list(names) if names is not None else sorted(self.params)
        if not names:
            return np.zeros(0)
        return np.concatenate([self.grads[n].ravel() for n in names])

    def check_mirror(self) -> None:
        for name, p in self.params.items():
            g = self.grads[name]
            if g.shape != p.shape:
                raise ValueError(
                    f"gradient shape {g.shape} != parameter shape {p.shape} "
                    f"for {name!r}"
                )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParameterSet):
            return NotImplemented
        if set(self.params) != set(other.params):
            return False
        return all(
            np.array_equal(self.params[n], other.params[n]) for n in self.params
        )

    def __repr__(self) -> str:
        return f"ParameterSet({len(self.params)} entries, {self.n_params()} scalars)"


def save_checkpoint(params: ParameterSet, path) -> None:
    """Write the little-endian SGWT container (sorted by entry name)."""
    names = sorted(params.params)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(names)))
        for name in names:
            arr = params.params[name]
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise FormatError(f"entry name too long: {name!r}")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for extent in arr.shape:
                fh.write(struct.pack("<I", extent))
            fh.write(arr.astype("<f8").tobytes(order="C"))


def load_checkpoint(path) -> ParameterSet:
    """Read an SGWT container back into a ParameterSet (gradients zeroed)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    view = memoryview(raw)
    if raw[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"bad checkpoint magic {raw[:4]!r}")
    if len(raw) < 12:
        raise FormatError("truncated checkpoint header")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    offset = 12
    out = ParameterSet()
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", raw, offset)
            offset += 2
            name = raw[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", raw, offset)
            offset += 1
            shape = struct.unpack_from(f"<{rank}I", raw, offset)
            offset += 4 * rank
            n = int(np.prod(shape, dtype=np.int64)) if rank else 1
            payload = np.frombuffer(view, dtype="<f8", count=n, offset=offset)
            offset += 8 * n
        except (struct.error, ValueError) as exc:
            raise FormatError(f"truncated checkpoint entry: {exc}") from exc
        out.add(name, payload.reshape(shape).astype(np.float64))
    if offset != len(raw):
        raise FormatError("trailing bytes after last checkpoint entry")
    return out
