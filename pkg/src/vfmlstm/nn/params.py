"""Flat parameter storage with named, shaped views."""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np


class ParamSet:
    """All trainable tensors of a network packed into one float64 vector.

    Each named tensor is a reshaped view into ``flat``, so optimizers and
    gradient checks can work on the vector while layers see matrices.
    """

    def __init__(self, specs: Sequence[tuple[str, tuple[int, ...]]], flat: np.ndarray | None = None):
        self.names = [name for name, _ in specs]
        if len(set(self.names)) != len(self.names):
            raise ValueError("parameter names must be unique")
        self.shapes = {name: tuple(int(d) for d in shape) for name, shape in specs}
        self._offsets = {}
        pos = 0
        for name in self.names:
            size = int(np.prod(self.shapes[name], dtype=np.int64))
            self._offsets[name] = (pos, pos + size)
            pos += size
        if flat is None:
            flat = np.zeros(pos, dtype=np.float64)
        elif flat.shape != (pos,) or flat.dtype != np.float64:
            raise ValueError(f"flat vector must be float64 of length {pos}")
        self.flat = flat
        self._views = {name: self._make_view(name) for name in self.names}

    def _make_view(self, name: str) -> np.ndarray:
        lo, hi = self._offsets[name]
        return self.flat[lo:hi].reshape(self.shapes[name])

    @property
    def size(self) -> int:
        return self.flat.size

    def specs(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(name, self.shapes[name]) for name in self.names]

    def slice_of(self, name: str) -> slice:
        lo, hi = self._offsets[name]
        return slice(lo, hi)

    def zeros_like(self) -> "ParamSet":
        return ParamSet(self.specs())

    def copy(self) -> "ParamSet":
        return ParamSet(self.specs(), self.flat.copy())

    def __getitem__(self, name: str) -> np.ndarray:
        return self._views[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def items(self):
        return ((name, self._views[name]) for name in self.names)

    def __len__(self) -> int:
        return len(self.names)
