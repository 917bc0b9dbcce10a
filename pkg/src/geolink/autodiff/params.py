"""Named trainable parameters with gradient buffers and optimizer moments."""
from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .tensor import ShapeError, Tensor


class ParamSet:
    """Ordered name -> :class:`Tensor` map.

    ``state`` holds optimizer bookkeeping: step counter ``t`` and the AdamW
    first/second moment arrays keyed by parameter name.
    """

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()
        self.state = {"t": 0, "m": {}, "v": {}}

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def names(self) -> list:
        return list(self._params)

    def items(self):
        return self._params.items()

    def num_values(self) -> int:
        return int(sum(p.size for p in self._params.values()))

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def grad(self, name: str) -> np.ndarray:
        p = self._params[name]
        return np.zeros_like(p.data) if p.grad is None else p.grad

    def set(self, name: str, value):
        p = self._params[name]
        value = np.asarray(value, dtype=np.float64)
        if value.shape != p.shape:
            raise ShapeError(f"{name}: shape {value.shape} != {p.shape}")
        p.data = value.copy()

    def arrays(self) -> dict:
        return {n: p.data for n, p in self._params.items()}

    def copy(self) -> "ParamSet":
        out = ParamSet()
        for n, p in self._params.items():
            out.add(n, p.data.copy())
        out.state = {
            "t": self.state["t"],
            "m": {k: v.copy() for k, v in self.state["m"].items()},
            "v": {k: v.copy() for k, v in self.state["v"].items()},
        }
        return out

    def group(self, prefix: str) -> list:
        return [n for n in self._params if n.startswith(prefix)]
