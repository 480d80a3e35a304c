"""Plain-text model files: one `name value` pair per line.

Polynomial file:

    kind poly
    degree <1|2|3>
    key_offset <float>
    key_scale <float>
    rank_scale <float>
    intercept <float>
    w <float>              repeated degree times, power 1 first

Neural file:

    kind neural
    hidden_layers <0|1|2>
    hidden_width <int>
    rank_scale <float>
    layer <fan_in> <fan_out>
    w <float>              fan_in * fan_out values, row-major
    b <float>              fan_out values
    (layer blocks repeat)

Floats are written with repr, so a save/load round-trip reproduces the
exact same predictions bit for bit.
"""

from __future__ import annotations

from typing import List, Tuple, Union

import numpy as np

from .neural import NeuralModel
from .regress import PolynomialModel

AnyModel = Union[PolynomialModel, NeuralModel]


class ModelFormatError(ValueError):
    """Model file does not match the documented layout."""


def save_model(model: AnyModel, path) -> None:
    lines: List[str] = []
    if isinstance(model, PolynomialModel):
        lines.append("kind poly")
        lines.append(f"degree {model.degree}")
        lines.append(f"key_offset {model.key_offset!r}")
        lines.append(f"key_scale {model.key_scale!r}")
        lines.append(f"rank_scale {model.rank_scale!r}")
        lines.append(f"intercept {model.intercept!r}")
        for w in model.weights:
            lines.append(f"w {float(w)!r}")
    elif isinstance(model, NeuralModel):
        lines.append("kind neural")
        lines.append(f"hidden_layers {model.hidden_layers}")
        lines.append(f"hidden_width {model.hidden_width}")
        lines.append(f"rank_scale {model.rank_scale!r}")
        for w, b in zip(model.weights, model.biases):
            lines.append(f"layer {w.shape[0]} {w.shape[1]}")
            for v in w.ravel():
                lines.append(f"w {float(v)!r}")
            for v in b:
                lines.append(f"b {float(v)!r}")
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _Lines:
    def __init__(self, raw: List[str]):
        self.lines = [ln.strip() for ln in raw if ln.strip()]
        self.pos = 0

    def next(self, expected_name: str) -> List[str]:
        if self.pos >= len(self.lines):
            raise ModelFormatError(f"unexpected end of file, wanted {expected_name!r}")
        parts = self.lines[self.pos].split()
        if parts[0] != expected_name:
            raise ModelFormatError(f"expected {expected_name!r}, found {parts[0]!r}")
        self.pos += 1
        return parts[1:]

    def done(self) -> bool:
        return self.pos >= len(self.lines)


def load_model(path) -> AnyModel:
    with open(path) as fh:
        reader = _Lines(fh.readlines())
    kind = reader.next("kind")
    if kind == ["poly"]:
        return _load_poly(reader)
    if kind == ["neural"]:
        return _load_neural(reader)
    raise ModelFormatError(f"unknown model kind {kind!r}")


def _float_field(reader: _Lines, name: str) -> float:
    value = reader.next(name)
    if len(value) != 1:
        raise ModelFormatError(f"{name} expects a single value")
    try:
        return float(value[0])
    except ValueError as exc:
        raise ModelFormatError(f"bad float for {name}: {value[0]!r}") from exc


def _load_poly(reader: _Lines) -> PolynomialModel:
    degree = int(_float_field(reader, "degree"))
    key_offset = _float_field(reader, "key_offset")
    key_scale = _float_field(reader, "key_scale")
    rank_scale = _float_field(reader, "rank_scale")
    intercept = _float_field(reader, "intercept")
    weights = np.array([_float_field(reader, "w") for _ in range(degree)])
    if not reader.done():
        raise ModelFormatError("trailing content after polynomial coefficients")
    return PolynomialModel(
        degree=degree, weights=weights, intercept=intercept,
        key_offset=key_offset, key_scale=key_scale, rank_scale=rank_scale,
    )


def _load_neural(reader: _Lines) -> NeuralModel:
    hidden_layers = int(_float_field(reader, "hidden_layers"))
    hidden_width = int(_float_field(reader, "hidden_width"))
    rank_scale = _float_field(reader, "rank_scale")
    weights: List[np.ndarray] = []
    biases: List[np.ndarray] = []
    for _ in range(hidden_layers + 1):
        shape = reader.next("layer")
        if len(shape) != 2:
            raise ModelFormatError("layer line expects fan_in and fan_out")
        fan_in, fan_out = int(shape[0]), int(shape[1])
        w = np.array([_float_field(reader, "w") for _ in range(fan_in * fan_out)])
        b = np.array([_float_field(reader, "b") for _ in range(fan_out)])
        weights.append(w.reshape(fan_in, fan_out))
        biases.append(b)
    if not reader.done():
        raise ModelFormatError("trailing content after final layer")
    return NeuralModel(
        hidden_layers=hidden_layers, weights=weights, biases=biases,
        rank_scale=rank_scale, hidden_width=hidden_width,
    )
