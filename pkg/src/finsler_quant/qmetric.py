"""Quantized metrics: positive Hermitian forms on degree-k sections of O(1) over CP^1."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import HermitianForm


class LevelMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuantizedMetric:
    """An element of the space of Hermitian forms at level ``k`` (dimension ``k+1``).

    Radial inputs are stored through the logarithms of their diagonal entries
    in the monomial basis; entries overflow doubles already for moderate ``k``
    on unbounded potentials.
    """

    k: int
    log_diag: np.ndarray | None = None
    form: HermitianForm | None = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"level must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if (self.log_diag is None) == (self.form is None):
            raise ValueError("give exactly one of log_diag or form")
        if self.log_diag is not None:
            ld = np.array(self.log_diag, dtype=float)
            if ld.shape != (self.k + 1,):
                raise ValueError(f"level {self.k} needs {self.k + 1} diagonal entries, got {ld.shape}")
            if not np.all(np.isfinite(ld)):
                raise ValueError("diagonal entries must be finite and positive")
            ld.setflags(write=False)
            object.__setattr__(self, "log_diag", ld)
        elif self.form.n != self.k + 1:
            raise ValueError(f"level {self.k} needs a {self.k + 1}x{self.k + 1} form")

    @property
    def dim(self) -> int:
        return self.k + 1

    @property
    def is_diagonal(self) -> bool:
        return self.log_diag is not None

    @property
    def diag(self) -> np.ndarray:
        if self.log_diag is None:
            return np.real(np.diag(self.form.entries)).copy()
        with np.errstate(over="raise"):
            return np.exp(self.log_diag)

    def as_form(self) -> HermitianForm:
        if self.form is not None:
            return self.form
        return HermitianForm(np.diag(self.diag))

    @classmethod
    def from_diag(cls, k: int, values) -> "QuantizedMetric":
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0):
            raise ValueError("diagonal entries must be positive")
        return cls(k, log_diag=np.log(values))

    def shifted(self, c: float) -> "QuantizedMetric":
        """``exp(-k c) G``, the metric of the potential shifted by ``c``."""
        if self.is_diagonal:
            return QuantizedMetric(self.k, log_diag=self.log_diag - self.k * c)
        return QuantizedMetric(self.k, form=HermitianForm(np.exp(-self.k * c) * self.form.entries))

    def write(self, path) -> None:
        write_qmetric(self, path)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_qmetric(g: QuantizedMetric, path) -> None:
    """Text format: header ``qmetric k=<int> diag=<bool>`` then the entries.

    Diagonal metrics whose entries do not fit in a double are written as
    log-entries with an extra ``log=true`` header key.
    """
    lines = []
    if g.is_diagonal:
        if np.all(np.abs(g.log_diag) < 700):
            lines.append(f"qmetric k={g.k} diag=true")
            lines.extend(_fmt(v) for v in np.exp(g.log_diag))
        else:
            lines.append(f"qmetric k={g.k} diag=true log=true")
            lines.extend(_fmt(v) for v in g.log_diag)
    else:
        a = g.form.entries
        lines.append(f"qmetric k={g.k} diag=false")
        for row in a:
            if np.iscomplexobj(a):
                lines.append(" ".join(f"{_fmt(z.real)}{'+' if z.imag >= 0 else '-'}{_fmt(abs(z.imag))}j" for z in row))
            else:
                lines.append(" ".join(_fmt(z) for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_qmetric(path) -> QuantizedMetric:
    text = Path(path).read_text().split("\n")
    header = text[0].split()
    if not header or header[0] != "qmetric":
        raise ValueError(f"{path}: missing qmetric header")
    keys = dict(item.split("=", 1) for item in header[1:])
    k = int(keys["k"])
    body = [ln for ln in text[1:] if ln.strip()]
    if keys.get("diag", "true").lower() == "true":
        vals = np.array([float(ln) for ln in body])
        if keys.get("log", "false").lower() == "true":
            return QuantizedMetric(k, log_diag=vals)
        return QuantizedMetric.from_diag(k, vals)
    rows = [[complex(tok) for tok in ln.split()] for ln in body]
    a = np.array(rows)
    if np.all(a.imag == 0):
        a = a.real
    return QuantizedMetric(k, form=HermitianForm(a))
