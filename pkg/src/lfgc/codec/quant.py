"""Uniform scalar quantisation and 32-way coefficient grouping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

N_GROUPS = 32


def qp_step(qp: float) -> float:
    """Step size doubling every 6 QP; QP 4 is a step of 1."""
    return 2.0 ** ((qp - 4) / 6.0)


@dataclass(frozen=True)
class QuantConfig:
    qp_first: int = 4
    qp_rest: int = 10
    lossless: bool = False  # coefficients sent as raw float64, no quantisation

    def __post_init__(self):
        if self.qp_first < 0 or self.qp_rest < 0:
            raise DataError("QPs must be >= 0")

    @property
    def step_first(self) -> float:
        return qp_step(self.qp_first)

    @property
    def step_rest(self) -> float:
        return qp_step(self.qp_rest)


def quantize(value, step: float):
    """Nearest level, halves rounded away from zero."""
    if not step > 0:
        raise DataError("quantisation step must be > 0")
    x = np.asarray(value, dtype=np.float64) / step
    lv = (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)
    return int(lv) if lv.ndim == 0 else lv


def dequantize(level, step: float):
    if not step > 0:
        raise DataError("quantisation step must be > 0")
    out = np.asarray(level, dtype=np.float64) * step
    return float(out) if out.ndim == 0 else out


def group_bounds(n: int, n_groups: int = N_GROUPS) -> np.ndarray:
    """Start index of each group plus the end: group ``g`` is ``[b[g], b[g+1])``
    with ``b[g] = ceil(g * n / n_groups)``."""
    return np.array([-((-g * n) // n_groups) for g in range(n_groups + 1)], dtype=np.int64)


def group_of(n: int, n_groups: int = N_GROUPS) -> np.ndarray:
    """Group number of every coefficient index ``0..n-1``."""
    b = group_bounds(n, n_groups)
    return np.repeat(np.arange(n_groups), np.diff(b))


def step_vector(n: int, cfg: QuantConfig) -> np.ndarray:
    """Per-coefficient step: group 0 uses ``qp_first``, the rest ``qp_rest``."""
    g = group_of(n)
    return np.where(g == 0, cfg.step_first, cfg.step_rest)


def quantize_coefficients(coefs: np.ndarray, cfg: QuantConfig) -> np.ndarray:
    steps = step_vector(len(coefs), cfg)
    x = np.asarray(coefs, dtype=np.float64) / steps
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def dequantize_coefficients(levels: np.ndarray, cfg: QuantConfig) -> np.ndarray:
    return np.asarray(levels, dtype=np.float64) * step_vector(len(levels), cfg)


@dataclass(frozen=True)
class CoefficientGroups:
    """Coefficients of several super-rays split into ``N_GROUPS`` groups.

    ``groups[g]`` is a list of ``(super_ray, index, value)`` triples.
    """

    groups: tuple

    @classmethod
    def build(cls, coefficients) -> "CoefficientGroups":
        out = [[] for _ in range(N_GROUPS)]
        for sr, coefs in enumerate(coefficients):
            b = group_bounds(len(coefs))
            for g in range(N_GROUPS):
                out[g].extend((sr, int(i), float(coefs[i])) for i in range(b[g], b[g + 1]))
        return cls(tuple(tuple(g) for g in out))

    def energy(self, group: int) -> float:
        return float(sum(v * v for _, _, v in self.groups[group]))
