"""Two single photons through a lossless beam splitter.

The splitter acts on the output-port operators as the real matrix
``[[t, r], [-r, t]]``. Each output component ``|m, 2-m>`` is described by a
probability and a normalized joint temporal amplitude ``F(tau1, tau2)``.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateOutcomeError
from .waveforms import TemporalShape, TimeGrid, overlap, sample

DEGENERATE_PROB = 1e-12


class Outcome(str, enum.Enum):
    """Photon numbers in output ports 1 and 2."""

    OUT20 = "20"
    OUT11 = "11"
    OUT02 = "02"

    @classmethod
    def parse(cls, value) -> "Outcome":
        if isinstance(value, cls):
            return value
        s = str(value).strip().lower().removeprefix("out").replace(",", "")
        try:
            return cls(s)
        except ValueError:
            raise ValueError(f"unknown outcome {value!r}; expected 20, 11 or 02") from None


@dataclass(frozen=True)
class BeamSplitter:
    """Lossless splitter with real amplitude transmission ``t`` in [0, 1]."""

    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"transmission t must lie in [0, 1], got {self.t}")

    @classmethod
    def from_t_sq(cls, t_sq: float) -> "BeamSplitter":
        if not 0.0 <= t_sq <= 1.0:
            raise ValueError(f"t_sq must lie in [0, 1], got {t_sq}")
        return cls(math.sqrt(t_sq))

    @property
    def t_sq(self) -> float:
        return self.t * self.t

    @property
    def r_sq(self) -> float:
        return 1.0 - self.t_sq

    @property
    def r(self) -> float:
        return math.sqrt(self.r_sq)


def path_indistinguishability(bs: BeamSplitter) -> float:
    """``t^2 - r^2``: 0 for a balanced splitter, +-1 when only one pathway survives."""
    return bs.t_sq - bs.r_sq


@dataclass(frozen=True)
class OutcomeProbabilities:
    p20: float
    p11: float
    p02: float
    J: complex = 0j

    @property
    def J_abs(self) -> float:
        return abs(self.J)

    def __getitem__(self, outcome) -> float:
        return {Outcome.OUT20: self.p20, Outcome.OUT11: self.p11, Outcome.OUT02: self.p02}[
            Outcome.parse(outcome)
        ]


def probabilities_from_overlap(J, bs: BeamSplitter) -> OutcomeProbabilities:
    """Outcome probabilities from the indistinguishability factor alone."""
    j2 = abs(J) ** 2
    t2, r2 = bs.t_sq, bs.r_sq
    p20 = t2 * r2 * (1.0 + j2)
    p11 = t2 * t2 + r2 * r2 - 2.0 * t2 * r2 * j2
    return OutcomeProbabilities(p20=p20, p11=max(p11, 0.0), p02=p20, J=complex(J))


def outcome_probabilities(
    f1: TemporalShape, f2: TemporalShape, bs: BeamSplitter, grid: TimeGrid
) -> OutcomeProbabilities:
    return probabilities_from_overlap(overlap(f1, f2, grid), bs)


@dataclass(frozen=True, eq=False)
class TwoPhotonAmplitude:
    """Joint amplitude on ``grid x grid``; ``values[i, j] = F(tau_i, tau_j)``."""

    outcome: Outcome
    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def norm(self) -> float:
        w = self.grid.weights
        return float(w @ (np.abs(self.values) ** 2) @ w)

    def metadata(self) -> dict:
        return {"outcome": self.outcome.value, "grid": self.grid.to_dict()}

    def write(self, csv_path, meta_path=None, extra_meta: dict | None = None) -> None:
        """Write the ``(i, j, re, im)`` CSV and its metadata JSON.

        The metadata file defaults to ``csv_path`` with a ``.json`` suffix.
        """
        csv_path = Path(csv_path)
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
        n = self.grid.n_points
        i, j = np.indices((n, n))
        rows = np.column_stack([i.ravel(), j.ravel(), self.values.real.ravel(), self.values.imag.ravel()])
        with open(csv_path, "w", newline="") as fh:
            fh.write("i,j,re,im\n")
            np.savetxt(fh, rows, fmt=["%d", "%d", "%.17g", "%.17g"], delimiter=",")
        meta = self.metadata()
        if extra_meta:
            meta.update(extra_meta)
        meta_path.write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def read(cls, csv_path, meta_path=None) -> "TwoPhotonAmplitude":
        csv_path = Path(csv_path)
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
        meta = json.loads(meta_path.read_text())
        grid = TimeGrid.from_dict(meta["grid"])
        vals = np.zeros((grid.n_points, grid.n_points), dtype=complex)
        with open(csv_path, newline="") as fh:
            for row in csv.DictReader(fh):
                vals[int(row["i"]), int(row["j"])] = complex(float(row["re"]), float(row["im"]))
        return cls(Outcome.parse(meta["outcome"]), grid, vals)


def unnormalized_joint(f1, f2, bs: BeamSplitter, outcome, grid: TimeGrid) -> np.ndarray:
    """Numerator of the joint amplitude, i.e. ``sqrt(P) * F`` on the grid.

    Same-port components carry an extra ``1/sqrt(2)``: the symmetric product
    ``f1 f2 + f2 f1`` has squared norm ``2 (1 + |J|^2)``, and two photons in
    one mode contribute a ``1/sqrt(2!)`` to the state. With it the double
    integral of ``|sqrt(P) F|^2`` is ``P`` for every outcome.
    """
    outcome = Outcome.parse(outcome)
    a = sample(f1, grid).values
    b = sample(f2, grid).values
    if outcome is Outcome.OUT11:
        return bs.t_sq * np.outer(a, b) - bs.r_sq * np.outer(b, a)
    sym = (bs.r * bs.t / math.sqrt(2.0)) * (np.outer(a, b) + np.outer(b, a))
    return sym if outcome is Outcome.OUT20 else -sym


def joint_amplitude(f1, f2, bs: BeamSplitter, outcome, grid: TimeGrid) -> TwoPhotonAmplitude:
    """Normalized joint temporal amplitude of one output component.

    Raises
    ------
    DegenerateOutcomeError
        If the outcome probability is at most ``1e-12``.
    """
    outcome = Outcome.parse(outcome)
    p = outcome_probabilities(f1, f2, bs, grid)[outcome]
    if p <= DEGENERATE_PROB:
        raise DegenerateOutcomeError(f"P_{outcome.value} = {p:.3g}; the normalized amplitude is undefined")
    values = unnormalized_joint(f1, f2, bs, outcome, grid) / math.sqrt(p)
    return TwoPhotonAmplitude(outcome, grid, values)
