"""Quenched disorder: sampled circuit errors and the interaction signs they induce.

Sign convention: ``eta = -1`` marks an interaction whose component saw an odd
number of error flips, so ``P(eta = -1) = p_eff``. The factor of an
interaction is then ``1 - p`` when ``eta * prod(sigma) = +1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pauli import SpacetimePauli
from .spinmodel import GeneralPauli, IndependentXZ, SpinModel

__all__ = [
    "DisorderRealization",
    "SignMap",
    "make_rng",
    "sample_error",
    "sample_error_bits",
    "signs_from_error",
    "sample_signs_direct",
    "save_realizations",
    "load_realizations",
]

DIRECT = "direct"


def make_rng(seed: int, realization: int = 0) -> np.random.Generator:
    """Counter-based Philox stream keyed by ``(seed, realization)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, realization])))


@dataclass(frozen=True)
class DisorderRealization:
    eta: np.ndarray
    source: object = DIRECT  # SpacetimePauli or DIRECT
    seed: int | None = None
    realization: int = 0

    def to_dict(self) -> dict:
        out = {"eta": [int(v) for v in self.eta], "seed": self.seed, "realization": self.realization}
        if isinstance(self.source, SpacetimePauli):
            out["error"] = self.source.render()
        return out


# -- errors -----------------------------------------------------------------------

def sample_error_bits(num_sites: int, channel, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Independent per-site Pauli draws as boolean ``(x, z)`` arrays."""
    if isinstance(channel, IndependentXZ):
        u = rng.random((2, num_sites))
        return u[0] < channel.p_x, u[1] < channel.p_z
    if isinstance(channel, GeneralPauli):
        probs = channel.probabilities()
        cum = np.cumsum([probs["I"], probs["X"], probs["Y"], probs["Z"]])
        letter = np.searchsorted(cum, rng.random(num_sites) * cum[-1], side="right")
        letter = np.minimum(letter, 3)
        return (letter == 1) | (letter == 2), (letter == 2) | (letter == 3)
    raise TypeError(f"unsupported channel {channel!r}")


def _bits_to_int(bits: np.ndarray) -> int:
    return int.from_bytes(np.packbits(bits.astype(np.uint8), bitorder="little").tobytes(), "little")


def _int_to_bits(v: int, size: int) -> np.ndarray:
    raw = np.frombuffer(v.to_bytes((size + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(bool)


def sample_error(num_qubits_or_circuit, channel, seed: int, realization: int = 0,
                 num_layers: int | None = None) -> SpacetimePauli:
    """Sample one spacetime error on a circuit's grid (or an explicit ``N x T`` grid)."""
    if num_layers is None:
        n, t = num_qubits_or_circuit.num_qubits, num_qubits_or_circuit.duration
    else:
        n, t = num_qubits_or_circuit, num_layers
    x, z = sample_error_bits(n * t, channel, make_rng(seed, realization))
    return SpacetimePauli(n, t, _bits_to_int(x), _bits_to_int(z))


# -- signs ------------------------------------------------------------------------

class SignMap:
    """Precomputed member lists turning error bit arrays into interaction signs."""

    def __init__(self, model: SpinModel):
        n = model.num_qubits
        sites, kinds, owners = [], [], []
        code = {"X": 0, "Z": 1, "Y": 2}
        for c, inter in enumerate(model.interactions):
            for flavor, q, layer in inter.members:
                sites.append(layer * n + q)
                kinds.append(code[flavor])
                owners.append(c)
        self.size = n * model.num_layers
        self.num_interactions = len(model.interactions)
        self.sites = np.asarray(sites, dtype=np.int64)
        self.kinds = np.asarray(kinds, dtype=np.int8)
        self.owners = np.asarray(owners, dtype=np.int64)

    def parities(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Flip parity per interaction; accepts ``(sites,)`` or ``(batch, sites)`` arrays."""
        x = np.asarray(x, dtype=bool)
        z = np.asarray(z, dtype=bool)
        if x.ndim == 1:
            xs, zs = x[self.sites], z[self.sites]
            # flavor X is probed by Z (sees x), Z by X (sees z), Y by Y (sees x^z)
            hit = np.where(self.kinds == 0, xs, np.where(self.kinds == 1, zs, xs ^ zs))
            out = np.bincount(self.owners, weights=hit, minlength=self.num_interactions).astype(np.int64)
        else:
            mats = self._matrices()
            out = (x.astype(np.float64) @ mats[0] + z.astype(np.float64) @ mats[1]
                   + (x ^ z).astype(np.float64) @ mats[2]).astype(np.int64)
        return (out & 1).astype(np.int8)

    def _matrices(self) -> np.ndarray:
        if getattr(self, "_mats", None) is None:
            mats = np.zeros((3, self.size, self.num_interactions))
            np.add.at(mats, (self.kinds, self.sites, self.owners), 1.0)
            self._mats = mats
        return self._mats

    def signs(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        return (1 - 2 * self.parities(x, z)).astype(np.int8)

    def signs_of(self, error: SpacetimePauli) -> np.ndarray:
        if error.size != self.size:
            raise ValueError("error grid does not match the model")
        return self.signs(_int_to_bits(error.x, self.size), _int_to_bits(error.z, self.size))


def signs_from_error(model: SpinModel, error: SpacetimePauli) -> DisorderRealization:
    if (error.num_qubits, error.num_layers) != (model.num_qubits, model.num_layers):
        raise ValueError("error grid does not match the model")
    return DisorderRealization(SignMap(model).signs_of(error), error)


def sample_signs_direct(model: SpinModel, seed: int, realization: int = 0) -> DisorderRealization:
    """Independent Bernoulli signs per interaction, valid for IndependentXZ models.

    Components partition the error locations, so their parities are
    independent with flip probability equal to the component's ``p``.
    """
    if not isinstance(model.channel, IndependentXZ):
        raise TypeError("direct sign sampling needs an IndependentXZ channel")
    p = np.array([inter.p for inter in model.interactions])
    flips = make_rng(seed, realization).random(len(p)) < p
    return DisorderRealization((1 - 2 * flips).astype(np.int8), DIRECT, seed, realization)


# -- serialization ----------------------------------------------------------------

def save_realizations(path, realizations: Sequence[DisorderRealization]) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_dict() for r in realizations], fh)


def load_realizations(path, grid: tuple[int, int] | None = None) -> list[DisorderRealization]:
    with open(path) as fh:
        raw = json.load(fh)
    out = []
    for item in raw:
        source = DIRECT
        if "error" in item and grid is not None:
            source = SpacetimePauli.parse(grid[0], grid[1], item["error"])
        out.append(DisorderRealization(np.asarray(item["eta"], dtype=np.int8), source,
                                       item.get("seed"), item.get("realization", 0)))
    return out
