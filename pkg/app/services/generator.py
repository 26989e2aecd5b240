"""
Seeded random instances for `qsc gen` and the test-suite.

Every generated object draws from its own child of one SeedSequence, spawned
in order, so a given seed and request sequence reproduce bit for bit.
"""
from typing import Any, Dict, Optional

import numpy as np

from app.core.exceptions import InvalidInputError
from app.core.logger import get_logger
from app.services import linalg, serialization
from app.services.channels import Channel, random_channel, random_unitary, unitary_channel
from app.services.entropies import BipartiteChannel, ClassicalInstrumentFamily
from app.services.majorization import ChannelFamily
from app.services.supermaps import DimSpec, Realization, choi_from_realization, random_unitary_superchannel

logger = get_logger(__name__)

KINDS = ("channel", "unitary", "superchannel", "random-unitary-superchannel", "family", "bipartite", "instrument")


class InstanceGenerator:
    def __init__(self, seed: Optional[int] = None):
        self.seed_sequence = np.random.SeedSequence(seed)

    @property
    def spawned(self) -> int:
        return self.seed_sequence.n_children_spawned

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed_sequence.spawn(1)[0])

    def generate(self, kind: str, params: Dict[str, Any]):
        """Build one instance of `kind`; params are the keyword arguments of the matching builder."""
        builders = {
            "channel": self.channel,
            "unitary": self.unitary,
            "superchannel": self.superchannel,
            "random-unitary-superchannel": self.random_unitary_superchannel,
            "family": self.family,
            "bipartite": self.bipartite,
            "instrument": self.instrument,
        }
        if kind not in builders:
            raise InvalidInputError(f"unknown kind '{kind}', expected one of {', '.join(KINDS)}", field="kind")
        try:
            instance = builders[kind](**params)
        except TypeError as e:
            raise InvalidInputError(str(e), field="params")
        logger.debug(f"Generator: {kind} with {params} (stream {self.spawned})")
        return instance

    def generate_json(self, kind: str, params: Dict[str, Any]) -> str:
        instance = self.generate(kind, params)
        if kind in ("channel", "unitary"):
            return serialization.emit_channel_json(instance)
        if kind in ("superchannel", "random-unitary-superchannel"):
            return serialization.emit_superchannel_json(instance)
        if kind == "family":
            return serialization.emit_family_json(instance)
        if kind == "bipartite":
            return serialization.emit_bipartite_json(instance)
        return serialization.emit_instrument_json(instance)

    # ---- builders ----

    def channel(self, d_in: int = 2, d_out: int = 2, kraus_rank: Optional[int] = None) -> Channel:
        kraus_rank = d_in * d_out if kraus_rank is None else kraus_rank
        return random_channel(d_in, d_out, kraus_rank, seed=self.rng())

    def unitary(self, d: int = 2) -> Channel:
        return unitary_channel(random_unitary(d, seed=self.rng()))

    def superchannel(self, dims=(2, 2, 2, 2), d_e: Optional[int] = None):
        """A random realization (pre-processing, memory, post-processing) turned into its Choi matrix."""
        dims = DimSpec(*dims)
        d_e = dims.a0 * dims.b0 if d_e is None else d_e
        pre = random_channel(dims.b0, dims.a0 * d_e, dims.b0 * dims.a0 * d_e, seed=self.rng())
        post = random_channel(dims.a1 * d_e, dims.b1, dims.a1 * d_e * dims.b1, seed=self.rng())
        return choi_from_realization(Realization(pre=pre, post=post, d_e=d_e), dims)

    def random_unitary_superchannel(self, d0: int = 2, d1: int = 2, terms: int = 3):
        rng = self.rng()
        probs = rng.dirichlet(np.ones(terms))
        pre = [random_unitary(d0, seed=rng) for _ in range(terms)]
        post = [random_unitary(d1, seed=rng) for _ in range(terms)]
        return random_unitary_superchannel(probs, pre, post, DimSpec(d0, d1, d0, d1))

    def family(self, d_in: int = 2, d_out: int = 2, size: int = 2, kraus_rank: Optional[int] = None) -> ChannelFamily:
        return ChannelFamily(d_in, d_out, tuple(self.channel(d_in, d_out, kraus_rank) for _ in range(size)))

    def bipartite(self, dims=(2, 2, 2, 2), kraus_rank: Optional[int] = None) -> BipartiteChannel:
        dims = DimSpec(*dims)
        d_in, d_out = dims.a0 * dims.b0, dims.a1 * dims.b1
        joint = self.channel(d_in, d_out, kraus_rank)
        # (A0 B0)(A1 B1) -> A0 A1 B0 B1
        choi = linalg.permute_systems(joint.choi, (dims.a0, dims.b0, dims.a1, dims.b1), [0, 2, 1, 3])
        return BipartiteChannel(dims, choi)

    def instrument(self, d_a0: int = 2, d_a1: int = 2, inputs: int = 2, outcomes: int = 2,
                   classical: bool = False) -> ClassicalInstrumentFamily:
        if classical:
            return ClassicalInstrumentFamily(d_a0, d_a1, tuple(
                self._classical_row(d_a0, d_a1, outcomes) for _ in range(inputs)))
        return ClassicalInstrumentFamily(d_a0, d_a1, tuple(
            self._quantum_row(d_a0, d_a1, outcomes) for _ in range(inputs)))

    def _quantum_row(self, d_a0: int, d_a1: int, outcomes: int):
        """Outcome x keeps the <x|.|x> corner of a random channel A0 -> A1 X."""
        joint = random_channel(d_a0, d_a1 * outcomes, d_a0 * d_a1 * outcomes, seed=self.rng())
        t = joint.choi.reshape(d_a0, d_a1, outcomes, d_a0, d_a1, outcomes)
        side = d_a0 * d_a1
        return tuple(t[:, :, x, :, :, x].reshape(side, side) for x in range(outcomes))

    def _classical_row(self, d_a0: int, d_a1: int, outcomes: int):
        """p(x, a1 | a0) placed on the diagonal of each block."""
        rng = self.rng()
        probs = rng.dirichlet(np.ones(outcomes * d_a1), size=d_a0).reshape(d_a0, outcomes, d_a1)
        return tuple(np.diag(probs[:, x, :].reshape(-1)).astype(complex) for x in range(outcomes))
