"""Factory descriptions shared by the simulator, the tracker and the cost model."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .codes import Kind, ProtocolCode, protocol_from_name

MODES = ("module", "block")


@dataclass(frozen=True)
class Round:
    code: ProtocolCode
    mode: str = "module"
    attempts: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"checking mode must be one of {MODES}, got {self.mode!r}")
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")


@dataclass(frozen=True)
class FactorySpec:
    rounds: tuple[Round, ...]

    def __post_init__(self):
        if not self.rounds:
            raise ValueError("a factory needs at least one round")
        for i, r in enumerate(self.rounds):
            if i > 0 and r.code.kind is Kind.TOFFOLI and self.rounds[i - 1].code.kind is Kind.TOFFOLI:
                raise ValueError("a Toffoli round cannot consume Toffoli states")

    @classmethod
    def from_codes(cls, codes: Sequence[ProtocolCode], mode: str = "module", attempts: Sequence[int] | None = None):
        attempts = attempts or [1] * len(codes)
        return cls(tuple(Round(c, mode, t) for c, t in zip(codes, attempts)))

    @classmethod
    def parse(cls, text: str, mode: str = "module") -> "FactorySpec":
        """``bh:10,bh:10,tof`` -> three rounds in the given checking mode."""
        names = [s for s in text.split(",") if s.strip()]
        if not names:
            raise ValueError("empty round list")
        return cls.from_codes([protocol_from_name(s) for s in names], mode)

    @property
    def codes(self) -> list[ProtocolCode]:
        return [r.code for r in self.rounds]

    @property
    def output_count(self) -> int:
        """States delivered by one top-level module, ``K = prod k_i``."""
        k = 1
        for r in self.rounds:
            k *= r.code.states_out
        return k

    @property
    def outputs_toffoli(self) -> bool:
        return any(r.code.kind is Kind.TOFFOLI for r in self.rounds)

    @property
    def label(self) -> str:
        return "-".join(f"{r.code.label}{'' if r.mode == 'module' else '[b]'}" for r in self.rounds)


def as_codes(factory: FactorySpec | Sequence[ProtocolCode]) -> list[ProtocolCode]:
    return factory.codes if isinstance(factory, FactorySpec) else list(factory)
