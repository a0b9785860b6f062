"""Honest device behaviour assumed when sizing a finite key run.

A protocol run aborts if the observed test-round score or the error
correction syndrome exceeds what an honest (noisy but attack-free)
device pair would produce. The two families here cover the usual
situations: a depolarized two-qubit source with ideal measurements, and
an experiment summarized by its winning probability and its qubit error
rate in the key-generation basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from diqkd.errors import ValidationError
from diqkd.numerics import binary_entropy

W_TSIRELSON = (2.0 + math.sqrt(2.0)) / 4.0

_KINDS = ("depolarizing", "experimental")


@dataclass(frozen=True)
class HonestModel:
    """Noise model for the devices when nobody is attacking.

    Parameters
    ----------
    kind : str
        "depolarizing" or "experimental".
    p : float
        Bias of the random bit flip applied to raw generation outcomes,
        in [0, 1/2].
    gamma : float
        Fraction of rounds used for testing, in [0, 1].
    q : float, optional
        Depolarizing noise strength in [0, 1/2] ("depolarizing" only).
    w_exp : float, optional
        Expected winning probability in [1/2, (2+sqrt 2)/4]
        ("experimental" only).
    p_err : float, optional
        Generation-round error probability in [0, 1/2]
        ("experimental" only).
    """

    kind: str
    p: float = 0.0
    gamma: float = 0.05
    q: float | None = None
    w_exp: float | None = None
    p_err: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValidationError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        for name in ("p", "gamma"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if not 0.0 <= self.p <= 0.5:
            raise ValidationError(f"p must be in [0, 1/2], got {self.p}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValidationError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.kind == "depolarizing":
            if self.q is None or self.w_exp is not None or self.p_err is not None:
                raise ValidationError("depolarizing model takes q and nothing else")
            object.__setattr__(self, "q", float(self.q))
            if not 0.0 <= self.q <= 0.5:
                raise ValidationError(f"q must be in [0, 1/2], got {self.q}")
        else:
            if self.w_exp is None or self.p_err is None or self.q is not None:
                raise ValidationError("experimental model takes w_exp and p_err only")
            object.__setattr__(self, "w_exp", float(self.w_exp))
            object.__setattr__(self, "p_err", float(self.p_err))
            if not 0.5 <= self.w_exp <= W_TSIRELSON:
                raise ValidationError(
                    f"w_exp must be in [1/2, {W_TSIRELSON}], got {self.w_exp}"
                )
            if not 0.0 <= self.p_err <= 0.5:
                raise ValidationError(f"p_err must be in [0, 1/2], got {self.p_err}")

    @classmethod
    def depolarizing(cls, q: float, p: float = 0.0, gamma: float = 0.05) -> HonestModel:
        """Two-qubit maximally entangled state through a depolarizing channel."""
        return cls(kind="depolarizing", p=p, gamma=gamma, q=q)

    @classmethod
    def experimental(
        cls, w_exp: float, p_err: float, p: float = 0.0, gamma: float = 0.05
    ) -> HonestModel:
        """Device pair summarized by winning probability and error rate."""
        return cls(kind="experimental", p=p, gamma=gamma, w_exp=w_exp, p_err=p_err)

    @property
    def winning_prob(self) -> float:
        """Expected test-round winning probability of the honest devices."""
        if self.kind == "depolarizing":
            # Mixing toward uniform outcomes: (1-2q) w_T + 2q * 1/2.
            return (1.0 - 2.0 * self.q) * W_TSIRELSON + self.q
        return self.w_exp

    @property
    def error_prob(self) -> float:
        """Generation-round error probability after the bit flip with bias p."""
        base = self.q if self.kind == "depolarizing" else self.p_err
        return self.p + (1.0 - 2.0 * self.p) * base

    @property
    def h_generation(self) -> float:
        """Binary entropy of the generation-round error probability."""
        return binary_entropy(self.error_prob)

    def h_hon(self) -> float:
        """Error-correction entropy rate with sifting.

        Half the generation rounds are sifted out and cost nothing; test
        rounds are reconciled at the entropy of the win/lose indicator.
        """
        return 0.5 * (1.0 - self.gamma) * self.h_generation + self.gamma * binary_entropy(
            self.winning_prob
        )

    def h_hon_preshared(self) -> float:
        """Error-correction entropy rate when inputs are pre-shared (no sifting)."""
        return (1.0 - self.gamma) * self.h_generation + self.gamma * binary_entropy(
            self.winning_prob
        )
