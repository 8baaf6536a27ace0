"""Three-valued certified check results.

``HOLDS`` is only returned with a certificate (the property holds up to the
stated tolerance everywhere on the queried set), ``FAILS`` only with a
concrete witness, and ``UNKNOWN`` only when a subdivision budget ran out.
Callers that need a sound answer treat ``UNKNOWN`` as a failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


class Verdict(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one certified check.

    ``margin`` is the certified lower bound of the checked expression for
    HOLDS, or the witness value for FAILS.  ``witness`` is the point (state,
    or time for interval checks) realizing a failure, when one exists.
    """

    verdict: Verdict
    margin: float
    witness: Optional[Tuple[float, ...]] = None
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def __str__(self) -> str:
        parts = [self.verdict.value, f"margin={self.margin:.6g}"]
        if self.witness is not None:
            parts.append(f"witness={tuple(round(w, 6) for w in self.witness)}")
        if self.note:
            parts.append(self.note)
        return " ".join(parts)
