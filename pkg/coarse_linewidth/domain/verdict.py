"""
Result type shared by every verifier.
"""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Verdict:
    """
    Outcome of a verification.

    Truthy iff the check passed. A failed verdict names the first violated
    axiom or bullet in ``reason``.

    Examples:
        verdict = verify_line_decomposition(graph, subject, decomposition)
        if not verdict:
            print(verdict.reason)
    """

    ok: bool
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def passed(cls) -> "Verdict":
        return cls(True)

    @classmethod
    def failed(cls, reason: str) -> "Verdict":
        return cls(False, reason)

    def prefixed(self, prefix: str) -> "Verdict":
        """Qualify a failure reason with the name of the enclosing check."""
        if self.ok:
            return self
        return Verdict(False, f"{prefix}: {self.reason}")
