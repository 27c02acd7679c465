from typing import Any, List, Optional

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    name: str
    passed: bool
    count: int
    # smallest margin to failure; negative means violated
    worst_margin: float
    detail: Optional[str] = None
    witness: Optional[Any] = None


class VerificationSummary(BaseModel):
    seed: int
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed_checks(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def get(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)
