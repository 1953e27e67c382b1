"""Check records and deterministic report emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class CheckRecord:
    """One verified identity: both sides rendered canonically."""

    id: str
    lhs: str
    rhs: str
    ok: bool
    degree: int | None = None

    @property
    def verdict(self) -> str:
        return "pass" if self.ok else "fail"


@dataclass
class Report:
    """Outcome of one command: deterministic given inputs, seed and command."""

    command: str
    seed: int | None = None
    records: list[CheckRecord] = field(default_factory=list)
    elapsed_ms: int | None = None
    max_terms: int | None = None

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)

    def extend(self, records) -> "Report":
        self.records.extend(records)
        return self

    def render_text(self, timings: bool = False) -> str:
        lines = [f"command: {self.command}"]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        if self.max_terms is not None:
            lines.append(f"max-terms: {self.max_terms}")
        for r in self.records:
            if r.rhs == "-":
                lines.append(f"{r.id}: {r.lhs}")
                continue
            lines.append(f"{r.id}: {r.verdict}")
            if not r.ok:
                lines.append(f"  lhs: {r.lhs}")
                lines.append(f"  rhs: {r.rhs}")
        if timings and self.elapsed_ms is not None:
            lines.append(f"elapsed-ms: {self.elapsed_ms}")
        lines.append(f"pass: {'true' if self.ok else 'false'}")
        return "\n".join(lines) + "\n"

    def render_json(self, timings: bool = False) -> str:
        doc = {
            "schema": 1,
            "command": self.command,
            "seed": self.seed,
            "records": [
                {
                    "id": r.id,
                    "degree": r.degree,
                    "lhs": r.lhs,
                    "rhs": r.rhs,
                    "verdict": r.verdict,
                }
                for r in self.records
            ],
            "pass": self.ok,
            # kept null by default so reports are byte-identical across runs
            "elapsed_ms": self.elapsed_ms if timings else None,
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def emit(report: Report, format: str = "text", timings: bool = False) -> bytes:
    if format == "text":
        return report.render_text(timings).encode()
    if format == "json":
        return report.render_json(timings).encode()
    raise ValueError(f"unknown format {format!r}")
