"""Problem-spec and run-result documents (UTF-8 JSON).

A spec document has sections ``process``, ``payoff``, ``restart`` and
``numerics``; a run-result document embeds the spec under ``spec`` and is
itself accepted as input.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

from levy_impulse.config import Numerics
from levy_impulse.errors import LevyImpulseError, SpecParseError
from levy_impulse.process import JumpLaw, LevyModel
from levy_impulse.transform import Cost, Gamma, PayoffSpec, Restart
from levy_impulse.version import __version__

if TYPE_CHECKING:
    from levy_impulse.simulate import SimulationReport, VerificationReport
    from levy_impulse.solver import PolicySolution

# document key → Numerics field
_NUMERICS_ALIASES = {"tol_G": "tol_g"}


@dataclass(frozen=True)
class ProblemSpec:
    model: LevyModel
    payoff: PayoffSpec
    numerics: Numerics = field(default_factory=Numerics)

    def to_dict(self) -> dict[str, Any]:
        numerics = self.numerics.to_dict()
        numerics["tol_G"] = numerics.pop("tol_g")
        return {
            "process": self.model.to_dict(),
            "payoff": self.payoff.to_dict(),
            "restart": self.payoff.restart.to_dict(),
            "numerics": numerics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def with_numerics(self, **changes: Any) -> ProblemSpec:
        data = self.numerics.to_dict()
        data.update(changes)
        return ProblemSpec(self.model, self.payoff, Numerics.from_dict(data))


# --- Parsing ---


def _line_of(text: str, key: str) -> int | None:
    match = re.search(rf'"{re.escape(key)}"\s*:', text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def _section(data: dict[str, Any], name: str, text: str, *, required: bool = True) -> dict[str, Any]:
    value = data.get(name)
    if value is None:
        if required:
            raise SpecParseError(f"missing section '{name}'", field=name)
        return {}
    if not isinstance(value, dict):
        raise SpecParseError(f"section '{name}' must be an object", field=name, line=_line_of(text, name))
    return value


def _number(section: dict[str, Any], key: str, path: str, text: str, default: float | None = None) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecParseError(f"'{path}' must be a number, got {value!r}", field=path, line=_line_of(text, key))
    return float(value)


def _params(section: dict[str, Any], path: str, text: str) -> tuple[float, ...]:
    raw = section.get("params", [])
    if not isinstance(raw, list) or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in raw):
        raise SpecParseError(f"'{path}.params' must be a list of numbers", field=f"{path}.params", line=_line_of(text, "params"))
    return tuple(float(p) for p in raw)


def _kinded(section: dict[str, Any], path: str, text: str) -> tuple[str, tuple[float, ...]]:
    kind = section.get("kind")
    if not isinstance(kind, str):
        raise SpecParseError(f"'{path}.kind' must be a string", field=f"{path}.kind", line=_line_of(text, "kind"))
    return kind, _params(section, path, text)


def _model(data: dict[str, Any], text: str) -> LevyModel:
    process = _section(data, "process", text)
    law = None
    raw_law = process.get("jump_law")
    if raw_law is not None:
        if not isinstance(raw_law, dict):
            raise SpecParseError("'process.jump_law' must be an object", field="process.jump_law")
        kind, params = _kinded(raw_law, "process.jump_law", text)
        try:
            law = JumpLaw(kind, params)  # type: ignore[arg-type]
        except (LevyImpulseError, ValueError) as exc:
            raise SpecParseError(str(exc), field="process.jump_law", line=_line_of(text, "jump_law")) from exc
    try:
        return LevyModel(
            drift=_number(process, "drift", "process.drift", text),
            sigma2=_number(process, "sigma2", "process.sigma2", text, 0.0),
            jump_rate=_number(process, "jump_rate", "process.jump_rate", text, 0.0),
            jump_law=law,
        )
    except (LevyImpulseError, ValueError) as exc:
        if isinstance(exc, SpecParseError):
            raise
        raise SpecParseError(str(exc), field="process", line=_line_of(text, "process")) from exc


def _payoff(data: dict[str, Any], text: str) -> PayoffSpec:
    payoff = _section(data, "payoff", text)
    parts: dict[str, Any] = {}
    for name, factory in (("gamma", Gamma), ("h", Cost)):
        raw = payoff.get(name, {"kind": "zero"} if name == "h" else None)
        if not isinstance(raw, dict):
            raise SpecParseError(f"'payoff.{name}' must be an object", field=f"payoff.{name}", line=_line_of(text, name))
        kind, params = _kinded(raw, f"payoff.{name}", text)
        try:
            parts[name] = factory(kind, params)
        except (LevyImpulseError, ValueError) as exc:
            raise SpecParseError(str(exc), field=f"payoff.{name}", line=_line_of(text, name)) from exc

    K = _number(payoff, "K", "payoff.K", text)
    restart_raw = _section(data, "restart", text, required=False)
    try:
        restart = Restart(restart_raw.get("mode", "free"), restart_raw.get("point"))
    except (LevyImpulseError, ValueError) as exc:
        raise SpecParseError(str(exc), field="restart", line=_line_of(text, "restart")) from exc
    try:
        return PayoffSpec(parts["gamma"], parts["h"], K, restart)
    except (LevyImpulseError, ValueError) as exc:
        raise SpecParseError(str(exc), field="payoff.K", line=_line_of(text, "K")) from exc


def _numerics(data: dict[str, Any], text: str) -> Numerics:
    raw = dict(_section(data, "numerics", text, required=False))
    for alias, name in _NUMERICS_ALIASES.items():
        if alias in raw:
            raw[name] = raw.pop(alias)
    try:
        return Numerics.from_dict(raw)
    except (TypeError, ValueError) as exc:
        message = str(exc)
        if " must be " not in message:
            raise SpecParseError(message, field="numerics", line=_line_of(text, "numerics")) from exc
        name = message.split(" ", 1)[0]
        key = next((a for a, n in _NUMERICS_ALIASES.items() if n == name), name)
        raise SpecParseError(message, field=f"numerics.{key}", line=_line_of(text, key)) from exc


def parse_spec(text: str) -> ProblemSpec:
    """Parse a spec document, or the spec echoed inside a run-result document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"invalid JSON: {exc.msg}", field="document", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise SpecParseError("document must be a JSON object", field="document", line=1)
    if isinstance(data.get("spec"), dict):
        data = data["spec"]
    return ProblemSpec(_model(data, text), _payoff(data, text), _numerics(data, text))


def load_spec(path: str | Path) -> ProblemSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc.strerror}", field="document") from exc
    return parse_spec(text)


# --- Results ---


@dataclass
class RunResult:
    """Everything one command produced, serialisable to the result document."""

    spec: ProblemSpec
    command: str
    solution: PolicySolution | None = None
    simulation: SimulationReport | None = None
    verification: VerificationReport | None = None
    timings: dict[str, float] = field(default_factory=dict)
    degeneracy: str | None = None
    error: dict[str, Any] | None = None
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        degeneracy = self.degeneracy
        if degeneracy is None and self.solution is not None:
            degeneracy = self.solution.degeneracy.value
        return {
            "version": self.version,
            "command": self.command,
            "spec": self.spec.to_dict(),
            "solution": self.solution.to_dict() if self.solution else None,
            "simulation": self.simulation.to_dict() if self.simulation else None,
            "verification": self.verification.to_dict() if self.verification else None,
            "degeneracy": degeneracy,
            "error": self.error,
            "timings": self.timings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, allow_nan=True)
