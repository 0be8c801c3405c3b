"""Project model: ordered phases of work packages, each carrying an effort
estimate and a completion status.

The file format is UTF-8 JSON with a canonical rendering (two-space indent,
keys in schema order, trailing newline) so that serialize -> parse ->
serialize is byte-identical and project files diff cleanly under version
control.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterator, Union

from .distributions import (
    FAMILIES,
    Distribution,
    Logistic,
    Normal,
    PointValue,
    Triangular,
    Uniform,
)

__all__ = [
    "ProjectError",
    "UnknownItemError",
    "ManualEstimate",
    "HistoricalEstimate",
    "EstimateSpec",
    "WorkPackage",
    "Phase",
    "Project",
    "parse_project",
    "parse_distribution",
    "distribution_to_dict",
    "estimate_to_dict",
    "serialize_project",
    "default_template",
    "freeze",
    "set_estimate",
    "find_item",
]


class ProjectError(ValueError):
    """A project document or operation violated the model's invariants."""


class UnknownItemError(ProjectError):
    def __init__(self, item_id: str):
        super().__init__(f"unknown work package id {item_id!r}")
        self.item_id = item_id


@dataclass(frozen=True)
class ManualEstimate:
    """A hand-entered distribution, used as-is."""

    distribution: Distribution


@dataclass(frozen=True)
class HistoricalEstimate:
    """Fit the best family to stored actuals under ``key`` at simulation time."""

    key: str
    families: tuple[str, ...] = FAMILIES


EstimateSpec = Union[ManualEstimate, HistoricalEstimate]


@dataclass(frozen=True)
class WorkPackage:
    """One task-level WBS item. ``actual`` is set once the item completes;
    ``prior_estimate`` keeps the pre-completion estimate for
    estimate-vs-actual audits."""

    id: str
    name: str
    estimate: EstimateSpec
    actual: float | None = None
    prior_estimate: EstimateSpec | None = None

    @property
    def completed(self) -> bool:
        return self.actual is not None


@dataclass(frozen=True)
class Phase:
    """A lifecycle super task grouping work packages; the optional milestone
    is an annotation with no duration of its own."""

    name: str
    work_packages: tuple[WorkPackage, ...]
    milestone: str | None = None


@dataclass(frozen=True)
class Project:
    name: str
    phases: tuple[Phase, ...]

    def items(self) -> Iterator[tuple[Phase, WorkPackage]]:
        for phase in self.phases:
            for wp in phase.work_packages:
                yield phase, wp


_FAMILY_PARSERS = {
    "point": (PointValue, ("value",)),
    "normal": (Normal, ("mean", "sd")),
    "triangular": (Triangular, ("min", "mode", "max")),
    "uniform": (Uniform, ("min", "max")),
    "logistic": (Logistic, ("location", "scale")),
}


def _fail(path: str, message: str) -> None:
    raise ProjectError(f"{path}: {message}")


def _obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        _fail(path, f"expected an object, got {type(value).__name__}")
    return value


def _text(value, path: str) -> str:
    if not isinstance(value, str) or not value.strip():
        _fail(path, "expected a nonempty string")
    return value


def _number(value, path: str) -> float:
    # bool is an int subclass; a JSON true/false here is always a mistake
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _take(obj: dict, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> dict:
    for key in required:
        if key not in obj:
            _fail(path, f"missing required field {key!r}")
    for key in obj:
        if key not in required and key not in optional:
            _fail(f"{path}.{key}", "unknown field")
    return obj


def parse_distribution(value, path: str = "estimate") -> Distribution:
    """Parse a manual-estimate distribution object {type, params}."""
    obj = _obj(value, path)
    _take(obj, path, ("type", "params"))
    family = _text(obj["type"], f"{path}.type")
    if family not in _FAMILY_PARSERS:
        _fail(f"{path}.type", f"unknown distribution type {family!r}")
    cls, fields = _FAMILY_PARSERS[family]
    params = _obj(obj["params"], f"{path}.params")
    _take(params, f"{path}.params", fields)
    d = cls(*(_number(params[f], f"{path}.params.{f}") for f in fields))
    bad = d.violations()
    if bad:
        _fail(f"{path}.params", "; ".join(bad))
    return d


def _parse_estimate(value, path: str) -> EstimateSpec:
    obj = _obj(value, path)
    if obj.get("type") == "historical":
        _take(obj, path, ("type", "key"), ("families",))
        key = _text(obj["key"], f"{path}.key")
        families = obj.get("families")
        if families is None:
            return HistoricalEstimate(key)
        if not isinstance(families, list) or not families:
            _fail(f"{path}.families", "expected a nonempty list of family tags")
        for i, fam in enumerate(families):
            if fam not in _FAMILY_PARSERS:
                _fail(f"{path}.families[{i}]", f"unknown distribution type {fam!r}")
        return HistoricalEstimate(key, tuple(families))
    return ManualEstimate(parse_distribution(obj, path))


def _parse_work_package(value, path: str) -> WorkPackage:
    obj = _obj(value, path)
    _take(obj, path, ("id", "name", "status", "estimate"), ("prior_estimate",))
    wp_id = _text(obj["id"], f"{path}.id")
    name = _text(obj["name"], f"{path}.name")
    status = _obj(obj["status"], f"{path}.status")
    state = status.get("state")
    if state == "pending":
        _take(status, f"{path}.status", ("state",))
        actual = None
    elif state == "completed":
        _take(status, f"{path}.status", ("state", "actual"))
        actual = _number(status["actual"], f"{path}.status.actual")
        if actual < 0:
            _fail(f"{path}.status.actual", "actual effort must be >= 0")
    else:
        _fail(f"{path}.status.state", "expected 'pending' or 'completed'")
    estimate = _parse_estimate(obj["estimate"], f"{path}.estimate")
    prior = None
    if "prior_estimate" in obj:
        prior = _parse_estimate(obj["prior_estimate"], f"{path}.prior_estimate")
    return WorkPackage(wp_id, name, estimate, actual, prior)


def parse_project(document: str | bytes) -> Project:
    """Parse and fully validate a project file. Raises ProjectError with the
    offending JSON path on any violation."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        root = json.loads(document)
    except json.JSONDecodeError as e:
        raise ProjectError(f"invalid JSON: {e}") from None
    _obj(root, "$")
    _take(root, "$", ("name", "phases"))
    name = _text(root["name"], "$.name")
    raw_phases = root["phases"]
    if not isinstance(raw_phases, list) or not raw_phases:
        _fail("$.phases", "expected a nonempty list of phases")
    phases = []
    seen_ids: dict[str, str] = {}
    seen_phases: set[str] = set()
    for pi, raw_phase in enumerate(raw_phases):
        ppath = f"$.phases[{pi}]"
        pobj = _obj(raw_phase, ppath)
        _take(pobj, ppath, ("name", "work_packages"), ("milestone",))
        pname = _text(pobj["name"], f"{ppath}.name")
        if pname in seen_phases:
            _fail(f"{ppath}.name", f"duplicate phase name {pname!r}")
        seen_phases.add(pname)
        milestone = None
        if "milestone" in pobj:
            milestone = _text(pobj["milestone"], f"{ppath}.milestone")
        raw_wps = pobj["work_packages"]
        if not isinstance(raw_wps, list) or not raw_wps:
            _fail(f"{ppath}.work_packages", "expected a nonempty list of work packages")
        wps = []
        for wi, raw_wp in enumerate(raw_wps):
            wpath = f"{ppath}.work_packages[{wi}]"
            wp = _parse_work_package(raw_wp, wpath)
            if wp.id in seen_ids:
                _fail(f"{wpath}.id", f"duplicate work package id {wp.id!r} (also used in {seen_ids[wp.id]})")
            seen_ids[wp.id] = wpath
            wps.append(wp)
        phases.append(Phase(pname, tuple(wps), milestone))
    return Project(name, tuple(phases))


def distribution_to_dict(d: Distribution) -> dict:
    return {"type": d.family, "params": d.params()}


def estimate_to_dict(e: EstimateSpec) -> dict:
    if isinstance(e, HistoricalEstimate):
        return {"type": "historical", "key": e.key, "families": list(e.families)}
    return distribution_to_dict(e.distribution)


def _work_package_to_dict(wp: WorkPackage) -> dict:
    if wp.completed:
        status: dict = {"state": "completed", "actual": wp.actual}
    else:
        status = {"state": "pending"}
    out = {
        "id": wp.id,
        "name": wp.name,
        "status": status,
        "estimate": estimate_to_dict(wp.estimate),
    }
    if wp.prior_estimate is not None:
        out["prior_estimate"] = estimate_to_dict(wp.prior_estimate)
    return out


def _phase_to_dict(phase: Phase) -> dict:
    out: dict = {"name": phase.name}
    if phase.milestone is not None:
        out["milestone"] = phase.milestone
    out["work_packages"] = [_work_package_to_dict(wp) for wp in phase.work_packages]
    return out


def serialize_project(project: Project) -> str:
    """Canonical project JSON: schema-ordered keys, two-space indent,
    newline-terminated."""
    doc = {"name": project.name, "phases": [_phase_to_dict(p) for p in project.phases]}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def find_item(project: Project, item_id: str) -> WorkPackage:
    for _, wp in project.items():
        if wp.id == item_id:
            return wp
    raise UnknownItemError(item_id)


def _map_item(project: Project, item_id: str, fn) -> Project:
    found = False
    phases = []
    for phase in project.phases:
        wps = []
        for wp in phase.work_packages:
            if wp.id == item_id:
                wp = fn(wp)
                found = True
            wps.append(wp)
        phases.append(replace(phase, work_packages=tuple(wps)))
    if not found:
        raise UnknownItemError(item_id)
    return replace(project, phases=tuple(phases))


def freeze(project: Project, item_id: str, actual: float) -> Project:
    """Mark a work package completed with its actual effort, replacing its
    estimate by PointValue(actual). The original estimate is kept in
    prior_estimate the first time the item is frozen."""
    if actual < 0:
        raise ProjectError(f"actual effort must be >= 0, got {actual}")

    def apply(wp: WorkPackage) -> WorkPackage:
        prior = wp.prior_estimate if wp.prior_estimate is not None else wp.estimate
        return replace(
            wp,
            estimate=ManualEstimate(PointValue(float(actual))),
            actual=float(actual),
            prior_estimate=prior,
        )

    return _map_item(project, item_id, apply)


def set_estimate(project: Project, item_id: str, estimate: EstimateSpec) -> Project:
    """Replace one item's estimate, leaving status untouched."""
    return _map_item(project, item_id, lambda wp: replace(wp, estimate=estimate))


def default_template() -> Project:
    """The worked example's WBS: three estimated bid-stage phases plus
    placeholder phases for the rest of the lifecycle, carrying zero-effort
    items until real estimates replace them."""
    manual = lambda d: ManualEstimate(d)
    hist = lambda key: HistoricalEstimate(key)
    return Project(
        name="Software Project",
        phases=(
            Phase(
                "Planning & Bid Preparation",
                (
                    WorkPackage("RO", "Review Opportunity", manual(PointValue(15.0))),
                    WorkPackage("PS", "Project Scoping", hist("project-scoping")),
                    WorkPackage("PP", "Project Plan", hist("project-plan")),
                    WorkPackage("CE", "Cost Estimation", hist("cost-estimation")),
                ),
                milestone="Bid Submission",
            ),
            Phase(
                "Requirements Definition",
                (
                    WorkPackage("CR", "Capacity Planning/Resource Allocation", manual(Uniform(30.0, 100.0))),
                    WorkPackage("DR", "Draft Requirements Documents", manual(Uniform(50.0, 80.0))),
                    WorkPackage("QP", "Quality Plan", hist("quality-plan")),
                    WorkPackage("TP", "Draft System Test Plan", manual(Triangular(25.0, 50.0, 60.0))),
                    WorkPackage("FR", "Finalise Requirements Documents", manual(Uniform(20.0, 90.0))),
                ),
                milestone="Requirements Review",
            ),
            Phase(
                "Analysis & Design",
                (
                    WorkPackage("DS", "Draft Design Specification", manual(PointValue(40.0))),
                    WorkPackage("IP", "Integration Test Plan", manual(Normal(50.0, 10.0))),
                    WorkPackage("CP", "Configuration Management Plan", manual(Triangular(20.0, 60.0, 100.0))),
                    WorkPackage("FM", "Modelling", manual(Uniform(10.0, 60.0))),
                    WorkPackage("FD", "Finalise Design Specification", hist("finalise-design-specification")),
                ),
                milestone="Critical Design Review",
            ),
            Phase(
                "Coding & Debugging",
                (WorkPackage("CD", "Coding & Debugging", manual(PointValue(0.0))),),
            ),
            Phase(
                "Integration & Testing",
                (WorkPackage("IT", "Integration & Testing", manual(PointValue(0.0))),),
            ),
            Phase(
                "Deployment & Acceptance",
                (WorkPackage("DA", "Deployment & Acceptance", manual(PointValue(0.0))),),
            ),
        ),
    )
