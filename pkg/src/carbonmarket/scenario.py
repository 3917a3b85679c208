"""Declarative scenario files: schema and validation.

A scenario is a YAML document with a genesis block (organisations, projects,
cash endowments, optional exchange bootstrap) and an ordered list of steps.
Each step carries a logical timestamp (compared as strings, so ISO dates
order correctly) and either one ledger action or an inline `expect`
assertion.  Amounts must be integers or quoted decimal strings; bare YAML
floats are rejected because they do not round-trip exactly.

Any transaction step may carry `expect_fail: <ErrorCode>` (or `true`) to
assert that the ledger rejects it; such steps leave no trace in the chain
log or journal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from .domain import ROLE_STRINGS
from .errors import ErrorCode, LedgerError, reject
from .fixed import Fixed
from .journal import Account

ACTIONS = (
    "setRole", "mintPermit", "grantPermit", "mintEmission", "transferPermit",
    "burnToken", "tradeToken", "convertCash", "setReserveFraction",
    "adjustReserve", "setPrice", "expect",
)

EXPECT_FIELDS = ("permit", "emission", "cash", "compliant", "outstanding")
EXPECT_MARKETS = ("permit", "emission")

# Required org-reference / value fields per action, used for validation.
_ACTION_ORG_FIELDS = {
    "setRole": ("sender", "target"),
    "mintPermit": ("signer", "target"),
    "grantPermit": ("signer", "target"),
    "mintEmission": ("sender", "signer"),
    "transferPermit": ("sender", "target"),
    "burnToken": ("sender",),
    "tradeToken": ("sender",),
    "convertCash": ("sender",),
    "setReserveFraction": ("authority",),
    "adjustReserve": ("authority",),
    "setPrice": ("authority",),
}

_ACTION_VALUE_FIELDS = {
    "setRole": ("role",),
    "mintPermit": ("amount",),
    "grantPermit": ("amount",),
    "mintEmission": ("amount",),
    "transferPermit": ("amount",),
    "burnToken": ("amount",),
    "tradeToken": ("amount",),
    "convertCash": ("amount",),
    "setReserveFraction": ("fraction",),
    "adjustReserve": ("delta",),
    "setPrice": ("price",),
}


@dataclass(frozen=True)
class GenesisOrg:
    id: str
    role: str
    cash: Fixed


@dataclass(frozen=True)
class GenesisProject:
    owner: str
    project: str


@dataclass(frozen=True)
class ExchangeInit:
    fraction: Fixed
    supply: Fixed
    reserve: Fixed


@dataclass(frozen=True)
class Genesis:
    orgs: tuple[GenesisOrg, ...]
    projects: tuple[GenesisProject, ...] = ()
    exchange: Optional[ExchangeInit] = None


@dataclass(frozen=True)
class Expectation:
    """Inline assertion: exactly one of the three subjects is set."""

    org: Optional[str] = None
    org_field: Optional[str] = None     # permit | emission | cash | compliant | outstanding
    account: Optional[str] = None       # journal account name, net Dr - Cr
    market: Optional[str] = None        # permit | emission market total
    price: bool = False                 # prevailing market price
    equals: Any = None


@dataclass(frozen=True)
class Step:
    index: int
    time: str
    action: str
    fields: dict = field(default_factory=dict)
    expect: Optional[Expectation] = None
    expect_fail: Optional[str] = None   # error code name, or "" for any


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    genesis: Genesis
    steps: tuple[Step, ...]

    @property
    def timestamps(self) -> tuple[str, ...]:
        seen: list[str] = []
        for step in self.steps:
            if step.time not in seen:
                seen.append(step.time)
        return tuple(seen)

    def action_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for step in self.steps:
            counts[step.action] = counts.get(step.action, 0) + 1
        return counts


def _schema_error(where: str, message: str) -> LedgerError:
    return reject(ErrorCode.SCHEMA_ERROR, f"{where}: {message}")


def _as_amount(where: str, key: str, value: Any) -> Fixed:
    if isinstance(value, float):
        raise _schema_error(where, f"field {key!r}: use an integer or a quoted "
                                   "decimal string, not a YAML float")
    try:
        return Fixed.parse(value)
    except (ValueError, TypeError, OverflowError) as exc:
        raise _schema_error(where, f"field {key!r}: {exc}") from exc


def _as_str(where: str, key: str, value: Any) -> str:
    if not isinstance(value, str) or not value:
        raise _schema_error(where, f"field {key!r} must be a non-empty string")
    return value


def _parse_genesis(raw: Any) -> Genesis:
    where = "genesis"
    if not isinstance(raw, dict):
        raise _schema_error(where, "must be a mapping")
    unknown = set(raw) - {"orgs", "projects", "exchange"}
    if unknown:
        raise _schema_error(where, f"unknown fields {sorted(unknown)}")
    orgs_raw = raw.get("orgs")
    if not isinstance(orgs_raw, list) or not orgs_raw:
        raise _schema_error(where, "orgs must be a non-empty list")

    orgs: list[GenesisOrg] = []
    seen: set[str] = set()
    for i, entry in enumerate(orgs_raw):
        w = f"genesis.orgs[{i}]"
        if not isinstance(entry, dict):
            raise _schema_error(w, "must be a mapping")
        unknown = set(entry) - {"id", "role", "cash"}
        if unknown:
            raise _schema_error(w, f"unknown fields {sorted(unknown)}")
        org_id = _as_str(w, "id", entry.get("id"))
        role = _as_str(w, "role", entry.get("role"))
        if role not in ROLE_STRINGS:
            raise _schema_error(w, f"role must be one of {ROLE_STRINGS}, got {role!r}")
        if org_id in seen:
            raise _schema_error(w, f"duplicate organisation id {org_id!r}")
        seen.add(org_id)
        cash = _as_amount(w, "cash", entry.get("cash", 0))
        if cash.is_negative:
            raise _schema_error(w, "cash endowment cannot be negative")
        orgs.append(GenesisOrg(id=org_id, role=role, cash=cash))

    projects: list[GenesisProject] = []
    seen_projects: set[str] = set()
    for i, entry in enumerate(raw.get("projects") or []):
        w = f"genesis.projects[{i}]"
        if not isinstance(entry, dict):
            raise _schema_error(w, "must be a mapping")
        unknown = set(entry) - {"owner", "project"}
        if unknown:
            raise _schema_error(w, f"unknown fields {sorted(unknown)}")
        owner = _as_str(w, "owner", entry.get("owner"))
        project = _as_str(w, "project", entry.get("project"))
        if owner not in seen:
            raise reject(ErrorCode.REFERENCE_ERROR,
                         f"{w}: owner {owner!r} is not declared in genesis.orgs")
        if project in seen_projects:
            raise _schema_error(w, f"duplicate project id {project!r}")
        seen_projects.add(project)
        projects.append(GenesisProject(owner=owner, project=project))

    exchange = None
    if raw.get("exchange") is not None:
        entry = raw["exchange"]
        w = "genesis.exchange"
        if not isinstance(entry, dict):
            raise _schema_error(w, "must be a mapping")
        unknown = set(entry) - {"fraction", "supply", "reserve"}
        if unknown:
            raise _schema_error(w, f"unknown fields {sorted(unknown)}")
        exchange = ExchangeInit(
            fraction=_as_amount(w, "fraction", entry.get("fraction")),
            supply=_as_amount(w, "supply", entry.get("supply")),
            reserve=_as_amount(w, "reserve", entry.get("reserve")),
        )

    return Genesis(orgs=tuple(orgs), projects=tuple(projects), exchange=exchange)


def _parse_expect(where: str, step: dict, declared: set[str]) -> Expectation:
    if "equals" not in step:
        raise _schema_error(where, "expect needs an `equals` value")
    equals = step["equals"]
    subjects = [k for k in ("org", "account", "market", "price") if k in step]
    if len(subjects) != 1:
        raise _schema_error(where, "expect needs exactly one subject: "
                                   "org+field, account, market, or price")
    subject = subjects[0]
    extra = set(step) - {"time", "action", "equals", "org", "field", "account",
                         "market", "price"}
    if extra:
        raise _schema_error(where, f"unknown fields {sorted(extra)}")

    if subject == "org":
        org = _as_str(where, "org", step["org"])
        if org not in declared:
            raise reject(ErrorCode.REFERENCE_ERROR,
                         f"{where}: org {org!r} is not declared in genesis")
        org_field = _as_str(where, "field", step.get("field"))
        if org_field not in EXPECT_FIELDS:
            raise _schema_error(where, f"field must be one of {EXPECT_FIELDS}")
        if org_field == "compliant":
            if not isinstance(equals, bool):
                raise _schema_error(where, "compliant expects true/false")
        else:
            equals = _as_amount(where, "equals", equals)
        return Expectation(org=org, org_field=org_field, equals=equals)
    if subject == "account":
        account = _as_str(where, "account", step["account"])
        if account not in {a.value for a in Account}:
            raise _schema_error(where, f"unknown journal account {account!r}")
        return Expectation(account=account, equals=_as_amount(where, "equals", equals))
    if subject == "market":
        market = _as_str(where, "market", step["market"])
        if market not in EXPECT_MARKETS:
            raise _schema_error(where, f"market must be one of {EXPECT_MARKETS}")
        return Expectation(market=market, equals=_as_amount(where, "equals", equals))
    # price
    if step.get("price") is not True:
        raise _schema_error(where, "price expectation is written `price: true`")
    return Expectation(price=True, equals=_as_amount(where, "equals", equals))


def _parse_step(index: int, raw: Any, declared: set[str]) -> Step:
    where = f"steps[{index}]"
    if not isinstance(raw, dict):
        raise _schema_error(where, "must be a mapping")
    time = raw.get("time")
    if time is None:
        raise _schema_error(where, "missing `time`")
    time = str(time)
    action = raw.get("action")
    if action not in ACTIONS:
        raise _schema_error(where, f"unknown action {action!r}; expected one of {ACTIONS}")

    if action == "expect":
        if "expect_fail" in raw:
            raise _schema_error(where, "expect steps cannot carry expect_fail")
        return Step(index=index, time=time, action=action,
                    expect=_parse_expect(where, raw, declared))

    org_fields = _ACTION_ORG_FIELDS[action]
    value_fields = _ACTION_VALUE_FIELDS[action]
    allowed = {"time", "action", "expect_fail", *org_fields, *value_fields}
    unknown = set(raw) - allowed
    if unknown:
        raise _schema_error(where, f"unknown fields {sorted(unknown)} for {action}")

    fields: dict[str, Any] = {}
    for key in org_fields:
        org = _as_str(where, key, raw.get(key))
        if org not in declared:
            raise reject(ErrorCode.REFERENCE_ERROR,
                         f"{where}: {key} {org!r} is not declared in genesis")
        fields[key] = org
    for key in value_fields:
        if key == "role":
            role = _as_str(where, key, raw.get(key))
            if role not in ROLE_STRINGS:
                raise _schema_error(where, f"role must be one of {ROLE_STRINGS}")
            fields[key] = role
        else:
            fields[key] = _as_amount(where, key, raw.get(key))

    expect_fail: Optional[str] = None
    if "expect_fail" in raw:
        value = raw["expect_fail"]
        if value is True:
            expect_fail = ""
        elif isinstance(value, str) and value in {c.value for c in ErrorCode}:
            expect_fail = value
        else:
            raise _schema_error(where, "expect_fail must be true or a known error code")

    return Step(index=index, time=time, action=action, fields=fields,
                expect_fail=expect_fail)


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise reject(ErrorCode.SYNTAX_ERROR, f"bad scenario file{at}: {exc}") from exc
    if not isinstance(raw, dict):
        raise _schema_error("document", "top level must be a mapping")
    unknown = set(raw) - {"name", "description", "genesis", "steps"}
    if unknown:
        raise _schema_error("document", f"unknown fields {sorted(unknown)}")
    name = _as_str("document", "name", raw.get("name"))
    description = raw.get("description") or ""
    if not isinstance(description, str):
        raise _schema_error("document", "description must be a string")

    genesis = _parse_genesis(raw.get("genesis"))
    declared = {org.id for org in genesis.orgs}

    steps_raw = raw.get("steps")
    if steps_raw is None:
        steps_raw = []
    if not isinstance(steps_raw, list):
        raise _schema_error("steps", "must be a list")
    steps = [_parse_step(i, entry, declared) for i, entry in enumerate(steps_raw)]

    last_time: Optional[str] = None
    for step in steps:
        if last_time is not None and step.time < last_time:
            raise _schema_error(f"steps[{step.index}]",
                                f"timestamp {step.time!r} precedes {last_time!r}")
        last_time = step.time

    return Scenario(name=name, description=description, genesis=genesis,
                    steps=tuple(steps))


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise reject(ErrorCode.SYNTAX_ERROR, f"cannot read scenario {path!r}: {exc}") from exc
    return parse_scenario(text)
