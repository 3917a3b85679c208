"""Scenario execution: genesis construction and step-by-step replay.

The runner is the single writer: it turns each scenario step into a
transaction, applies it to the ledger, appends the applied transaction to
the chain log, and feeds the event to the journal.  Inline expectations are
evaluated against the live state.  The run stops at the first failure
(unexpected rejection, failed expectation, or a step that was marked
expect_fail but succeeded); everything before the failure remains valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .chainlog import ChainLog
from .domain import Role
from .errors import ErrorCode, LedgerError
from .fixed import Fixed
from .journal import Account, Journal
from .ledger import TokenLedger, Transaction, TxKind
from .scenario import Expectation, Scenario, Step

# scenario action -> (transaction kind, org-field mapping, amount key, payload keys)
_TX_BUILDERS = {
    "setRole": (TxKind.SET_ROLE, {"sender": "sender", "target": "target"}, None,
                {"role": "role"}),
    "mintPermit": (TxKind.MINT_PERMIT, {"signer": "sender", "target": "target"},
                   "amount", {}),
    "grantPermit": (TxKind.GRANT_PERMIT, {"signer": "sender", "target": "target"},
                    "amount", {}),
    "mintEmission": (TxKind.MINT_EMISSION, {"sender": "sender", "signer": "cosigner"},
                     "amount", {}),
    "transferPermit": (TxKind.TRANSFER_PERMIT, {"sender": "sender", "target": "target"},
                       "amount", {}),
    "burnToken": (TxKind.BURN_TOKEN, {"sender": "sender"}, "amount", {}),
    "tradeToken": (TxKind.TRADE_TOKEN, {"sender": "sender"}, "amount", {}),
    "convertCash": (TxKind.CONVERT_CASH, {"sender": "sender"}, "amount", {}),
    "setReserveFraction": (TxKind.SET_RESERVE_FRACTION, {"authority": "sender"},
                           None, {"fraction": "fraction"}),
    "adjustReserve": (TxKind.ADJUST_RESERVE, {"authority": "sender"}, "delta", {}),
    "setPrice": (TxKind.SET_PRICE, {"authority": "sender"}, None, {"price": "price"}),
}


@dataclass(frozen=True)
class StepResult:
    index: int
    time: str
    action: str
    status: str                      # applied | rejected | assert-ok | failed
    seq: Optional[int] = None
    error: Optional[str] = None      # error code name for rejections/failures
    detail: str = ""


@dataclass
class RunResult:
    scenario: Scenario
    genesis: TokenLedger
    final: TokenLedger
    chainlog: ChainLog
    journal: Journal
    steps: list[StepResult] = field(default_factory=list)
    ok: bool = True
    failure: Optional[StepResult] = None


def build_genesis(scenario: Scenario) -> TokenLedger:
    """Materialise the genesis state; nothing here enters the chain log."""
    ledger = TokenLedger()
    for org in scenario.genesis.orgs:
        ledger.setup_register_org(org.id, Role.from_string(org.role))
        if not org.cash.is_zero:
            ledger.setup_set_cash(org.id, org.cash)
    for project in scenario.genesis.projects:
        ledger.setup_register_project(project.owner, project.project)
    if scenario.genesis.exchange is not None:
        init = scenario.genesis.exchange
        ledger.setup_init_exchange(init.fraction, init.supply, init.reserve)
    return ledger


def _build_tx(step: Step, seq: int) -> Transaction:
    kind, org_map, amount_key, payload_map = _TX_BUILDERS[step.action]
    roles = {tx_field: step.fields[src] for src, tx_field in org_map.items()}
    amount = step.fields[amount_key] if amount_key else None
    payload = {}
    for src, name in payload_map.items():
        value = step.fields[src]
        payload[name] = value.micro if isinstance(value, Fixed) else value
    return Transaction(seq=seq, time=step.time, kind=kind, amount=amount,
                       payload=payload, **roles)


def _check_expectation(exp: Expectation, ledger: TokenLedger,
                       journal: Journal) -> tuple[bool, str]:
    if exp.org is not None:
        record = ledger.org(exp.org)
        if exp.org_field == "compliant":
            actual = ledger.compliance_check(exp.org).compliant
            return actual == exp.equals, f"{exp.org}.compliant = {actual}"
        if exp.org_field == "outstanding":
            actual = ledger.compliance_check(exp.org).outstanding_emissions
        else:
            actual = getattr(record, exp.org_field)
        return actual == exp.equals, f"{exp.org}.{exp.org_field} = {actual}"
    if exp.account is not None:
        nets = journal.trial_balance()
        match = next((a for a in Account if a.value == exp.account), None)
        if match is None:
            return False, f"unknown account {exp.account!r}"
        actual = nets[match]
        return actual == exp.equals, f"account {exp.account!r} nets {actual}"
    if exp.market is not None:
        actual = ledger.market_permit if exp.market == "permit" else ledger.market_emission
        return actual == exp.equals, f"market {exp.market} = {actual}"
    actual = ledger.market_price
    return actual == exp.equals, f"market price = {actual}"


def run_scenario(scenario: Scenario) -> RunResult:
    genesis = build_genesis(scenario)
    ledger = genesis.copy()
    chainlog = ChainLog.for_ledger(genesis)
    journal = Journal(opening_price=genesis.market_price)
    result = RunResult(scenario=scenario, genesis=genesis, final=ledger,
                       chainlog=chainlog, journal=journal)

    def fail(step: Step, code: ErrorCode, detail: str, seq: Optional[int] = None):
        record = StepResult(index=step.index, time=step.time, action=step.action,
                            status="failed", seq=seq, error=code.value, detail=detail)
        result.steps.append(record)
        result.ok = False
        result.failure = record

    for step in scenario.steps:
        if step.action == "expect":
            ok, detail = _check_expectation(step.expect, ledger, journal)
            if ok:
                result.steps.append(StepResult(index=step.index, time=step.time,
                                               action="expect", status="assert-ok",
                                               detail=detail))
            else:
                fail(step, ErrorCode.ASSERTION_FAILED,
                     f"expected {step.expect.equals}, got {detail}")
                break
            continue

        seq = ledger.seq + 1
        tx = _build_tx(step, seq)
        try:
            event = ledger.apply(tx)
        except LedgerError as exc:
            if step.expect_fail is not None and step.expect_fail in ("", exc.code.value):
                result.steps.append(StepResult(index=step.index, time=step.time,
                                               action=step.action, status="rejected",
                                               seq=seq, error=exc.code.value,
                                               detail=exc.message))
                continue
            fail(step, ErrorCode.TRANSACTION_REJECTED,
                 f"seq {seq} ({step.action}) rejected: {exc}", seq=seq)
            break
        if step.expect_fail is not None:
            fail(step, ErrorCode.ASSERTION_FAILED,
                 f"step was expected to fail with "
                 f"{step.expect_fail or 'any error'} but was applied", seq=seq)
            break
        chainlog.append(tx, ledger.state_digest())
        journal.on_event(event)
        result.steps.append(StepResult(index=step.index, time=step.time,
                                       action=step.action, status="applied", seq=seq))

    result.final = ledger
    return result
