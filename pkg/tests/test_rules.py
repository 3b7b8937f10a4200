"""Rule realization, ledger reproducibility, and registration probes."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scl.rules import (
    ConfigurationError,
    RealizedRule,
    RuleFamily,
    RuleLedger,
    RuleSchedule,
    RuleSpec,
    make_rule,
    register_custom,
    replay,
)

RUNNING = RuleFamily.RUNNING_COUNT_THRESHOLD
GATE = RuleFamily.COUNT_GATE
SHIFTED = RuleFamily.SHIFTED_THRESHOLD


def test_running_count_threshold_frozen():
    spec = RuleSpec(RUNNING, tau0=200, tau1=1)
    rule = make_rule(spec, [])
    assert rule(0.5) == 1
    assert rule(1.5) == 0
    # threshold moves up by 1/200 per past selection
    rule2 = make_rule(spec, [1, 1, 0, 1])
    assert rule2.threshold == 1 + 3 / 200


def test_count_gate_is_feature_free():
    spec = RuleSpec(GATE, tau1=16)
    fired = make_rule(spec, [1] * 17)
    assert fired.kind == "const" and fired.value == 1
    assert fired(0.0) == fired(100.0) == 1
    quiet = make_rule(spec, [1] * 16)
    assert quiet(0.0) == quiet(100.0) == 0


def test_shifted_threshold_saturates():
    spec = RuleSpec(SHIFTED, tau0=1, tau1=2)
    # once the count passes 2 * tau0 the threshold floor is tau1 - 2
    rule = make_rule(spec, [1, 1, 1])
    assert rule.threshold == 0.0
    assert rule(0.001) == 1 and rule(0.0) == 0
    cold = make_rule(spec, [])
    assert cold(1.999) == 0  # threshold 2 at a cold start


def test_descending_running_threshold():
    # negative tau0 makes the acceptance threshold fall with the count
    spec = RuleSpec(RUNNING, tau0=-20, tau1=2)
    assert make_rule(spec, []).threshold == 2.0
    rule = make_rule(spec, [1, 1, 1])
    assert rule.threshold == 2 - 3 / 20
    assert rule(1.8) == 1 and rule(1.9) == 0


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        RuleSpec(RUNNING, tau0=0)
    with pytest.raises(ConfigurationError):
        RuleSpec(SHIFTED, tau0=float("inf"))
    with pytest.raises(ConfigurationError):
        RuleSpec(RuleFamily.CUSTOM, custom_name="never-registered")


def test_custom_registration_probe():
    register_custom("parity", lambda bits, t, x: int(sum(bits) % 2 == 0))
    spec = RuleSpec(RuleFamily.CUSTOM, custom_name="parity")
    assert make_rule(spec, [1, 1])(0.3) == 1
    assert make_rule(spec, [1])(0.3) == 0

    calls = []

    def stateful(bits, t, x):
        calls.append(1)
        return len(calls) % 2

    with pytest.raises(ConfigurationError):
        register_custom("stateful", stateful)
    with pytest.raises(ConfigurationError):
        register_custom("nonbinary", lambda bits, t, x: 2)


def test_schedule_terminal_switch():
    sched = RuleSchedule(
        past=RuleSpec(RUNNING, tau0=-20, tau1=2),
        test=RuleSpec(GATE, tau1=16),
        terminal_time=19,
    )
    assert sched.spec_at(0).family is RUNNING
    assert sched.spec_at(18).family is RUNNING
    assert sched.spec_at(19).family is GATE
    with pytest.raises(ConfigurationError):
        RuleSchedule(past=RuleSpec(RUNNING, tau0=1), test=RuleSpec(GATE))


def test_ledger_build_and_replay():
    sched = RuleSchedule(past=RuleSpec(RUNNING, tau0=-20, tau1=2))
    ledger = RuleLedger.from_decisions(sched, [1, 0, 1])
    assert len(ledger) == 3
    assert ledger.entries[0].threshold == 2.0
    assert ledger.entries[1].threshold == 2 - 1 / 20
    assert ledger.entries[2].threshold == 2 - 1 / 20  # second bit was 0
    assert replay(ledger, 0, 1.99) == 1
    with pytest.raises(IndexError):
        replay(ledger, 3, 0.5)
    with pytest.raises(IndexError):
        replay(ledger, -1, 0.5)


def test_ledger_protocol_misuse():
    sched = RuleSchedule(past=RuleSpec(RUNNING, tau0=1))
    ledger = RuleLedger(sched)
    ledger.open_next()
    with pytest.raises(ConfigurationError):
        ledger.open_next()  # decision for time 0 not yet recorded
    ledger.record(1)
    with pytest.raises(ConfigurationError):
        ledger.record(0)  # no open rule


@given(bits=st.lists(st.integers(0, 1), min_size=1, max_size=30))
def test_ledger_prefix_measurability(bits):
    """Entry i depends only on the first i bits, never on later ones."""
    sched = RuleSchedule(past=RuleSpec(RUNNING, tau0=-20, tau1=2))
    full = RuleLedger.from_decisions(sched, bits)
    flipped = list(bits)
    flipped[-1] ^= 1
    other = RuleLedger.from_decisions(sched, flipped)
    for i in range(len(bits)):
        assert full.entries[i].threshold == other.entries[i].threshold


@given(
    bits=st.lists(st.integers(0, 1), max_size=25),
    tau0=st.sampled_from([-20.0, -5.0, 1.0, 20.0, 200.0]),
    tau1=st.floats(min_value=-2, max_value=3, allow_nan=False),
)
def test_make_rule_reproducible(bits, tau0, tau1):
    spec = RuleSpec(RUNNING, tau0=tau0, tau1=tau1)
    a = make_rule(spec, bits)
    b = make_rule(spec, tuple(bits))
    assert a.threshold == b.threshold
    assert isinstance(a, RealizedRule)
