"""STF-style conformance scripts: table setup, injected packets, expected
outputs with wildcard nibbles, run to quiescence, ordered comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import StfError, StuckError
from .explore import RunContext
from .pipeline import run_node
from .state import (BitStream, Packet, TargetProfile, apply_control_line,
                    new_config)

RUN_BUDGET = 10_000


@dataclass
class StfScript:
    statements: list  # (kind, payload, line_no)
    profile: str | None = None


def parse_stf(text: str) -> StfScript:
    statements = []
    profile = None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind in ("add", "register", "default"):
            statements.append(("control", line, ln))
        elif kind == "packet":
            if len(parts) != 3:
                raise StfError(f"line {ln}: packet <port> <hex>")
            port = int(parts[1], 0)
            data = parts[2]
            if len(data) % 2:
                raise StfError(f"line {ln}: hex data must have even length")
            statements.append(("packet", (port, data), ln))
        elif kind == "expect":
            if len(parts) != 3:
                raise StfError(f"line {ln}: expect <port> <hexpattern>")
            port = int(parts[1], 0)
            pattern = parts[2].upper()
            if len(pattern) % 2:
                raise StfError(f"line {ln}: pattern must have even length")
            if any(c not in "0123456789ABCDEF*" for c in pattern):
                raise StfError(f"line {ln}: pattern may contain hex digits "
                               "and * wildcards only")
            statements.append(("expect", (port, pattern), ln))
        elif kind == "no_packet":
            statements.append(("no_packet", None, ln))
        elif kind == "profile":
            if len(parts) != 2:
                raise StfError(f"line {ln}: profile <name>")
            profile = parts[1]
        else:
            raise StfError(f"line {ln}: unknown statement {kind!r}")
    return StfScript(statements, profile)


def pattern_matches(pattern: str, actual_hex: str) -> bool:
    if len(pattern) != len(actual_hex):
        return False
    return all(p == "*" or p == a for p, a in zip(pattern, actual_hex.upper()))


@dataclass
class StfResult:
    passed: bool
    failures: list = field(default_factory=list)
    outputs: list = field(default_factory=list)  # (port, hex) emission order
    status: tuple = ("awaiting-input",)

    def report_text(self) -> str:
        if self.passed:
            return "pass"
        return "fail:\n" + "\n".join(f"  {f}" for f in self.failures)


def run_stf_script(program, script: StfScript,
                   profile: TargetProfile | None = None, coverage=None) -> StfResult:
    """Install entries, inject packets in order, run to quiescence, and
    match emitted packets against expects per port in FIFO order."""
    if script.profile is not None:
        profile = TargetProfile.from_name(script.profile)
    cfg = new_config(program, profile)
    ctx = RunContext(coverage)
    result = StfResult(passed=True)

    def flush():
        run_node(cfg, RUN_BUDGET, ctx)
        return cfg.status[0] != "stuck"

    expects = []
    saw_no_packet = False
    for kind, payload, ln in script.statements:
        if cfg.status[0] == "stuck":
            break
        if kind == "control":
            # installs apply between packets: drain any queued work first
            if cfg.in_stream and not flush():
                break
            try:
                apply_control_line(cfg, payload, ln)
            except StfError:
                raise
            except Exception as e:
                result.failures.append(f"line {ln}: {e}")
                result.passed = False
                return result
        elif kind == "packet":
            port, data = payload
            cfg.in_stream.append(Packet(port, BitStream.from_hex(data)))
        elif kind == "expect":
            expects.append((payload[0], payload[1], ln))
        else:
            saw_no_packet = True
    if cfg.status[0] != "stuck" and cfg.in_stream:
        flush()
    result.status = cfg.status
    if cfg.status[0] == "stuck":
        result.passed = False
        result.failures.append(
            f"execution stuck: {cfg.status[1]} at {cfg.status[2]}")

    emitted = []
    for p in cfg.out_stream:
        hex_text = p.data.to_hex() if p.data.concrete else repr(p.data)
        emitted.append([p.port, hex_text, False])  # port, hex, matched
    result.outputs = [(p, h) for p, h, _ in emitted]

    for idx, (port, pattern, ln) in enumerate(expects):
        candidate = next((e for e in emitted if e[0] == port and not e[2]),
                         None)
        if candidate is None:
            result.passed = False
            result.failures.append(
                f"expect line {ln}: no packet on port {port} "
                f"(wanted {pattern})")
            continue
        candidate[2] = True
        if not pattern_matches(pattern, candidate[1]):
            result.passed = False
            result.failures.append(
                f"expect line {ln}: port {port} packet #{idx} mismatch: "
                f"expected {pattern}, got {candidate[1]}")
    if saw_no_packet:
        for port, hex_text, matched in emitted:
            if not matched:
                result.passed = False
                result.failures.append(
                    f"no_packet violated: unexpected packet on port "
                    f"{port}: {hex_text}")
    return result


def run_stf(p4_path: str, stf_path: str,
            profile: TargetProfile | None = None, coverage=None) -> StfResult:
    from .parser import parse_source
    from .program import elaborate
    program = elaborate(parse_source(open(p4_path).read()))
    script = parse_stf(open(stf_path).read())
    return run_stf_script(program, script, profile, coverage)


def coverage_run(pairs, profile: TargetProfile | None = None):
    """Aggregate semantic coverage over (p4_path, stf_path) pairs."""
    from .coverage import CoverageCounters
    counters = CoverageCounters()
    results = []
    for p4_path, stf_path in pairs:
        r = run_stf(p4_path, stf_path, profile, coverage=counters)
        results.append((p4_path, stf_path, r))
    return counters, results
