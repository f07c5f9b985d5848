"""Acceptance criteria, one test per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
pass lines.  Every tolerance is pinned here: behavioral checks are
bit-exact; the two case studies carry wall-clock budgets (10 s / 60 s).
"""

import itertools
import os
import random
import time

import pytest

from p4sim.explore import (ALL_KINDS, RunContext, SymbolicSpec, get_predicate,
                           replay_witness, search, symex_run)
from p4sim.hashes import crc16, crc32, csum16
from p4sim.network import (Link, NetState, Topology, net_step,
                           run_to_quiescence, single_node_net)
from p4sim.pipeline import run_node
from p4sim.state import (BitStream, Packet, TargetProfile,
                         apply_control_script, new_config)
from p4sim.stf import coverage_run, parse_stf, run_stf_script
from p4sim.values import UNSAT, SAT, Symbolic, constraint_sat, eq_constraint

from conftest import (BALANCER, BALANCER_INIT, BASIC_FORWARD, CORPUS_DIR,
                      ROUTER_L3, ROUTER_L3_INIT, TWO_DEPARSE,
                      TWO_DEPARSE_INIT, build, corpus_pairs)

from test_values import all_concretes, oracle_binop
from test_hashes import crc_bitwise, csum_oracle


def _report(n, text):
    print(f"\n[ACCEPTANCE] criterion {n}: PASS — {text}")


def test_criterion_1_symbolic_router_case_study():
    """Undefined egress reachable exactly when the parsed packet is
    ethernet with etherType != 0x0800; witness replays concretely."""
    t0 = time.monotonic()
    results, report, (baseline, pkt, atom_ids) = symex_run(
        build(ROUTER_L3), None, ROUTER_L3_INIT,
        SymbolicSpec(("ethernet",), payload_bytes=32),
        predicate=get_predicate("stuck:UNDEFINED_EGRESS"))
    elapsed = time.monotonic() - t0
    assert results, "no UNDEFINED_EGRESS path found"
    atoms = baseline.atoms
    et = Symbolic(atom_ids["ethernet.etherType"], 16)
    entailing = []
    for r in results:
        status, _ = constraint_sat(
            list(r.constraints) + [eq_constraint(et, 0x0800)], atoms)
        if status == UNSAT and r.world.configs["n0"].is_valid("ethernet"):
            entailing.append(r)
    assert entailing, "no path entails ethernet present and etherType != 0x0800"
    r = entailing[0]
    assert r.sat_status == SAT and r.witness is not None
    replayed = replay_witness(baseline, pkt, r.witness, r.path)
    cfg = replayed.configs["n0"]
    assert cfg.status[0] == "stuck" and cfg.status[1] == "UNDEFINED_EGRESS"
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    _report(1, f"stuck path with etherType != 0x0800 found and replayed "
               f"in {elapsed:.2f}s")


def test_criterion_2_balancer_bounded_property():
    """For every input stream of length <= 6 (over a 3-symbol alphabet of
    port/content shapes), the zero-register balancer emits exactly one
    packet per input, every output port is 0 or 1, and the port counts
    differ by at most 1."""
    t0 = time.monotonic()
    program = build(BALANCER)
    symbols = [(0, b"\x00"), (7, b"\xFF"), (3, b"\xA5\xB2")]
    checked = 0
    for n in range(7):
        for stream in itertools.product(symbols, repeat=n):
            cfg = new_config(program, TargetProfile.from_name("zero-registers"))
            apply_control_script(cfg, BALANCER_INIT)
            for port, data in stream:
                cfg.in_stream.append(Packet(port, BitStream.from_bytes(data)))
            run_node(cfg, 10)
            assert cfg.status[0] != "stuck"
            ports = [p.port for p in cfg.out_stream]
            assert len(ports) == n, "a packet was dropped or added"
            assert all(p in (0, 1) for p in ports)
            n0, n1 = ports.count(0), ports.count(1)
            assert abs(n0 - n1) <= 1
            # byte-exact passthrough of each packet
            assert [p.data.to_bytes() for p in cfg.out_stream] \
                == [d for _, d in stream]
            checked += 1
    elapsed = time.monotonic() - t0
    assert checked == sum(3 ** n for n in range(7))
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    _report(2, f"{checked} input streams of length <= 6, zero violations, "
               f"{elapsed:.1f}s")


def test_criterion_3_deparse_nondeterminism():
    net = single_node_net(build(TWO_DEPARSE))
    apply_control_script(net.configs["n0"], TWO_DEPARSE_INIT)
    net.inject("n0", Packet(0, BitStream.from_hex("01A1")))
    run_report = search(net, focus=frozenset())
    dep_report = search(net, focus=frozenset(["deparse-order"]))
    assert len(run_report.distinct_outputs()) == 1
    assert len(dep_report.distinct_outputs()) == 2
    _report(3, "2 distinct terminal outputs under deparse-order search, "
               "1 under run mode")


def test_criterion_4_semantic_coverage_bar():
    pairs = corpus_pairs()
    assert len(pairs) >= 20
    counters, results = coverage_run(pairs)
    failures = [(p, r.failures) for p, _, r in results if not r.passed]
    assert not failures, failures
    assert counters.fraction >= 0.95, counters.missed()
    small = [p for p in pairs if os.path.basename(p[0]) in
             ("basic_forward.p4", "drop_filter.p4", "subcontrol.p4")]
    small_counters, _ = coverage_run(small)
    assert small_counters.fraction < 0.60
    _report(4, f"full corpus {counters.fraction:.1%} >= 95%, "
               f"3-test subset {small_counters.fraction:.1%} < 60%")


def test_criterion_5a_binop_oracle_exhaustive():
    from p4sim.values import apply_binop, BINOPS, CMPOPS
    from p4sim.errors import StuckError
    for wa, wb in itertools.product(range(1, 5), repeat=2):
        for a in all_concretes(wa):
            for b in all_concretes(wb):
                for op in BINOPS + CMPOPS:
                    expected = oracle_binop(op, a, b)
                    if expected is None:
                        with pytest.raises(StuckError):
                            apply_binop(op, a, b)
                    else:
                        assert apply_binop(op, a, b).bits == expected
    _report("5a", "apply_binop bit-exact vs arbitrary-precision mask oracle, "
                  "exhaustive widths <= 4")


def test_criterion_5b_apply_table_oracle():
    from test_actions import _random_table_oracle_roundtrip
    rng = random.Random(20240817)
    for _ in range(8):
        _random_table_oracle_roundtrip(rng, 1, 8)
    _report("5b", "apply_table bit-exact vs linear max-priority scan, "
                  "exhaustive 8-bit sweep, <= 8 entries")


def test_criterion_5c_symex_partition():
    ctl = ("add t 3 h1.f1:0x01 => a(1)\n"
           "add t 2 h1.f1:0x02 => a(2)\n"
           "add t 1 h1.f1:0x03 => b()\n"
           "default t => b()\n")
    results, _, (baseline, pkt, atom_ids) = symex_run(
        build(BASIC_FORWARD), None, ctl, SymbolicSpec(("h1",), 0))
    f1, f2 = atom_ids["h1.f1"], atom_ids["h1.f2"]
    owners = {}
    for i, r in enumerate(results):
        assert r.sat_status == SAT
        for v1 in range(256):
            for v2 in (0x00, 0x7F, 0xFF):
                ok = all(c.holds(v1 if c.atom == f1 else v2)
                         for c in r.constraints if c.atom in (f1, f2))
                if ok:
                    key = (v1, v2)
                    assert key not in owners, f"{key} on two paths"
                    owners[key] = i
    assert len(owners) == 256 * 3
    _report("5c", "16 symbolic bits: path constraints partition the "
                  "concrete input space (exhaustive sweep)")


def test_criterion_5d_checksum_check_values():
    data = bytes([0x00, 0x01, 0xF2, 0x03, 0xF4, 0xF5, 0xF6, 0xF7])
    assert csum16(data) == 0x220D == csum_oracle(data)
    assert crc16(b"123456789") == 0xBB3D \
        == crc_bitwise(b"123456789", 0x8005, 16, 0, 0, True)
    assert crc32(b"123456789") == 0xCBF43926 \
        == crc_bitwise(b"123456789", 0x04C11DB7, 32, 0xFFFFFFFF,
                       0xFFFFFFFF, True)
    _report("5d", "csum16 0x220D, crc16 0xBB3D, crc32 0xCBF43926 match "
                  "independent bitwise recomputation")


def test_criterion_6_roundtrip_and_conservation():
    # parse-deparse identity, 1000 random packets, bit-exact
    rng = random.Random(0xC0FFEE)
    cfg = new_config(build(BASIC_FORWARD))
    apply_control_script(cfg, "default t => b()")
    for _ in range(1000):
        data = bytes(rng.randrange(256)
                     for _ in range(rng.randint(2, 64)))
        cfg.in_stream.clear()
        cfg.out_stream.clear()
        cfg.in_stream.append(Packet(0, BitStream.from_bytes(data)))
        run_node(cfg, 1)
        assert cfg.out_stream[0].data.to_bytes() == data

    # packet conservation over 500 random schedules on a 3-node chain
    fwd_src = """
header_type h_t { fields { f1 : 8; } }
header h_t h;
parser start { extract(h); return ingress; }
action out1() { modify_field(standard_metadata.egress_spec, 1); }
table t { reads { h : valid; } actions { out1; } }
control ingress { apply(t); }
"""
    program = build(fwd_src)

    class PickFirstChoice:
        def __init__(self, idx):
            self.idx = idx
            self.armed = True

        def hit(self, site):
            pass

        def choose(self, kind, site, labels):
            if self.armed:
                self.armed = False
                return self.idx
            return 0

        def fork_constraints(self, *a):
            raise AssertionError

    for trial in range(500):
        rng2 = random.Random(trial)
        prof = TargetProfile.from_name("")
        cfgs = {n: new_config(program, prof) for n in "abc"}
        topo = Topology({n: (program, prof, None) for n in "abc"},
                        [Link("a", 1, "b", 0), Link("b", 1, "c", 0)])
        net = NetState(topo, cfgs)
        for n in "abc":
            apply_control_script(net.configs[n], "add t 1 h:valid:1 => out1()")
        for i in range(rng2.randint(1, 4)):
            net.inject("a", Packet(0, BitStream.from_bytes(bytes([i])))
                       )
        for _ in range(100):
            counts = net.conservation_counts()
            assert counts["injected"] == (counts["in_flight"]
                                          + counts["captured"]
                                          + counts["dropped_by_programs"]
                                          + counts["dropped_by_links"])
            alts = net.alternatives()
            if not alts:
                break
            net_step(net, PickFirstChoice(rng2.randrange(len(alts))))
        assert net.conservation_counts()["captured"] == net.injected
    _report(6, "1000-packet parse/deparse identity and 500-schedule "
               "3-node packet conservation hold bit-exactly")


def test_criterion_7_run_equals_search_on_corpus():
    pairs = corpus_pairs()
    assert len(pairs) >= 20
    compared = 0
    for p4_path, stf_path in pairs:
        program = build(open(p4_path).read())
        script = parse_stf(open(stf_path).read())
        profile = TargetProfile.from_name(script.profile or "")
        # run mode via the harness
        run_result = run_stf_script(program, script, profile)
        # search mode with empty focus over the same injected stream
        net = single_node_net(program, profile)
        cfg = net.configs["n0"]
        for kind, payload, ln in script.statements:
            if kind == "control":
                from p4sim.state import apply_control_line
                apply_control_line(cfg, payload, ln)
            elif kind == "packet":
                net.inject("n0", Packet(payload[0],
                                        BitStream.from_hex(payload[1])))
        report = search(net, focus=frozenset(), max_states=100_000,
                        max_depth=100_000)
        assert len(report.terminals) == 1
        world = report.terminals[0].world
        got = [(p.port, p.data.to_hex()) for _, p in world.captured]
        assert got == run_result.outputs, p4_path
        stuck_search = world.configs["n0"].status[0] == "stuck"
        stuck_run = run_result.status[0] == "stuck"
        assert stuck_search == stuck_run, p4_path
        if stuck_run:
            assert world.configs["n0"].status[1] == run_result.status[1]
        compared += 1
    assert compared >= 20
    _report(7, f"run mode equals empty-focus search on {compared} corpus "
               "programs, byte-identical outputs and stuck statuses")
