"""Command-line interface.

Exit codes: 0 pass, 1 usage or input error, 2 property/stuck finding,
3 budget exhausted with partial results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import P4Error
from .explore import (ALL_KINDS, ORDER_KINDS, RunContext, SymbolicSpec,
                      get_predicate, replay_witness, search, symex_run)
from .network import load_topology, run_to_quiescence, single_node_net
from .parser import parse_source
from .pipeline import run_node
from .program import elaborate
from .state import (BitStream, Packet, TargetProfile, apply_control_script,
                    new_config)
from .stf import coverage_run, run_stf

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FINDING = 2
EXIT_BUDGET = 3


def _load_program(path):
    return elaborate(parse_source(open(path).read()))


def _parse_packets_file(path):
    out = []
    for ln, raw in enumerate(open(path).read().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise P4Error("BAD_PACKETS_FILE",
                          f"line {ln}: expected `<port> <hex>`")
        out.append((int(parts[0], 0), parts[1]))
    return out


def _parse_focus(text):
    if text in (None, "", "all"):
        return ALL_KINDS
    if text == "none":
        return frozenset()
    kinds = frozenset(k.strip() for k in text.split(",") if k.strip())
    unknown = kinds - ALL_KINDS
    if unknown:
        raise P4Error("BAD_FOCUS",
                      f"unknown choice kinds: {', '.join(sorted(unknown))}; "
                      f"known: {', '.join(sorted(ALL_KINDS))}")
    return kinds


def _write_report(path, diagnostics, atoms=None):
    records = []
    for d in diagnostics:
        witness = None
        if d.witness is not None:
            witness = {}
            for aid, val in d.witness.items():
                label = ""
                if atoms is not None and aid in atoms.defs:
                    label = atoms.defs[aid].label
                witness[label or f"a{aid}"] = val
        records.append({
            "reason": d.reason,
            "site": d.site,
            "node": d.node,
            "path": [list(step) for step in d.path],
            "constraints": [c.pretty(atoms) for c in d.constraints],
            "sat": d.sat_status,
            "witness": witness,
        })
    with open(path, "w") as f:
        json.dump(records, f, indent=2)


def _print_diags(diags, atoms=None):
    for d in diags:
        print("finding:", d.pretty(atoms))
        if d.witness:
            pretty = {}
            for aid, val in d.witness.items():
                label = atoms.defs[aid].label if atoms else ""
                pretty[label or f"a{aid}"] = hex(val)
            print("  witness:", pretty)


def cmd_run(args):
    program = _load_program(args.program)
    for w in program.warnings:
        print("warning:", w, file=sys.stderr)
    if args.dump_deparse:
        print(program.deparse.dot())
    cfg = new_config(program, TargetProfile.from_name(args.profile))
    if args.init:
        apply_control_script(cfg, open(args.init).read())
    if args.packets:
        for port, data in _parse_packets_file(args.packets):
            cfg.in_stream.append(Packet(port, BitStream.from_hex(data)))
    run_node(cfg, args.max_packets, RunContext())
    for p in cfg.out_stream:
        print(f"out {p.port} {p.data.to_hex()}")
    print(f"status: {' '.join(str(x) for x in cfg.status)}")
    return EXIT_FINDING if cfg.status[0] == "stuck" else EXIT_OK


def cmd_stf(args):
    result = run_stf(args.program, args.stf,
                     TargetProfile.from_name(args.profile))
    print(result.report_text())
    return EXIT_OK if result.passed else EXIT_FINDING


def _build_world(args):
    if args.target.endswith(".p4"):
        program = _load_program(args.target)
        net = single_node_net(program, TargetProfile.from_name(args.profile))
        if args.init:
            apply_control_script(net.configs["n0"], open(args.init).read())
        if args.packets:
            for port, data in _parse_packets_file(args.packets):
                net.inject("n0", Packet(port, BitStream.from_hex(data)))
        return net, program
    net = load_topology(args.target)
    if args.packets:
        raise P4Error("BAD_USAGE", "--packets applies to single programs; "
                      "inject via `net` injection files instead")
    return net, None


def cmd_search(args):
    net, _program = _build_world(args)
    report = search(net, max_states=args.max_states, max_depth=args.max_depth,
                    focus=_parse_focus(args.focus))
    outputs = report.distinct_outputs()
    print(f"explored {report.states_explored} states, "
          f"{len(report.terminals)} terminal states, "
          f"{len(outputs)} distinct terminal outputs")
    for kind in sorted(report.alt_coverage):
        print(f"  explored {kind}: {report.alt_coverage[kind]} alternatives")
    _print_diags(report.diagnostics, net.atoms)
    if args.report:
        _write_report(args.report, report.diagnostics, net.atoms)
    if report.diagnostics:
        return EXIT_FINDING
    if report.budget_exceeded:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_symex(args):
    program = _load_program(args.program)
    init_text = open(args.init).read() if args.init else ""
    spec = SymbolicSpec.parse(args.symbolic, args.payload_bytes, args.port)
    predicate = get_predicate(args.predicate)
    results, report, (baseline, pkt, atom_ids) = symex_run(
        program, TargetProfile.from_name(args.profile), init_text, spec,
        predicate, max_states=args.max_states, max_depth=args.max_depth)
    atoms = baseline.atoms
    stuck = 0
    for r in results:
        cs = " and ".join(c.pretty(atoms) for c in r.constraints) or "true"
        print(f"path [{r.kind}] ({r.sat_status}) when {cs}")
        if r.kind == "stuck" and r.diagnostic:
            stuck += 1
            print(f"  reason: {r.diagnostic.reason} at {r.diagnostic.site}")
        if r.witness is not None:
            pretty = {(atoms.defs[a].label or f"a{a}"): hex(v)
                      for a, v in r.witness.items()}
            print(f"  witness: {pretty}")
    if args.report:
        _write_report(args.report, [r.diagnostic for r in results
                                    if r.diagnostic is not None], atoms)
    if stuck:
        return EXIT_FINDING
    if report.budget_exceeded:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_net(args):
    net = load_topology(args.topology)
    if args.inject:
        for ln, raw in enumerate(open(args.inject).read().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            node, port, data = line.split()
            net.inject(node, Packet(int(port, 0), BitStream.from_hex(data)))
    if args.search:
        report = search(net, max_states=args.max_states,
                        max_depth=args.steps, focus=_parse_focus(args.focus))
        print(f"explored {report.states_explored} states, "
              f"{len(report.terminals)} terminal states, "
              f"{len(report.distinct_outputs())} distinct terminal outputs")
        _print_diags(report.diagnostics, net.atoms)
        if args.report:
            _write_report(args.report, report.diagnostics, net.atoms)
        if report.diagnostics:
            return EXIT_FINDING
        if report.budget_exceeded:
            return EXIT_BUDGET
        return EXIT_OK
    run_to_quiescence(net, RunContext(), args.steps)
    for nid, p in net.captured:
        print(f"capture {nid} {p.port} {p.data.to_hex()}")
    stuck = [nid for nid in net.configs if net.node_stuck(nid)]
    for nid in stuck:
        cfg = net.configs[nid]
        print(f"node {nid} stuck: {cfg.status[1]} at {cfg.status[2]}")
    return EXIT_FINDING if stuck else EXIT_OK


def cmd_coverage(args):
    pairs = []
    for name in sorted(os.listdir(args.directory)):
        if name.endswith(".p4"):
            stf = os.path.join(args.directory, name[:-3] + ".stf")
            if os.path.exists(stf):
                pairs.append((os.path.join(args.directory, name), stf))
    if not pairs:
        print("no (p4, stf) pairs found")
        return EXIT_USAGE
    counters, results = coverage_run(pairs)
    failed = 0
    for p4_path, _stf_path, r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{status} {os.path.basename(p4_path)}")
        if not r.passed:
            failed += 1
            for f in r.failures:
                print(f"    {f}")
    print(counters.report_text())
    return EXIT_FINDING if failed else EXIT_OK


def cmd_check(args):
    if args.symbolic:
        args.predicate = args.predicate or "stuck"
        return cmd_symex(args)
    args.target = args.program
    args.focus = args.focus or "all"
    return cmd_search(args)


def _add_budget_args(p):
    p.add_argument("--max-states", type=int, default=20_000)
    p.add_argument("--max-depth", type=int, default=400)
    p.add_argument("--report", help="write structured diagnostics (JSON)")


def build_arg_parser():
    ap = argparse.ArgumentParser(
        prog="p4sim",
        description="Interpreter, simulator, and analysis tools for P4_14 "
                    "packet processors")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="interpret one program on concrete packets")
    p.add_argument("program")
    p.add_argument("--init", help="control script installing entries")
    p.add_argument("--packets", help="file of `<port> <hex>` lines")
    p.add_argument("--profile", default="default")
    p.add_argument("--max-packets", type=int, default=1000)
    p.add_argument("--dump-deparse", action="store_true",
                   help="print the deparse precedence DAG as DOT")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("stf", help="run an STF conformance script")
    p.add_argument("program")
    p.add_argument("stf")
    p.add_argument("--profile", default="default")
    p.set_defaults(fn=cmd_stf)

    p = sub.add_parser("search", help="explore nondeterminism exhaustively")
    p.add_argument("target", help="a .p4 program or a topology file")
    p.add_argument("--init")
    p.add_argument("--packets")
    p.add_argument("--profile", default="default")
    p.add_argument("--focus", default="all",
                   help="comma list of choice kinds, or all/none")
    _add_budget_args(p)
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("symex", help="bounded symbolic packet exploration")
    p.add_argument("program")
    p.add_argument("--symbolic", required=True,
                   help="comma list of instances or inst.field atoms")
    p.add_argument("--predicate", default="any")
    p.add_argument("--init")
    p.add_argument("--profile", default="default")
    p.add_argument("--payload-bytes", type=int, default=32)
    p.add_argument("--port", type=int, default=0)
    _add_budget_args(p)
    p.set_defaults(fn=cmd_symex)

    p = sub.add_parser("net", help="simulate a network of programs")
    p.add_argument("topology")
    p.add_argument("--inject", help="file of `<node> <port> <hex>` lines")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--search", action="store_true")
    p.add_argument("--focus", default="all")
    _add_budget_args(p)
    p.set_defaults(fn=cmd_net)

    p = sub.add_parser("coverage", help="semantic coverage of an STF corpus")
    p.add_argument("directory")
    p.set_defaults(fn=cmd_coverage)

    p = sub.add_parser("check",
                       help="hunt for stuck states (unportable code)")
    p.add_argument("program")
    p.add_argument("--symbolic")
    p.add_argument("--predicate")
    p.add_argument("--init")
    p.add_argument("--packets")
    p.add_argument("--profile", default="default")
    p.add_argument("--focus")
    p.add_argument("--payload-bytes", type=int, default=32)
    p.add_argument("--port", type=int, default=0)
    _add_budget_args(p)
    p.set_defaults(fn=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_arg_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.fn(args)
    except P4Error as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
