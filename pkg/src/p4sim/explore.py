"""Explicit-state search over nondeterminism points, symbolic forking, and
stuck-state diagnostics.

Execution engines signal nondeterminism through the context object's
`choose` (order/schedule/loss alternatives) and `fork_constraints`
(symbolic branches).  Search re-executes one scheduling step under growing
choice journals until every internal path of that step is enumerated, then
explores breadth-first over whole network states with hash deduplication.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import StuckError
from .network import NetState, net_step, single_node_net
from .state import Packet, BitStream, apply_control_script
from .values import SAT, UNSAT, UNKNOWN, constraint_sat

ORDER_KINDS = ("deparse-order", "verify-order", "update-order",
               "stateful-update-order", "network-schedule", "link-loss")
ALL_KINDS = frozenset(ORDER_KINDS) | {"symbolic-branch"}


class ChoiceNeeded(Exception):
    def __init__(self, kind, site, n, branch_constraints=None):
        self.kind = kind
        self.site = site
        self.n = n
        self.branch_constraints = branch_constraints
        super().__init__(f"unresolved choice {kind} at {site}")


class PathUnsat(Exception):
    pass


class RunContext:
    """Concrete single-run context: canonical alternative everywhere."""

    def __init__(self, coverage=None):
        self.coverage = coverage
        self.trace = []

    def hit(self, site):
        if self.coverage is not None:
            self.coverage.hit(site)

    def choose(self, kind, site, labels):
        if len(labels) > 1:
            self.trace.append((kind, site, labels[0], 0))
        return 0

    def fork_constraints(self, kind, site, branches):
        raise AssertionError(
            "symbolic value reached a branch in concrete run mode")


class JournalContext:
    """Replays a prescribed pick journal; raises ChoiceNeeded past its end."""

    def __init__(self, journal, constraints, atoms, focus=ALL_KINDS,
                 coverage=None, sat_check=True):
        self.journal = journal
        self.cursor = 0
        self.constraints = list(constraints)
        self.atoms = atoms
        self.focus = focus
        self.coverage = coverage
        self.sat_check = sat_check
        self.trace = []

    def hit(self, site):
        if self.coverage is not None:
            self.coverage.hit(site)

    def _next_pick(self, kind, site, n, branch_constraints=None):
        if self.cursor < len(self.journal):
            pick = self.journal[self.cursor]
            self.cursor += 1
            return pick
        raise ChoiceNeeded(kind, site, n, branch_constraints)

    def choose(self, kind, site, labels):
        if len(labels) == 1:
            return 0
        if kind not in self.focus:
            self.trace.append((kind, site, labels[0], 0))
            return 0
        pick = self._next_pick(kind, site, len(labels))
        self.trace.append((kind, site, labels[pick], pick))
        return pick

    def fork_constraints(self, kind, site, branches):
        # symbolic branches are always explored: they have no canonical side
        pick = self._next_pick(kind, site, len(branches),
                               [cs for _, cs in branches])
        label, cs = branches[pick]
        self.constraints.extend(cs)
        self.trace.append((kind, site, label, pick))
        if self.sat_check and cs:
            status, _ = constraint_sat(self.constraints, self.atoms)
            if status == UNSAT:
                raise PathUnsat()
        return pick


class ReplayContext:
    """Concrete re-execution following a recorded trace's order picks."""

    def __init__(self, picks, coverage=None):
        self.picks = deque(picks)
        self.coverage = coverage
        self.trace = []

    def hit(self, site):
        if self.coverage is not None:
            self.coverage.hit(site)

    def choose(self, kind, site, labels):
        if len(labels) == 1:
            return 0
        if not self.picks:
            return 0
        rec_kind, pick = self.picks.popleft()
        assert rec_kind == kind, f"replay desync: {rec_kind} vs {kind}"
        return min(pick, len(labels) - 1)

    def fork_constraints(self, kind, site, branches):
        raise AssertionError("replay must be fully concrete")


def explore_step(world, step_fn, constraints, focus=ALL_KINDS, coverage=None):
    """Enumerate every internal path of one step by journal extension.

    Returns a list of (world', constraints', trace) outcomes; unsatisfiable
    symbolic branches are pruned.
    """
    outcomes = []
    frontier = deque([[]])
    while frontier:
        journal = frontier.popleft()
        w = world.clone()
        ctx = JournalContext(journal, constraints, w.atoms, focus, coverage)
        try:
            step_fn(w, ctx)
        except ChoiceNeeded as e:
            for i in range(e.n):
                if e.branch_constraints is not None:
                    status, _ = constraint_sat(
                        ctx.constraints + e.branch_constraints[i], w.atoms)
                    if status == UNSAT:
                        continue
                frontier.append(journal + [i])
            continue
        except PathUnsat:
            continue
        outcomes.append((w, ctx.constraints, tuple(ctx.trace)))
    return outcomes


@dataclass
class SearchState:
    world: NetState
    constraints: tuple
    path: tuple
    depth: int


@dataclass
class Diagnostic:
    reason: str
    site: str
    node: str
    path: tuple
    constraints: tuple
    sat_status: str = SAT
    witness: dict | None = None

    def pretty(self, atoms=None) -> str:
        cs = " and ".join(c.pretty(atoms) for c in self.constraints) or "true"
        return (f"{self.reason} at {self.site} [node {self.node}] "
                f"when {cs} ({self.sat_status})")


@dataclass
class SearchReport:
    terminals: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    alt_coverage: dict = field(default_factory=dict)
    states_explored: int = 0
    budget_exceeded: bool = False

    def distinct_outputs(self):
        return {s.world.outputs_canon() for s in self.terminals}


def _constraints_digest(constraints):
    return tuple(sorted(repr(c) for c in constraints))


def search(initial: NetState, max_states=10_000, max_depth=1_000,
           focus=frozenset(), base_constraints=(), coverage=None,
           collect_arrivals=None) -> SearchReport:
    """Breadth-first exploration of a network state.

    `focus` selects which order/schedule/loss kinds fork; kinds outside it
    take their canonical alternative.  Symbolic branches always fork.
    Visited states are pruned by snapshot hash.
    """
    report = SearchReport()
    arrivals = []
    start = SearchState(initial.clone(), tuple(base_constraints), (), 0)
    frontier = deque([start])
    visited = {(start.world.snapshot_hash(),
                _constraints_digest(start.constraints))}
    while frontier:
        if report.states_explored >= max_states:
            report.budget_exceeded = True
            break
        state = frontier.popleft()
        report.states_explored += 1
        if not state.world.alternatives():
            report.terminals.append(state)
            continue
        if state.depth >= max_depth:
            report.budget_exceeded = True
            continue
        n_deliveries = len(state.world.deliveries)
        for w, cs, trace in explore_step(state.world, net_step,
                                         state.constraints, focus, coverage):
            for kind, _site, _label, _pick in trace:
                report.alt_coverage[kind] = report.alt_coverage.get(kind, 0) + 1
            succ = SearchState(w, tuple(cs), state.path + trace,
                               state.depth + 1)
            _collect_stuck(report, state.world, succ)
            if collect_arrivals is not None:
                for dst, pkt in w.deliveries[n_deliveries:]:
                    if dst == collect_arrivals:
                        arrivals.append((succ, pkt))
            key = (w.snapshot_hash(), _constraints_digest(cs))
            if key not in visited:
                visited.add(key)
                frontier.append(succ)
    if collect_arrivals is not None:
        report.arrivals = arrivals
    return report


def _collect_stuck(report, parent_world, succ: SearchState):
    for nid, cfg in succ.world.configs.items():
        if cfg.status[0] == "stuck" \
                and parent_world.configs[nid].status[0] != "stuck":
            status, witness = constraint_sat(succ.constraints,
                                             succ.world.atoms)
            report.diagnostics.append(Diagnostic(
                reason=cfg.status[1], site=cfg.status[2], node=nid,
                path=succ.path, constraints=succ.constraints,
                sat_status=status, witness=witness))


# -- symbolic packet runs -----------------------------------------------------


@dataclass
class SymbolicSpec:
    """Which leading header fields of the injected packet are atoms.

    `items` is a sequence of instance names or "inst.field" strings; the
    packet is laid out as those instances' fields in order, symbolic where
    named, followed by `payload_bytes` zero bytes.
    """

    items: tuple
    payload_bytes: int = 32
    port: int = 0

    @staticmethod
    def parse(text: str, payload_bytes=32, port=0) -> "SymbolicSpec":
        return SymbolicSpec(tuple(s.strip() for s in text.split(",")
                                  if s.strip()), payload_bytes, port)


def build_symbolic_packet(net: NetState, program, spec: SymbolicSpec):
    """Construct the symbolic packet and the label -> atom id map."""
    segments = []
    atom_ids = {}
    for item in spec.items:
        inst_name, _, only_field = item.partition(".")
        info = program.instances.get(inst_name)
        if info is None:
            from .errors import P4Error
            raise P4Error("UNRESOLVED_NAME",
                          f"symbolic spec names unknown instance {inst_name!r}")
        for f in info.htype.fields:
            if f.width is None:
                from .errors import P4Error
                raise P4Error("UNRESOLVED_NAME",
                              "symbolic packets cannot cover variable-length "
                              f"fields ({inst_name}.{f.name})")
            if only_field and f.name != only_field:
                segments.append((f.width, 0))
                continue
            label = f"{inst_name}.{f.name}"
            aid = net.atoms.fresh_base(f.width, f.signed, label)
            atom_ids[label] = aid
            segments.append((f.width, ("atom", aid)))
    segments.append((spec.payload_bytes * 8, 0) if spec.payload_bytes else (0, 0))
    return Packet(spec.port, BitStream(segments)), atom_ids


@dataclass
class PathResult:
    kind: str  # "terminal" | "stuck"
    constraints: tuple
    world: NetState
    path: tuple
    sat_status: str
    witness: dict | None
    diagnostic: Diagnostic | None = None


def symex_run(program, profile=None, init_text="", spec=None,
              predicate=None, max_states=20_000, max_depth=200):
    """Run a single node on one symbolic packet, returning per-path results.

    Each result's constraint set characterizes the packets that follow that
    path; unknown-satisfiability paths are kept and labeled, never dropped.
    """
    net = single_node_net(program, profile)
    cfg = net.configs["n0"]
    if init_text:
        apply_control_script(cfg, init_text)
    pkt, atom_ids = build_symbolic_packet(net, program, spec)
    baseline = net.clone()
    net.inject("n0", pkt)
    report = search(net, max_states=max_states, max_depth=max_depth,
                    focus=ALL_KINDS)
    results = []
    for s in report.terminals:
        status, witness = constraint_sat(s.constraints, s.world.atoms)
        if status == UNSAT:
            continue
        diag = None
        cfg_n = s.world.configs["n0"]
        kind = "stuck" if cfg_n.status[0] == "stuck" else "terminal"
        if kind == "stuck":
            diag = next((d for d in report.diagnostics
                         if d.path == s.path[:len(d.path)]), None)
        results.append(PathResult(kind, s.constraints, s.world, s.path,
                                  status, witness, diag))
    if predicate is not None:
        results = [r for r in results if predicate(r)]
    return results, report, (baseline, pkt, atom_ids)


def replay_witness(baseline: NetState, template: Packet, witness: dict,
                   path: tuple, max_steps=10_000) -> NetState:
    """Re-run a discovered path concretely from its witness assignment.

    The witness fixes the base atoms (unconstrained atoms default to 0);
    order-kind picks from the recorded path are replayed, and symbolic
    branches must not occur since the input is now concrete.
    """
    w = baseline.clone()
    data = template.data.substitute(witness or {}, w.atoms)
    w.inject("n0", Packet(template.port, data))
    picks = [(kind, pick) for kind, _site, _label, pick in path
             if kind != "symbolic-branch"]
    ctx = ReplayContext(picks)
    steps = 0
    while steps < max_steps and net_step(w, ctx):
        steps += 1
    return w


def reach_query(net: NetState, src: str, dst: str, program, spec,
                max_states=20_000, max_depth=400):
    """Constraint sets characterizing packets injected at src that reach dst."""
    if src == dst:
        return [()]
    pkt, _ = build_symbolic_packet(net, program, spec)
    net.inject(src, pkt)
    report = search(net, max_states=max_states, max_depth=max_depth,
                    focus=ALL_KINDS, collect_arrivals=dst)
    seen = set()
    out = []
    for succ, arrived in report.arrivals:
        if arrived.pid != pkt.pid and pkt.pid not in arrived.lineage:
            continue  # not descended from the injected packet
        status, _ = constraint_sat(succ.constraints, succ.world.atoms)
        if status == UNSAT:
            continue
        digest = _constraints_digest(succ.constraints)
        if digest in seen:
            continue
        seen.add(digest)
        out.append(tuple(succ.constraints))
    return out


# -- predicates ---------------------------------------------------------------


def get_predicate(name: str):
    """Named predicates over path results for the symbolic-run CLI."""
    if name in (None, "", "any"):
        return lambda r: True
    if name == "stuck":
        return lambda r: r.kind == "stuck"
    if name.startswith("stuck:"):
        reason = name[len("stuck:"):]
        return lambda r: (r.kind == "stuck" and r.diagnostic is not None
                          and r.diagnostic.reason == reason)
    if name.startswith("port:"):
        port = int(name[len("port:"):], 0)
        return lambda r: any(isinstance(p.port, int) and p.port == port
                             for _, p in r.world.captured)
    if name == "delivered":
        return lambda r: bool(r.world.captured)
    if name == "dropped":
        return lambda r: (r.kind == "terminal" and not r.world.captured)
    from .errors import P4Error
    raise P4Error("UNKNOWN_PREDICATE", f"no predicate named {name!r}")
