"""Networks of packet processors: topology, link delivery, node scheduling.

The whole network state is one transferable value; interleaving between
nodes is modeled explicitly as scheduling alternatives, never by threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import hashlib

from .errors import TopologyError, P4Error, StuckError
from .parser import parse_source
from .program import elaborate
from .pipeline import process_packet
from .state import Config, Packet, TargetProfile, apply_control_script, new_config
from .values import AtomTable


@dataclass(frozen=True)
class Link:
    src_node: str
    src_port: int
    dst_node: str
    dst_port: int
    lossy: bool = False

    def label(self):
        return (f"{self.src_node}.{self.src_port}->"
                f"{self.dst_node}.{self.dst_port}")


@dataclass
class Topology:
    nodes: dict  # id -> (program, profile, init_text)
    links: list

    def __post_init__(self):
        self.by_src = {}
        for link in self.links:
            key = (link.src_node, link.src_port)
            if key in self.by_src:
                raise TopologyError(
                    "TOPO_PARSE_ERROR",
                    f"port {key[0]}.{key[1]} is the source of two links")
            self.by_src[key] = link


class NetState:
    """All node Configs plus the in-flight bookkeeping.

    Output packets on ports without links are swept into the `captured` log
    (external hosts); packets on linked ports wait in the node's out stream
    until a delivery step moves them.
    """

    def __init__(self, topo: Topology, configs: dict):
        self.topo = topo
        self.configs = configs
        self.atoms = AtomTable()
        for cfg in configs.values():
            cfg.atoms = self.atoms
        self.captured = []  # (node_id, Packet), emission order
        self.deliveries = []  # (dst_node, Packet) for reachability queries
        self.injected = 0
        self.link_drops = 0
        self.step_count = 0

    def clone(self) -> "NetState":
        n = NetState.__new__(NetState)
        n.topo = self.topo
        n.atoms = self.atoms.clone()
        n.configs = {}
        for nid, cfg in self.configs.items():
            c = cfg.clone()
            c.atoms = n.atoms
            n.configs[nid] = c
        n.captured = list(self.captured)
        n.deliveries = list(self.deliveries)
        n.injected = self.injected
        n.link_drops = self.link_drops
        n.step_count = self.step_count
        return n

    def inject(self, node: str, pkt: Packet):
        self.configs[node].in_stream.append(pkt)
        self.injected += 1

    def sweep_outputs(self, node: str):
        cfg = self.configs[node]
        kept = []
        for p in cfg.out_stream:
            key = (node, p.port) if isinstance(p.port, int) else None
            if key in self.topo.by_src:
                kept.append(p)
            else:
                self.captured.append((node, p))
        cfg.out_stream = kept

    def node_stuck(self, node: str) -> bool:
        return self.configs[node].status[0] == "stuck"

    def alternatives(self):
        """Enabled scheduling alternatives, canonical first: node packet
        processing in node-id order, then ready link deliveries."""
        alts = []
        for nid in sorted(self.configs):
            cfg = self.configs[nid]
            if cfg.in_stream and not self.node_stuck(nid):
                alts.append(("process", nid))
        for i, link in enumerate(self.topo.links):
            src = self.configs[link.src_node]
            if any(isinstance(p.port, int) and p.port == link.src_port
                   for p in src.out_stream):
                alts.append(("deliver", i))
        return alts

    def conservation_counts(self):
        in_flight = 0
        drops = 0
        for cfg in self.configs.values():
            in_flight += len(cfg.in_stream) + len(cfg.out_stream)
            in_flight += 1 if cfg.pending_egress is not None else 0
            drops += cfg.drops
        return {
            "injected": self.injected,
            "in_flight": in_flight,
            "captured": len(self.captured),
            "dropped_by_programs": drops,
            "dropped_by_links": self.link_drops,
        }

    def outputs_canon(self):
        return tuple((nid, p.canon()) for nid, p in self.captured)

    def snapshot_hash(self) -> str:
        canon = (
            tuple((nid, cfg.snapshot_hash())
                  for nid, cfg in sorted(self.configs.items())),
            self.outputs_canon(),
            self.link_drops,
        )
        return hashlib.sha256(repr(canon).encode()).hexdigest()


def deliver(net: NetState, ctx, link: Link):
    """Move one packet across a link.

    The literal rule takes the packet from the end of the source's output
    stream and puts it at the beginning of the destination's input stream;
    the fifo profile policy moves oldest-to-tail instead.  Lossy links add
    a loss alternative.
    """
    src = net.configs[link.src_node]
    idxs = [i for i, p in enumerate(src.out_stream)
            if isinstance(p.port, int) and p.port == link.src_port]
    assert idxs, "deliver called with no packet on the link's source port"
    policy = src.profile.link_policy
    if link.lossy:
        pick = ctx.choose("link-loss", link.label(), ["deliver", "lose"])
        if pick == 1:
            i = idxs[-1] if policy == "paper" else idxs[0]
            src.out_stream.pop(i)
            net.link_drops += 1
            return
    dst = net.configs[link.dst_node]
    if policy == "paper":
        pkt = src.out_stream.pop(idxs[-1])
        moved = replace(pkt, port=link.dst_port)
        dst.in_stream.insert(0, moved)
    else:
        pkt = src.out_stream.pop(idxs[0])
        moved = replace(pkt, port=link.dst_port)
        dst.in_stream.append(moved)
    net.deliveries.append((link.dst_node, moved))


def net_step(net: NetState, ctx) -> bool:
    """One scheduling step; returns False when the network is quiescent."""
    alts = net.alternatives()
    if not alts:
        return False
    labels = []
    for kind, arg in alts:
        if kind == "process":
            labels.append(f"process {arg}")
        else:
            labels.append(f"deliver {net.topo.links[arg].label()}")
    pick = ctx.choose("network-schedule", "schedule", labels)
    kind, arg = alts[pick]
    if kind == "process":
        cfg = net.configs[arg]
        try:
            process_packet(cfg, ctx)
        except StuckError as e:
            cfg.status = ("stuck", e.reason, f"{arg}:{e.site}")
        net.sweep_outputs(arg)
    else:
        deliver(net, ctx, net.topo.links[arg])
    net.step_count += 1
    return True


def run_to_quiescence(net: NetState, ctx, max_steps: int) -> NetState:
    steps = 0
    while steps < max_steps and net_step(net, ctx):
        steps += 1
    return net


def single_node_net(program, profile: TargetProfile | None = None,
                    node_id: str = "n0") -> NetState:
    cfg = new_config(program, profile)
    topo = Topology({node_id: (program, profile, None)}, [])
    return NetState(topo, {node_id: cfg})


def load_topology(path: str):
    """Parse a topology file and build the network state.

    Lines: `node <id> <path.p4> [profile=<name>] [init=<script>]` and
    `link <idA>.<port> <idB>.<port> [lossy]`.
    """
    base = os.path.dirname(os.path.abspath(path))
    try:
        text = open(path).read()
    except OSError as e:
        raise TopologyError("FILE_NOT_FOUND", str(e))
    node_specs = {}
    links = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "node":
            if len(parts) < 3:
                raise TopologyError("TOPO_PARSE_ERROR",
                                    f"line {ln}: node <id> <file.p4> ...")
            nid, p4_path = parts[1], parts[2]
            if nid in node_specs:
                raise TopologyError("TOPO_PARSE_ERROR",
                                    f"line {ln}: node {nid!r} declared twice")
            profile_name = ""
            init_path = None
            for opt in parts[3:]:
                if opt.startswith("profile="):
                    profile_name = opt[len("profile="):]
                elif opt.startswith("init="):
                    init_path = opt[len("init="):]
                else:
                    raise TopologyError("TOPO_PARSE_ERROR",
                                        f"line {ln}: unknown option {opt!r}")
            node_specs[nid] = (p4_path, profile_name, init_path)
        elif parts[0] == "link":
            if len(parts) < 3:
                raise TopologyError("TOPO_PARSE_ERROR",
                                    f"line {ln}: link <a>.<p> <b>.<p>")
            try:
                a, ap = parts[1].rsplit(".", 1)
                b, bp = parts[2].rsplit(".", 1)
                links.append(Link(a, int(ap), b, int(bp),
                                  lossy=(len(parts) > 3
                                         and parts[3] == "lossy")))
            except ValueError:
                raise TopologyError(
                    "TOPO_PARSE_ERROR",
                    f"line {ln}: endpoints must be <node>.<port>") from None
        else:
            raise TopologyError("TOPO_PARSE_ERROR",
                                f"line {ln}: unknown directive {parts[0]!r}")

    nodes = {}
    configs = {}
    for nid, (p4_path, profile_name, init_path) in node_specs.items():
        full = p4_path if os.path.isabs(p4_path) else os.path.join(base, p4_path)
        try:
            source = open(full).read()
        except OSError:
            raise TopologyError("FILE_NOT_FOUND",
                                f"node {nid!r}: cannot read {p4_path!r}") from None
        try:
            program = elaborate(parse_source(source))
            profile = TargetProfile.from_name(profile_name)
            cfg = new_config(program, profile)
            if init_path:
                init_full = (init_path if os.path.isabs(init_path)
                             else os.path.join(base, init_path))
                apply_control_script(cfg, open(init_full).read())
        except P4Error as e:
            raise TopologyError(e.code, f"node {nid!r}: {e.message}") from None
        nodes[nid] = (program, profile, init_path)
        configs[nid] = cfg

    topo = Topology(nodes, links)
    for link in links:
        for end in (link.src_node, link.dst_node):
            if end not in configs:
                raise TopologyError("TOPO_PARSE_ERROR",
                                    f"link references unknown node {end!r}")
    return NetState(topo, configs)
