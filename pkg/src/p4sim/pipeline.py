"""Per-packet forwarding model: parse, ingress, queue slot, egress,
calculated-field update, deparse, emit; plus the node-level fetch loop."""

from __future__ import annotations

import itertools

from . import syntax as S
from .actions import apply_table
from .errors import StuckError, UNDEF_IN_EXPR, UNDEFINED_EGRESS, CALL_DEPTH
from .exprs import eval_bool
from .parser_engine import run_parser, compute_calculation
from .state import BitStream, Packet, stream_from_value
from .values import Concrete, is_undef, truncate_to_width

MAX_CONTROL_DEPTH = 64
DEPARSE_ORDER_LIMIT = 64


def exec_control(cfg, ctx, name, depth=0):
    if depth >= MAX_CONTROL_DEPTH:
        raise StuckError(CALL_DEPTH, f"control:{name}",
                         "control call depth exceeded")
    _exec_block(cfg, ctx, cfg.program.controls[name], depth)


def _exec_block(cfg, ctx, body, depth):
    for st in body:
        if isinstance(st, S.ApplyStmt):
            ctx.hit("control.apply")
            apply_table(cfg, ctx, st.table)
        elif isinstance(st, S.CallControlStmt):
            ctx.hit("control.call")
            exec_control(cfg, ctx, st.name, depth + 1)
        else:
            site = f"if:{st.span[0]}"
            if eval_bool(cfg, ctx, st.cond, site=site):
                ctx.hit("control.if_true")
                _exec_block(cfg, ctx, st.then_body, depth)
            else:
                ctx.hit("control.if_false")
                _exec_block(cfg, ctx, st.else_body, depth)


def update_calculated_fields(cfg, ctx):
    """Recompute calculated fields before deparsing; with several pending
    updates the order is a nondeterminism point (lists may nest)."""
    pending = [cl for cl in cfg.program.clauses_for("update")
               if cfg.is_valid(cl.inst)]
    if not pending:
        return
    order = list(range(len(pending)))
    if len(pending) > 1:
        perms = list(itertools.permutations(order))
        pick = ctx.choose(
            "update-order", "update_calculated_fields",
            [",".join(f"{pending[i].inst}.{pending[i].field}" for i in p)
             for p in perms])
        order = list(perms[pick])
    for i in order:
        cl = pending[i]
        site = f"update({cl.inst}.{cl.field})"
        if cl.cond is not None and not eval_bool(cfg, ctx, cl.cond, site=site):
            continue
        computed = compute_calculation(cfg, cl.calc)
        ctx.hit(f"hash.{cfg.program.calcs[cl.calc].algorithm}")
        cfg.set_field(cl.inst, cl.field, computed, site)
        ctx.hit("pipeline.calc_update")


def choose_deparse_order(cfg, ctx):
    orders = cfg.program.deparse.all_orders(DEPARSE_ORDER_LIMIT)
    if len(orders) <= 1:
        return orders[0] if orders else ()
    pick = ctx.choose("deparse-order", "deparse",
                      [" ".join(o) for o in orders])
    return orders[pick]


def deparse(cfg, ctx):
    """Serialize valid instances in the chosen admissible order, then the
    unconsumed payload suffix of the original packet."""
    order = choose_deparse_order(cfg, ctx)
    cfg.dporder = order
    segments = []
    for elem in cfg.program.deparse.expand(order):
        if not cfg.is_valid(elem):
            continue
        info = cfg.program.instances[elem]
        for f in info.htype.fields:
            v = cfg.raw_fields(elem)[f.name]
            if is_undef(v):
                raise StuckError(UNDEF_IN_EXPR, f"deparse({elem}.{f.name})",
                                 "serializing undefined field of a valid "
                                 "instance")
            segments.append(stream_from_value(v, v.width))
        ctx.hit("pipeline.deparse_instance")
    out = BitStream(segments).concat(cfg.payload)
    if cfg.payload.nbits:
        ctx.hit("pipeline.deparse_payload")
    if cfg.truncate_len is not None:
        out = out.slice(0, min(out.nbits, cfg.truncate_len * 8))
    cfg.packet_out = out
    ctx.hit("pipeline.deparse")


def _emit(cfg, ctx):
    spec = cfg.get_field("standard_metadata", "egress_spec")
    if is_undef(spec):
        if cfg.profile.undefined_egress == "drop":
            ctx.hit("pipeline.undef_egress_drop")
            cfg.dropped = True
            cfg.drops += 1
            return
        raise StuckError(UNDEFINED_EGRESS, "emit",
                         "egress specification was never set")
    port = spec.bits if isinstance(spec, Concrete) else spec
    cur = cfg.current_packet
    cfg.out_stream.append(Packet(port, cfg.packet_out,
                                 lineage=cur.lineage + (cur.pid,)))
    ctx.hit("pipeline.emit")


def _restore_parsed(cfg, ctx, pkt):
    ctx.hit("pipeline.skip_ingress")
    inst_snapshot, payload = pkt.parsed
    for name, valid, fields in inst_snapshot:
        cfg.instances[name] = [valid, dict(fields)]
    cfg.payload = payload


def process_packet(cfg, ctx):
    """Process the head packet of the input stream through the pipeline."""
    assert cfg.in_stream, "process_packet needs a pending input packet"
    assert cfg.pending_egress is None
    pkt = cfg.in_stream.pop(0)
    cfg.reset_for_packet(pkt)
    cfg.processed += 1
    if pkt.skip_ingress:
        _restore_parsed(cfg, ctx, pkt)
    else:
        ctx.hit("pipeline.parse")
        run_parser(cfg, ctx)
        if not cfg.dropped:
            cfg.payload = cfg.packet_in.slice(cfg.parse_offset)
            ctx.hit("pipeline.ingress")
            exec_control(cfg, ctx, "ingress")
    if cfg.dropped:
        cfg.drops += 1
        ctx.hit("pipeline.drop")
        cfg.status = ("running",)
        return
    if cfg.resubmit_req:
        cfg.in_stream.append(Packet(pkt.port, pkt.data, recirculated=True,
                                    lineage=pkt.lineage + (pkt.pid,)))
        cfg.status = ("running",)
        return
    cfg.pending_egress = pkt
    cfg.set_field("standard_metadata", "egress_port",
                  cfg.get_field("standard_metadata", "egress_spec"),
                  "queue")
    if cfg.program.has_egress:
        ctx.hit("pipeline.egress")
        exec_control(cfg, ctx, "egress")
    if cfg.dropped:
        cfg.pending_egress = None
        cfg.drops += 1
        ctx.hit("pipeline.drop")
        cfg.status = ("running",)
        return
    update_calculated_fields(cfg, ctx)
    deparse(cfg, ctx)
    cfg.pending_egress = None
    if cfg.clone_e2i_req:
        cfg.in_stream.append(Packet(pkt.port, cfg.packet_out,
                                    lineage=pkt.lineage + (pkt.pid,)))
    if cfg.recirc_req:
        cfg.in_stream.append(Packet(pkt.port, cfg.packet_out,
                                    recirculated=True,
                                    lineage=pkt.lineage + (pkt.pid,)))
        cfg.status = ("running",)
        return
    _emit(cfg, ctx)
    cfg.status = ("running",)


def run_node(cfg, max_packets: int, ctx=None):
    """Fetch-process loop; the budget bounds the otherwise endless phase."""
    from .explore import RunContext
    ctx = ctx or RunContext()
    count = 0
    while cfg.in_stream and count < max_packets:
        try:
            process_packet(cfg, ctx)
        except StuckError as e:
            cfg.status = ("stuck", e.reason, e.site)
            return cfg
        count += 1
    if not cfg.in_stream:
        cfg.status = ("awaiting-input",)
    return cfg
