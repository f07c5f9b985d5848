"""Runtime state of one packet processor: instance store, statefuls, table
entries, packet buffers, execution context, and the control-script loader."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from .errors import (ControlScriptError, P4Error, StuckError,
                     WRITE_INVALID_HEADER, INDEX_OOB, BAD_STACK_OP)
from .values import (AtomTable, Concrete, Symbolic, UNDEF, is_undef,
                     truncate_to_width, infer_const_width)

DEFAULT_PARSE_BUDGET = 10_000


@dataclass(frozen=True)
class TargetProfile:
    """Target-specific policy knobs; the semantics is parametric on these."""

    name: str = "default"
    register_init: str = "undef"  # "undef" | "zero"
    undefined_egress: str = "stuck"  # "stuck" | "drop"
    link_policy: str = "paper"  # "paper" | "fifo"
    primitives: tuple = ()  # extra (name, callable) bindings

    @staticmethod
    def from_name(spec: str) -> "TargetProfile":
        profile = TargetProfile()
        for part in filter(None, (spec or "default").split(",")):
            if part == "default":
                pass
            elif part == "drop-undef-egress":
                profile = replace(profile, undefined_egress="drop")
            elif part == "zero-registers":
                profile = replace(profile, register_init="zero")
            elif part == "fifo-links":
                profile = replace(profile, link_policy="fifo")
            else:
                raise P4Error("UNKNOWN_PROFILE", f"no profile flag {part!r}")
        return replace(profile, name=spec or "default")


class BitStream:
    """Immutable packet data: a sequence of (width, payload) segments where
    payload is an int (concrete bits) or ("atom", id).  MSB-first."""

    __slots__ = ("segments", "nbits")

    def __init__(self, segments=()):
        merged = []
        for width, payload in segments:
            if width == 0:
                continue
            if (merged and isinstance(payload, int)
                    and isinstance(merged[-1][1], int)):
                w0, p0 = merged[-1]
                merged[-1] = (w0 + width, (p0 << width) | payload)
            else:
                merged.append((width, payload))
        self.segments = tuple(merged)
        self.nbits = sum(w for w, _ in self.segments)

    @staticmethod
    def from_bytes(data: bytes) -> "BitStream":
        if not data:
            return BitStream()
        return BitStream([(len(data) * 8, int.from_bytes(data, "big"))])

    @staticmethod
    def from_hex(text: str) -> "BitStream":
        text = text.strip()
        if len(text) % 2:
            raise P4Error("BAD_HEX", f"odd-length hex string {text!r}")
        return BitStream.from_bytes(bytes.fromhex(text) if text else b"")

    def __eq__(self, other):
        return isinstance(other, BitStream) and self.segments == other.segments

    def __hash__(self):
        return hash(self.segments)

    def __repr__(self):
        return f"BitStream({self.nbits}b)"

    @property
    def concrete(self) -> bool:
        return all(isinstance(p, int) for _, p in self.segments)

    def to_bytes(self) -> bytes:
        assert self.concrete and self.nbits % 8 == 0
        if not self.segments:
            return b""
        bits = 0
        for w, p in self.segments:
            bits = (bits << w) | p
        return bits.to_bytes(self.nbits // 8, "big")

    def to_hex(self) -> str:
        if self.concrete and self.nbits % 8 == 0:
            return self.to_bytes().hex().upper()
        parts = []
        for w, p in self.segments:
            if isinstance(p, int):
                parts.append(f"{p:0{(w + 3) // 4}x}")
            else:
                parts.append(f"<a{p[1]}:{w}b>")
        return "|".join(parts)

    def _pieces(self, off: int, width: int):
        """Yield (payload, seg_width, start_in_seg, take) covering the window."""
        pos = 0
        remaining = width
        for w, p in self.segments:
            if remaining <= 0:
                break
            seg_end = pos + w
            if seg_end <= off:
                pos = seg_end
                continue
            start = max(off, pos) - pos
            take = min(w - start, remaining)
            yield p, w, start, take
            remaining -= take
            pos = seg_end
        if remaining > 0:
            raise IndexError("read past end of stream")

    def read(self, off: int, width: int, atoms: AtomTable):
        """Read `width` bits at `off` as a value; None when out of range."""
        if width == 0:
            return Concrete(0, 0)
        if off + width > self.nbits:
            return None
        parts = []
        for p, w, start, take in self._pieces(off, width):
            if isinstance(p, int):
                parts.append(Concrete(take, (p >> (w - start - take))
                                      & ((1 << take) - 1)))
            else:
                aid = p[1]
                base = p[2] if p[0] == "slice" else 0
                lsb = base + (w - start - take)
                if take == atoms.defs[aid].width and lsb == 0:
                    parts.append(Symbolic(aid, take))
                else:
                    parts.append(atoms.derive_slice(aid, lsb, take))
        if len(parts) == 1:
            return parts[0]
        if all(isinstance(v, Concrete) for v in parts):
            bits = 0
            for v in parts:
                bits = (bits << v.width) | v.bits
            return Concrete(width, bits)
        return atoms.derive_concat(parts)

    def slice(self, off: int, width: int | None = None) -> "BitStream":
        if width is None:
            width = self.nbits - off
        if width <= 0:
            return BitStream()
        segs = []
        for p, w, start, take in self._pieces(off, width):
            if isinstance(p, int):
                segs.append((take, (p >> (w - start - take)) & ((1 << take) - 1)))
            elif start == 0 and take == w:
                segs.append((take, p))
            else:
                # slicing into an atom keeps a positional reference; readers
                # derive slice atoms on demand
                base = p[2] if p[0] == "slice" else 0
                segs.append((take, ("slice", p[1], base + w - start - take)))
        # normalize nested slice markers into atom refs lazily is not needed:
        # only reads interpret payloads, and they understand both forms
        return BitStream(segs)

    def concat(self, other: "BitStream") -> "BitStream":
        return BitStream(self.segments + other.segments)

    def substitute(self, assignment, atoms: AtomTable) -> "BitStream":
        """Concretize under a base-atom assignment (for witness replay)."""
        segs = []
        for w, p in self.segments:
            if isinstance(p, int):
                segs.append((w, p))
            else:
                aid = p[1]
                v = atoms.evaluate(aid, assignment)
                bits = v.bits
                if p[0] == "slice":
                    bits = (bits >> p[2]) & ((1 << w) - 1)
                segs.append((w, bits & ((1 << w) - 1)))
        return BitStream(segs)

    def canon(self):
        return self.segments


def stream_from_value(v, width: int):
    if isinstance(v, Concrete):
        return (width, v.bits)
    assert isinstance(v, Symbolic) and v.width == width
    return (width, ("atom", v.atom))


_next_pid = [0]


def _fresh_pid():
    _next_pid[0] += 1
    return _next_pid[0]


@dataclass(frozen=True)
class Packet:
    port: object  # int, or a symbolic Value on symbolic runs
    data: BitStream
    skip_ingress: bool = False
    recirculated: bool = False
    parsed: tuple | None = None  # carried parsed representation for clones
    pid: int = field(default_factory=_fresh_pid, compare=False)
    lineage: tuple = field(default=(), compare=False)

    def canon(self):
        return (self.port if isinstance(self.port, int) else repr(self.port),
                self.data.canon(), self.skip_ingress, self.recirculated,
                self.parsed)


@dataclass(frozen=True)
class TableEntry:
    priority: int
    specs: tuple  # one per declared read, e.g. ("exact", v) / ("lpm", v, len)
    action: str
    args: tuple
    entry_id: int = 0


def _value_canon(v):
    if is_undef(v):
        return "u"
    if isinstance(v, Concrete):
        return ("c", v.width, v.bits, v.signed)
    return ("s", v.atom)


class Config:
    """Complete runtime state of one node."""

    def __init__(self, program, profile: TargetProfile,
                 parse_budget=DEFAULT_PARSE_BUDGET):
        self.program = program
        self.profile = profile
        self.parse_budget = parse_budget
        self.atoms = AtomTable()
        self.instances = {}
        self.statefuls = {}
        self.entries = {t: [] for t in program.tables}
        self.defaults = {}
        self.next_entry_id = 1
        self.in_stream = []
        self.out_stream = []
        self.status = ("awaiting-input",)
        self.digests = []
        self.meter_calls = []
        self.table_status = {}
        self.processed = 0
        self.drops = 0
        self._reset_transients()
        self._init_instances()
        self._init_statefuls()

    # -- construction ------------------------------------------------------

    def _zero_fields(self, htype):
        return {f.name: (Concrete(f.width, 0) if f.width is not None
                         else Concrete(0, 0))
                for f in htype.fields}

    def _undef_fields(self, htype):
        return {f.name: UNDEF for f in htype.fields}

    def _init_instances(self):
        for name, info in self.program.instances.items():
            if info.metadata:
                fields = self._zero_fields(info.htype)
                self.instances[name] = [True, fields]
            else:
                self.instances[name] = [False, self._undef_fields(info.htype)]
        std = self.instances.get("standard_metadata")
        if std:
            std[1]["egress_spec"] = UNDEF
            std[1]["egress_port"] = UNDEF

    def _init_statefuls(self):
        for s in self.program.statefuls.values():
            vals = {}
            if s.direct is None:
                for i in range(s.instance_count):
                    vals[i] = self._stateful_init(s)
            self.statefuls[s.name] = vals

    def _stateful_init(self, s):
        if s.kind == "register":
            if self.profile.register_init == "zero":
                return Concrete(s.width, 0)
            return UNDEF
        return Concrete(64, 0)  # counters and meters start at 0

    def _reset_transients(self):
        self.packet_in = None
        self.parse_offset = 0
        self.payload = BitStream()
        self.packet_out = None
        self.current_packet = None
        self.packet_len_bytes = 0
        self.latest = None
        self.pending_egress = None
        self.frames = []
        self.dporder = None
        self.dropped = False
        self.resubmit_req = False
        self.recirc_req = False
        self.clone_e2i_req = False
        self.truncate_len = None

    def clone(self) -> "Config":
        c = Config.__new__(Config)
        c.program = self.program
        c.profile = self.profile
        c.parse_budget = self.parse_budget
        c.atoms = self.atoms.clone()
        c.instances = {n: [v, dict(f)] for n, (v, f) in self.instances.items()}
        c.statefuls = {n: dict(v) for n, v in self.statefuls.items()}
        c.entries = {t: list(es) for t, es in self.entries.items()}
        c.defaults = dict(self.defaults)
        c.next_entry_id = self.next_entry_id
        c.in_stream = list(self.in_stream)
        c.out_stream = list(self.out_stream)
        c.status = self.status
        c.digests = list(self.digests)
        c.meter_calls = list(self.meter_calls)
        c.table_status = dict(self.table_status)
        c.processed = self.processed
        c.drops = self.drops
        c.packet_in = self.packet_in
        c.parse_offset = self.parse_offset
        c.payload = self.payload
        c.packet_out = self.packet_out
        c.current_packet = self.current_packet
        c.packet_len_bytes = self.packet_len_bytes
        c.latest = self.latest
        c.pending_egress = self.pending_egress
        c.frames = [dict(f) for f in self.frames]
        c.dporder = self.dporder
        c.dropped = self.dropped
        c.resubmit_req = self.resubmit_req
        c.recirc_req = self.recirc_req
        c.clone_e2i_req = self.clone_e2i_req
        c.truncate_len = self.truncate_len
        return c

    # -- instance access ----------------------------------------------------

    def is_valid(self, inst: str) -> bool:
        return self.instances[inst][0]

    def is_metadata(self, inst: str) -> bool:
        return self.program.instances[inst].metadata

    def get_field(self, inst: str, fld: str):
        valid, fields = self.instances[inst]
        if not valid and not self.is_metadata(inst):
            return UNDEF
        return fields[fld]

    def raw_fields(self, inst: str) -> dict:
        return self.instances[inst][1]

    def set_field(self, inst: str, fld: str, v, site: str = "set_field"):
        """Store a value into a field, truncating to the field width.

        Writing to an invalid header instance is stuck: the behavior has no
        defined semantics and is how unportable writes get flagged.
        """
        valid, fields = self.instances[inst]
        if not valid and not self.is_metadata(inst):
            raise StuckError(WRITE_INVALID_HEADER, site,
                             f"write to {inst}.{fld} while {inst} is invalid")
        width = self.program.field_width(inst, fld)
        if is_undef(v):
            fields[fld] = UNDEF
        elif width is None:  # variable-length field keeps the stored width
            fields[fld] = v
        else:
            fields[fld] = truncate_to_width(v, width, self.atoms, site)

    def set_field_raw(self, inst: str, fld: str, v):
        self.instances[inst][1][fld] = v

    def set_validity(self, inst: str, flag: bool):
        self.instances[inst][0] = flag

    def reset_for_packet(self, pkt: Packet):
        for name, info in self.program.instances.items():
            slot = self.instances[name]
            if info.metadata:
                slot[0] = True
                slot[1] = self._zero_fields(info.htype)
            else:
                slot[0] = False
                slot[1] = self._undef_fields(info.htype)
        self._reset_transients()
        self.current_packet = pkt
        self.packet_in = pkt.data
        self.packet_len_bytes = pkt.data.nbits // 8
        std = self.instances.get("standard_metadata")
        if std:
            port = pkt.port
            std[1]["ingress_port"] = (truncate_to_width(port, 16, self.atoms)
                                      if isinstance(port, Symbolic)
                                      else Concrete(16, port & 0xFFFF))
            std[1]["packet_length"] = Concrete(32, self.packet_len_bytes)
            std[1]["egress_spec"] = UNDEF
            std[1]["egress_port"] = UNDEF
        self.status = ("running",)

    # -- header stacks -------------------------------------------------------

    def _stack_elems(self, base):
        size = self.program.stacks[base]
        return [f"{base}[{i}]" for i in range(size)], size

    def stack_next_index(self, base):
        elems, _ = self._stack_elems(base)
        for i, e in enumerate(elems):
            if not self.instances[e][0]:
                return i
        return None

    def stack_push(self, base: str, count: int, site="push"):
        elems, size = self._stack_elems(base)
        if not 0 < count <= size:
            raise StuckError(BAD_STACK_OP, site,
                             f"push {count} on stack of size {size}")
        for i in range(size - 1, count - 1, -1):
            src = self.instances[elems[i - count]]
            self.instances[elems[i]] = [src[0], dict(src[1])]
        htype = self.program.instances[elems[0]].htype
        for i in range(count):
            self.instances[elems[i]] = [True, self._zero_fields(htype)]

    def stack_pop(self, base: str, count: int, site="pop"):
        elems, size = self._stack_elems(base)
        if not 0 < count <= size:
            raise StuckError(BAD_STACK_OP, site,
                             f"pop {count} on stack of size {size}")
        for i in range(size - count):
            src = self.instances[elems[i + count]]
            self.instances[elems[i]] = [src[0], dict(src[1])]
        htype = self.program.instances[elems[0]].htype
        for i in range(size - count, size):
            self.instances[elems[i]] = [False, self._undef_fields(htype)]

    # -- statefuls -----------------------------------------------------------

    def _stateful_index(self, name, idx, site):
        info = self.program.statefuls[name]
        vals = self.statefuls[name]
        if info.direct is None:
            if not 0 <= idx < info.instance_count:
                raise StuckError(INDEX_OOB, site,
                                 f"{name}[{idx}] with instance_count "
                                 f"{info.instance_count}")
        elif idx not in vals:
            raise StuckError(INDEX_OOB, site,
                             f"{name}[{idx}] does not name a live entry")
        return vals

    def register_read(self, reg, idx, site="register_read"):
        return self._stateful_index(reg, idx, site)[idx]

    def register_write(self, reg, idx, v, site="register_write"):
        vals = self._stateful_index(reg, idx, site)
        width = self.program.statefuls[reg].width
        vals[idx] = v if is_undef(v) else truncate_to_width(v, width,
                                                            self.atoms, site)

    def count_increment(self, counter, idx, nbytes, site="count"):
        vals = self._stateful_index(counter, idx, site)
        info = self.program.statefuls[counter]
        inc = nbytes if info.unit == "bytes" else 1
        cur = vals[idx]
        vals[idx] = Concrete(64, (cur.bits + inc) & ((1 << 64) - 1))

    def meter_execute(self, meter, idx, site="execute_meter"):
        self._stateful_index(meter, idx, site)
        self.meter_calls.append((meter, idx))

    # -- table entries --------------------------------------------------------

    def install_entry(self, table: str, entry: TableEntry):
        entries = self.entries[table]
        if any(e.priority == entry.priority for e in entries):
            raise ControlScriptError(
                f"table {table!r} already has an entry with priority "
                f"{entry.priority}")
        entry = replace(entry, entry_id=self.next_entry_id)
        self.next_entry_id += 1
        i = 0
        while i < len(entries) and entries[i].priority > entry.priority:
            i += 1
        entries.insert(i, entry)
        for sname in self.program.tables[table].direct:
            info = self.program.statefuls[sname]
            self.statefuls[sname][entry.entry_id] = self._stateful_init(info)
        return entry

    def set_default(self, table: str, action: str, args: tuple):
        self.defaults[table] = (action, args)

    # -- hashing ---------------------------------------------------------------

    def snapshot_hash(self) -> str:
        """Canonical digest of the Config; equal configs hash equal."""
        canon = (
            tuple(sorted((n, v, tuple(sorted((f, _value_canon(x))
                                             for f, x in fs.items())))
                         for n, (v, fs) in self.instances.items())),
            tuple(sorted((n, tuple(sorted((i, _value_canon(x))
                                          for i, x in vs.items())))
                         for n, vs in self.statefuls.items())),
            tuple(sorted((t, tuple((e.priority, e.specs, e.action,
                                    tuple(_value_canon(a) for a in e.args))
                                   for e in es))
                         for t, es in self.entries.items())),
            tuple(sorted((t, d[0], tuple(_value_canon(a) for a in d[1]))
                         for t, d in self.defaults.items())),
            tuple(p.canon() for p in self.in_stream),
            tuple(p.canon() for p in self.out_stream),
            self.pending_egress.canon() if self.pending_egress else None,
            self.status,
            tuple(self.digests),
            tuple(self.meter_calls),
            tuple(sorted(self.table_status.items())),
            tuple(sorted(self.atoms.defs.items())),
        )
        return hashlib.sha256(repr(canon).encode()).hexdigest()


# -- control scripts -----------------------------------------------------------


def _parse_int(text: str, what="value") -> int:
    try:
        neg = text.startswith("-")
        raw = text[1:] if neg else text
        if raw.lower().startswith("0x"):
            v = int(raw, 16)
        elif raw.lower().startswith("0b"):
            v = int(raw, 2)
        else:
            v = int(raw, 10)
        return -v if neg else v
    except ValueError:
        raise ControlScriptError(f"bad {what} {text!r}") from None


def _parse_match_spec(kind: str, text: str, width: int):
    full = (1 << width) - 1

    def fit(v, what):
        if not 0 <= v <= full:
            raise ControlScriptError(f"{what} {v:#x} does not fit in "
                                     f"{width} bits")
        return v

    if kind == "valid":
        if not text.startswith("valid:") or text[6:] not in ("0", "1"):
            raise ControlScriptError(f"valid match must be valid:0 or "
                                     f"valid:1, got {text!r}")
        return ("valid", int(text[6:]))
    if text.startswith("valid:"):
        raise ControlScriptError(f"field has {kind} match, got {text!r}")
    if kind == "ternary":
        if "&&&" not in text:
            raise ControlScriptError(f"ternary match needs v&&&m, got {text!r}")
        v, m = text.split("&&&", 1)
        return ("ternary", fit(_parse_int(v), "value"), fit(_parse_int(m), "mask"))
    if kind == "lpm":
        if "/" not in text:
            raise ControlScriptError(f"lpm match needs v/len, got {text!r}")
        v, plen = text.split("/", 1)
        plen = _parse_int(plen, "prefix length")
        if not 0 <= plen <= width:
            raise ControlScriptError(f"prefix length {plen} exceeds width "
                                     f"{width}")
        return ("lpm", fit(_parse_int(v), "value"), plen)
    if kind == "range":
        if not (text.startswith("[") and text.endswith("]") and "," in text):
            raise ControlScriptError(f"range match needs [lo,hi], got {text!r}")
        lo, hi = text[1:-1].split(",", 1)
        lo, hi = fit(_parse_int(lo), "lo"), fit(_parse_int(hi), "hi")
        if lo > hi:
            raise ControlScriptError(f"empty range [{lo},{hi}]")
        return ("range", lo, hi)
    return ("exact", fit(_parse_int(text), "value"))


def _parse_action_call(cfg, text: str):
    text = text.strip()
    if "(" not in text or not text.endswith(")"):
        raise ControlScriptError(f"expected action(args), got {text!r}")
    name, argtext = text[:-1].split("(", 1)
    name = name.strip()
    action = cfg.program.actions.get(name)
    if action is None:
        raise ControlScriptError(f"unknown action {name!r}")
    args = []
    if argtext.strip():
        for a in argtext.split(","):
            args.append(_parse_int(a.strip(), "action argument"))
    if len(args) != len(action.params):
        raise ControlScriptError(
            f"action {name} takes {len(action.params)} args, got {len(args)}")
    values = tuple(infer_const_width(a, a < 0) for a in args)
    return name, values


def parse_table_add(cfg, parts, line_no):
    """`add <table> <prio> <field>:<spec> ... => <action>(<args>)`"""
    try:
        arrow = parts.index("=>")
    except ValueError:
        raise ControlScriptError(f"line {line_no}: missing =>") from None
    if arrow < 3:
        raise ControlScriptError(f"line {line_no}: add needs a table, a "
                                 "priority, and match specs")
    table = parts[1]
    info = cfg.program.tables.get(table)
    if info is None:
        raise ControlScriptError(f"line {line_no}: unknown table {table!r}")
    prio = _parse_int(parts[2], "priority")
    if prio < 0:
        raise ControlScriptError(f"line {line_no}: priority must be unsigned")
    spec_parts = parts[3:arrow]
    if len(spec_parts) != len(info.reads):
        raise ControlScriptError(
            f"line {line_no}: table {table!r} reads {len(info.reads)} "
            f"fields, got {len(spec_parts)} specs")
    specs = []
    for rs, text in zip(info.reads, spec_parts):
        if ":" not in text:
            raise ControlScriptError(f"line {line_no}: expected field:spec, "
                                     f"got {text!r}")
        fname, spec_text = text.split(":", 1)
        expect = rs.inst if rs.field is None else f"{rs.inst}.{rs.field}"
        if fname != expect:
            raise ControlScriptError(
                f"line {line_no}: expected {expect!r} (declared read order), "
                f"got {fname!r}")
        specs.append(_parse_match_spec(rs.kind, spec_text, rs.width))
    name, values = _parse_action_call(cfg, " ".join(parts[arrow + 1:]))
    if name not in info.actions:
        raise ControlScriptError(
            f"line {line_no}: action {name!r} is not listed by {table!r}")
    return table, TableEntry(prio, tuple(specs), name, values)


def apply_control_line(cfg, line: str, line_no: int = 0):
    line = line.split("#", 1)[0].strip()
    if not line:
        return
    parts = line.split()
    if parts[0] == "add":
        table, entry = parse_table_add(cfg, parts, line_no)
        cfg.install_entry(table, entry)
    elif parts[0] == "default":
        if len(parts) < 4 or parts[2] != "=>":
            raise ControlScriptError(
                f"line {line_no}: default <table> => <action>(<args>)")
        table = parts[1]
        info = cfg.program.tables.get(table)
        if info is None:
            raise ControlScriptError(f"line {line_no}: unknown table {table!r}")
        name, values = _parse_action_call(cfg, " ".join(parts[3:]))
        if name not in info.actions:
            raise ControlScriptError(
                f"line {line_no}: action {name!r} is not listed by {table!r}")
        cfg.set_default(table, name, values)
    elif parts[0] == "register":
        rest = " ".join(parts[1:])
        if "=" not in rest or "[" not in rest:
            raise ControlScriptError(
                f"line {line_no}: register <name>[<idx>] = <value>")
        lhs, rhs = rest.split("=", 1)
        name, idx_text = lhs.strip()[:-1].split("[", 1)
        name = name.strip()
        info = cfg.program.statefuls.get(name)
        if info is None or info.kind != "register":
            raise ControlScriptError(f"line {line_no}: unknown register "
                                     f"{name!r}")
        if info.direct is not None:
            raise ControlScriptError(f"line {line_no}: cannot initialize "
                                     f"direct register {name!r}")
        idx = _parse_int(idx_text, "index")
        if not 0 <= idx < info.instance_count:
            raise ControlScriptError(f"line {line_no}: index {idx} out of "
                                     f"range for {name!r}")
        value = _parse_int(rhs.strip())
        cfg.statefuls[name][idx] = Concrete(info.width,
                                            value & ((1 << info.width) - 1))
    else:
        raise ControlScriptError(
            f"line {line_no}: unknown command {parts[0]!r}")


def apply_control_script(cfg, text: str):
    for i, line in enumerate(text.splitlines(), 1):
        apply_control_line(cfg, line, i)


# -- convenience constructors ---------------------------------------------------


def new_config(program, profile: TargetProfile | None = None,
               parse_budget=DEFAULT_PARSE_BUDGET) -> Config:
    """Fresh Config: headers invalid with undefined fields, metadata zeroed
    (egress specification undefined), counters zero, registers per profile."""
    return Config(program, profile or TargetProfile(), parse_budget)


def make_packet(port: int, data: bytes | BitStream, **kw) -> Packet:
    if isinstance(data, bytes):
        data = BitStream.from_bytes(data)
    return Packet(port, data, **kw)
