import random

import pytest

from p4sim.errors import ControlScriptError, StuckError
from p4sim.state import (BitStream, Packet, TableEntry, TargetProfile,
                         apply_control_script, new_config)
from p4sim.values import AtomTable, Concrete, Symbolic, UNDEF, is_undef

from conftest import BASIC_FORWARD, BALANCER, ROUTER_L3, build, make_cfg

STACK_SRC = """
header_type e_t { fields { a : 8; b : 8; } }
header e_t stk[3];
parser start { extract(stk[next]); return ingress; }
control ingress { }
"""


def test_new_config_fig1():
    cfg = make_cfg(BASIC_FORWARD)
    assert not cfg.is_valid("h1")
    assert is_undef(cfg.get_field("h1", "f1"))
    assert cfg.get_field("standard_metadata", "ingress_port").bits == 0
    assert is_undef(cfg.get_field("standard_metadata", "egress_spec"))


def test_new_config_register_profiles():
    cfg = make_cfg(BALANCER)
    assert is_undef(cfg.statefuls["flip_reg"][0])
    cfg = make_cfg(BALANCER, profile="zero-registers")
    assert cfg.statefuls["flip_reg"][0] == Concrete(8, 0)


def test_set_field():
    cfg = make_cfg(BASIC_FORWARD)
    cfg.set_validity("h1", True)
    cfg.set_field("h1", "f2", Concrete(8, 0x42))
    assert cfg.get_field("h1", "f2").bits == 0x42
    # truncation to field width
    cfg.set_field("h1", "f2", Concrete(16, 0x1FF))
    assert cfg.get_field("h1", "f2").bits == 0xFF


def test_set_field_invalid_header_sticks():
    cfg = make_cfg(BASIC_FORWARD)
    with pytest.raises(StuckError) as ei:
        cfg.set_field("h1", "f2", Concrete(8, 1))
    assert ei.value.reason == "WRITE_INVALID_HEADER"


def test_set_metadata_always_succeeds():
    cfg = make_cfg(BALANCER)
    cfg.set_field("bal_meta", "reg_val", Concrete(8, 0))
    assert cfg.get_field("bal_meta", "reg_val").bits == 0


def test_invalid_header_reads_undefined():
    cfg = make_cfg(BASIC_FORWARD)
    cfg.instances["h1"][1]["f1"] = Concrete(8, 7)  # stale garbage
    assert is_undef(cfg.get_field("h1", "f1"))


class StackModel:
    """Explicit array simulation used as the push/pop oracle."""

    def __init__(self, size):
        self.slots = [None] * size  # None = invalid, else (a, b)

    def push(self, count):
        size = len(self.slots)
        self.slots = [(0, 0)] * count + self.slots[:size - count]

    def pop(self, count):
        size = len(self.slots)
        self.slots = self.slots[count:] + [None] * count
        assert len(self.slots) == size


def _stack_view(cfg):
    out = []
    for i in range(3):
        name = f"stk[{i}]"
        if not cfg.is_valid(name):
            out.append(None)
        else:
            f = cfg.raw_fields(name)
            out.append((f["a"].bits, f["b"].bits))
    return out


def test_stack_push_pop_against_model():
    rng = random.Random(1)
    for _ in range(100):
        cfg = make_cfg(STACK_SRC)
        model = StackModel(3)
        # seed some valid elements with distinct contents
        n_seed = rng.randint(0, 3)
        for i in range(n_seed):
            name = f"stk[{i}]"
            cfg.set_validity(name, True)
            cfg.set_field(name, "a", Concrete(8, i + 1))
            cfg.set_field(name, "b", Concrete(8, 10 + i))
            model.slots[i] = (i + 1, 10 + i)
        for _ in range(rng.randint(1, 6)):
            count = rng.randint(1, 3)
            if rng.random() < 0.5:
                cfg.stack_push("stk", count)
                model.push(count)
            else:
                cfg.stack_pop("stk", count)
                model.pop(count)
            assert _stack_view(cfg) == model.slots


def test_stack_push_example():
    cfg = make_cfg(STACK_SRC)
    cfg.set_validity("stk[0]", True)
    cfg.set_field("stk[0]", "a", Concrete(8, 0xE0))
    cfg.set_field("stk[0]", "b", Concrete(8, 0xE1))
    cfg.stack_push("stk", 1)
    assert _stack_view(cfg) == [(0, 0), (0xE0, 0xE1), None]


def test_stack_pop_example():
    cfg = make_cfg(STACK_SRC)
    for i in range(2):
        name = f"stk[{i}]"
        cfg.set_validity(name, True)
        cfg.set_field(name, "a", Concrete(8, i))
        cfg.set_field(name, "b", Concrete(8, i))
    cfg.stack_pop("stk", 1)
    assert _stack_view(cfg) == [(1, 1), None, None]


def test_stack_bad_op():
    cfg = make_cfg(STACK_SRC)
    with pytest.raises(StuckError) as ei:
        cfg.stack_pop("stk", 0)
    assert ei.value.reason == "BAD_STACK_OP"
    with pytest.raises(StuckError):
        cfg.stack_push("stk", 4)


def test_register_read_write_and_bounds():
    cfg = make_cfg(BALANCER)
    cfg.register_write("flip_reg", 0, Concrete(8, 1))
    assert cfg.register_read("flip_reg", 0).bits == 1
    with pytest.raises(StuckError) as ei:
        cfg.register_read("flip_reg", 7)
    assert ei.value.reason == "INDEX_OOB"


COUNTER_SRC = """
header_type h_t { fields { f1 : 8; } }
header h_t h1;
parser start { extract(h1); return ingress; }
counter pkts { type : packets; instance_count : 2; }
counter octets { type : bytes; instance_count : 2; }
control ingress { }
"""


def test_counters():
    cfg = make_cfg(COUNTER_SRC)
    cfg.count_increment("pkts", 0, 100)
    cfg.count_increment("pkts", 0, 100)
    assert cfg.statefuls["pkts"][0].bits == 2
    cfg.count_increment("octets", 1, 64)
    assert cfg.statefuls["octets"][1].bits == 64


def test_entries_stay_priority_sorted():
    cfg = make_cfg(BASIC_FORWARD)
    rng = random.Random(8)
    prios = list(range(20))
    rng.shuffle(prios)
    for p in prios:
        apply_control_script(cfg, f"add t {p} h1.f1:{p} => b()")
    got = [e.priority for e in cfg.entries["t"]]
    assert got == sorted(got, reverse=True)


def test_duplicate_priority_rejected():
    cfg = make_cfg(BASIC_FORWARD, "add t 1 h1.f1:0xAA => b()")
    with pytest.raises(ControlScriptError):
        apply_control_script(cfg, "add t 1 h1.f1:0xBB => b()")


def test_control_script_matchspecs():
    cfg = make_cfg(ROUTER_L3)
    apply_control_script(cfg, "add ipv4_lpm 5 ipv4.dstAddr:0x0a000000/8 "
                              "=> drop_pkt()")
    e = cfg.entries["ipv4_lpm"][0]
    assert e.specs == (("lpm", 0x0a000000, 8),)
    with pytest.raises(ControlScriptError):
        apply_control_script(cfg, "add ipv4_lpm 6 ipv4.dstAddr:12 => drop_pkt()")


def test_control_script_register_init():
    cfg = make_cfg(BALANCER, "register flip_reg[0] = 1")
    assert cfg.statefuls["flip_reg"][0].bits == 1
    with pytest.raises(ControlScriptError):
        apply_control_script(cfg, "register flip_reg[9] = 1")


def test_control_script_default():
    cfg = make_cfg(BASIC_FORWARD, "default t => b()")
    assert cfg.defaults["t"] == ("b", ())


def test_snapshot_hash_copy_and_sensitivity():
    cfg = make_cfg(BASIC_FORWARD, "add t 1 h1.f1:0xAA => a(7)")
    assert cfg.snapshot_hash() == cfg.clone().snapshot_hash()
    other = cfg.clone()
    other.set_validity("h1", True)
    other.set_field("h1", "f1", Concrete(8, 1))
    assert cfg.snapshot_hash() != other.snapshot_hash()


def test_snapshot_hash_entry_order_canonical():
    script_a = ["add t 1 h1.f1:0x01 => b()", "add t 2 h1.f1:0x02 => a(1)"]
    cfg1 = make_cfg(BASIC_FORWARD, "\n".join(script_a))
    cfg2 = make_cfg(BASIC_FORWARD, "\n".join(reversed(script_a)))
    # same priority-sorted entries, different insertion order
    assert [e.priority for e in cfg1.entries["t"]] \
        == [e.priority for e in cfg2.entries["t"]]
    h1 = [(e.priority, e.specs, e.action) for e in cfg1.entries["t"]]
    h2 = [(e.priority, e.specs, e.action) for e in cfg2.entries["t"]]
    assert h1 == h2


def test_no_value_exceeds_field_width_after_random_ops():
    rng = random.Random(77)
    cfg = make_cfg(BASIC_FORWARD)
    cfg.set_validity("h1", True)
    for _ in range(300):
        fld = rng.choice(["f1", "f2"])
        cfg.set_field("h1", fld, Concrete(16, rng.getrandbits(16)))
        v = cfg.get_field("h1", fld)
        assert v.width == 8 and v.bits < 256


def test_bitstream_read_slice_roundtrip():
    data = bytes(range(16))
    bs = BitStream.from_bytes(data)
    atoms = AtomTable()
    assert bs.read(0, 8, atoms).bits == 0
    assert bs.read(8, 16, atoms).bits == 0x0102
    assert bs.slice(8).to_bytes() == data[1:]
    assert bs.read(130, 8, atoms) is None


def test_bitstream_symbolic_read():
    atoms = AtomTable()
    aid = atoms.fresh_base(16, label="f")
    bs = BitStream([(8, 0xAA), (16, ("atom", aid)), (8, 0xBB)])
    v = bs.read(8, 16, atoms)
    assert isinstance(v, Symbolic) and v.atom == aid
    # partial read derives a slice atom
    v2 = bs.read(8, 8, atoms)
    assert isinstance(v2, Symbolic) and v2.atom != aid
    assert atoms.evaluate(v2.atom, {aid: 0xABCD}).bits == 0xAB
    # mixed read derives a concat
    v3 = bs.read(0, 16, atoms)
    assert atoms.evaluate(v3.atom, {aid: 0xABCD}).bits == 0xAAAB


def test_bitstream_substitute():
    atoms = AtomTable()
    aid = atoms.fresh_base(16, label="f")
    bs = BitStream([(8, 0x01), (16, ("atom", aid))])
    concrete = bs.substitute({aid: 0xBEEF}, atoms)
    assert concrete.to_bytes() == bytes([0x01, 0xBE, 0xEF])


def test_profile_parsing():
    p = TargetProfile.from_name("drop-undef-egress,zero-registers")
    assert p.undefined_egress == "drop" and p.register_init == "zero"
    with pytest.raises(Exception):
        TargetProfile.from_name("bogus")
