import os

import pytest

from p4sim.parser import parse_source
from p4sim.program import elaborate
from p4sim.state import (BitStream, Packet, TargetProfile,
                         apply_control_script, new_config)

CORPUS_DIR = os.path.join(os.path.dirname(__file__), "..", "corpus")

BASIC_FORWARD = """
header_type h_t { fields { f1 : 8; f2 : 8; } }
header h_t h1;
parser start { extract(h1); return ingress; }
action a(n) {
  modify_field(h1.f2, n);
  modify_field(standard_metadata.egress_spec, 1);
}
action b() {
  modify_field(standard_metadata.egress_spec, 2);
}
table t {
  reads { h1.f1 : exact; }
  actions { a; b; }
}
control ingress { apply(t); }
"""

BALANCER = """
header_type bal_meta_t { fields { reg_val : 8; } }
metadata bal_meta_t bal_meta;
parser start { return ingress; }
register flip_reg { width : 8; instance_count : 1; }
action load_reg() {
  register_read(bal_meta.reg_val, flip_reg, 0);
}
table load_tbl {
  reads { bal_meta : valid; }
  actions { load_reg; }
}
action pick_port(port, next_val) {
  modify_field(standard_metadata.egress_spec, port);
  register_write(flip_reg, 0, next_val);
}
table balance_tbl {
  reads { bal_meta.reg_val : exact; }
  actions { pick_port; }
}
control ingress { apply(load_tbl); apply(balance_tbl); }
"""

BALANCER_INIT = """
add load_tbl 1 bal_meta:valid:1 => load_reg()
add balance_tbl 2 bal_meta.reg_val:0 => pick_port(0, 1)
add balance_tbl 1 bal_meta.reg_val:1 => pick_port(1, 0)
"""

ROUTER_L3 = """
header_type ethernet_t { fields { dstAddr : 48; srcAddr : 48; etherType : 16; } }
header_type ipv4_t { fields { version : 4; ihl : 4; diffserv : 8; totalLen : 16;
  identification : 16; flags : 3; fragOffset : 13; ttl : 8; protocol : 8;
  hdrChecksum : 16; srcAddr : 32; dstAddr : 32; } }
header_type routing_meta_t { fields { nhop_ipv4 : 32; } }
header ethernet_t ethernet;
header ipv4_t ipv4;
metadata routing_meta_t routing_meta;
parser start { return parse_ethernet; }
parser parse_ethernet {
  extract(ethernet);
  return select(latest.etherType) {
    0x0800 : parse_ipv4;
    default : ingress;
  }
}
parser parse_ipv4 { extract(ipv4); return ingress; }
field_list ipv4_checksum_list {
  ipv4.version; ipv4.ihl; ipv4.diffserv; ipv4.totalLen; ipv4.identification;
  ipv4.flags; ipv4.fragOffset; ipv4.ttl; ipv4.protocol; ipv4.srcAddr;
  ipv4.dstAddr;
}
field_list_calculation ipv4_checksum {
  input { ipv4_checksum_list; }
  algorithm : csum16;
  output_width : 16;
}
calculated_field ipv4.hdrChecksum {
  verify ipv4_checksum;
  update ipv4_checksum;
}
action set_nhop(nhop, port) {
  modify_field(routing_meta.nhop_ipv4, nhop);
  modify_field(standard_metadata.egress_spec, port);
  add_to_field(ipv4.ttl, -1);
}
action drop_pkt() { drop(); }
table ipv4_lpm {
  reads { ipv4.dstAddr : lpm; }
  actions { set_nhop; drop_pkt; }
}
action rewrite_mac(dmac) { modify_field(ethernet.dstAddr, dmac); }
table forward_tbl {
  reads { routing_meta.nhop_ipv4 : exact; }
  actions { rewrite_mac; drop_pkt; }
}
control ingress {
  if (valid(ipv4)) {
    apply(ipv4_lpm);
    apply(forward_tbl);
  }
}
"""

ROUTER_L3_INIT = """
add ipv4_lpm 16 ipv4.dstAddr:0x0a000100/24 => set_nhop(0x0a000101, 1)
add ipv4_lpm 8 ipv4.dstAddr:0x0a000000/8 => set_nhop(0x0a000201, 2)
add forward_tbl 2 routing_meta.nhop_ipv4:0x0a000101 => rewrite_mac(0x000000000001)
add forward_tbl 1 routing_meta.nhop_ipv4:0x0a000201 => rewrite_mac(0x000000000002)
"""

TWO_DEPARSE = """
header_type tag_t { fields { kind : 8; val : 8; } }
header tag_t alpha;
header tag_t beta;
parser start {
  return select(current(0, 8)) {
    1 : parse_alpha;
    default : parse_beta;
  }
}
parser parse_alpha { extract(alpha); return ingress; }
parser parse_beta { extract(beta); return ingress; }
action both() {
  add_header(beta);
  modify_field(beta.kind, 0xBB);
  modify_field(beta.val, 0xB1);
  modify_field(standard_metadata.egress_spec, 1);
}
action fwd() { modify_field(standard_metadata.egress_spec, 1); }
table t {
  reads { alpha : valid; }
  actions { both; fwd; }
}
control ingress { apply(t); }
"""

TWO_DEPARSE_INIT = "add t 2 alpha:valid:1 => both()\nadd t 1 alpha:valid:0 => fwd()\n"


def build(src):
    return elaborate(parse_source(src))


def make_cfg(src, ctl="", profile=""):
    cfg = new_config(build(src), TargetProfile.from_name(profile))
    if ctl:
        apply_control_script(cfg, ctl)
    return cfg


def inject_hex(cfg, port, hex_text):
    cfg.in_stream.append(Packet(port, BitStream.from_hex(hex_text)))


@pytest.fixture
def fig1_cfg():
    return make_cfg(BASIC_FORWARD, "add t 1 h1.f1:0xAA => a(0x42)")


def corpus_pairs():
    if not os.path.isdir(CORPUS_DIR):
        return []
    pairs = []
    for name in sorted(os.listdir(CORPUS_DIR)):
        if name.endswith(".p4"):
            stf = os.path.join(CORPUS_DIR, name[:-3] + ".stf")
            if os.path.exists(stf):
                pairs.append((os.path.join(CORPUS_DIR, name), stf))
    return pairs
