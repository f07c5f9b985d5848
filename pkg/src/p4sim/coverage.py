"""Semantic coverage: an enumerated registry of rule sites with hit counts.

The registry is a build constant; the exercised fraction of a test set is
hit sites over total sites.  Sites reachable only in search mode are not
registered, so run-mode test suites can reach 100%.
"""

from __future__ import annotations

from dataclasses import dataclass, field

_PARSER_SITES = (
    "parser.extract", "parser.extract.stack", "parser.extract.varbit",
    "parser.set_metadata", "parser.return", "parser.parse_error",
    "parser.select.value", "parser.select.mask", "parser.select.default",
    "parser.verify_ok", "parser.verify_fail",
    "parser.handler", "parser.handler_default", "parser.handler_drop",
    "parser.handler_ingress",
)

_PIPELINE_SITES = (
    "pipeline.parse", "pipeline.ingress", "pipeline.egress",
    "pipeline.skip_ingress", "pipeline.drop", "pipeline.emit",
    "pipeline.calc_update", "pipeline.deparse", "pipeline.deparse_instance",
    "pipeline.deparse_payload", "pipeline.undef_egress_drop",
)

_CONTROL_SITES = (
    "control.apply", "control.call", "control.if_true", "control.if_false",
)

_TABLE_SITES = (
    "table.hit", "table.miss", "table.default",
    "table.direct_counter", "table.direct_meter",
    "match.exact", "match.ternary", "match.lpm", "match.range", "match.valid",
)

_PRIMS = (
    "modify_field", "add_to_field", "subtract_from_field", "add", "subtract",
    "bit_and", "bit_or", "bit_xor", "shift_left", "shift_right",
    "add_header", "remove_header", "copy_header", "push", "pop",
    "register_read", "register_write", "count", "execute_meter",
    "drop", "no_op", "truncate", "modify_field_with_hash_based_offset",
    "resubmit", "recirculate",
    "clone_ingress_pkt_to_ingress", "clone_egress_pkt_to_ingress",
    "clone_ingress_pkt_to_egress", "clone_egress_pkt_to_egress",
    "generate_digest",
)

_OPS = ("+", "-", "*", "&", "|", "^", "<<", ">>",
        "==", "!=", "<", "<=", ">", ">=")

_HASHES = ("csum16", "crc16", "crc32", "identity")

SITES = tuple(
    list(_PARSER_SITES) + list(_PIPELINE_SITES) + list(_CONTROL_SITES)
    + list(_TABLE_SITES) + ["action.call"]
    + [f"prim.{p}" for p in _PRIMS]
    + [f"op.{o}" for o in _OPS] + ["op.neg"]
    + [f"hash.{h}" for h in _HASHES]
)

SITE_SET = frozenset(SITES)
TOTAL_SITES = len(SITES)


@dataclass
class CoverageCounters:
    counts: dict = field(default_factory=dict)

    def hit(self, site: str):
        assert site in SITE_SET, f"unregistered rule site {site!r}"
        self.counts[site] = self.counts.get(site, 0) + 1

    def merge(self, other: "CoverageCounters"):
        for site, n in other.counts.items():
            self.counts[site] = self.counts.get(site, 0) + n

    @property
    def hit_sites(self) -> int:
        return len(self.counts)

    @property
    def fraction(self) -> float:
        return self.hit_sites / TOTAL_SITES

    def missed(self):
        return [s for s in SITES if s not in self.counts]

    def report_text(self) -> str:
        lines = [f"semantic coverage: {self.hit_sites}/{TOTAL_SITES} sites "
                 f"({self.fraction:.1%})"]
        for s in SITES:
            mark = "x" if s in self.counts else " "
            lines.append(f"  [{mark}] {s} ({self.counts.get(s, 0)})")
        return "\n".join(lines)
