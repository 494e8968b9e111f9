"""Candidate/commission citation network and the eleven dossier metrics."""
from __future__ import annotations

import enum
from dataclasses import astuple, dataclass, fields
from pathlib import Path

from .errors import ArgumentError
from .resolver import Dossier, Label, Section, Stub
from .store import PubKey, key_sort


class PublicationKind(str, enum.Enum):
    BOOK = "BOOK"
    ARTICLE = "ARTICLE"
    OTHER = "OTHER"


class NodeClass(str, enum.Enum):
    CANDIDATE = "CANDIDATE"
    COMMISSION = "COMMISSION"
    COAUTHORED = "COAUTHORED"
    OTHER = "OTHER"


_KIND_TABLE = {
    "book": PublicationKind.BOOK,
    "monograph": PublicationKind.BOOK,
    "journal-article": PublicationKind.ARTICLE,
    "journal article": PublicationKind.ARTICLE,
    "journal": PublicationKind.ARTICLE,
}


def kind_of(pub) -> PublicationKind:
    """Map a record's source type string; book chapters and anything unknown are OTHER."""
    hint = getattr(pub, "kind_hint", None)
    if not hint:
        return PublicationKind.OTHER
    return _KIND_TABLE.get(hint.strip().lower(), PublicationKind.OTHER)


@dataclass(frozen=True)
class NetworkNode:
    key: PubKey
    node_class: NodeClass
    kind: PublicationKind


@dataclass(frozen=True)
class CitationNetwork:
    nodes: tuple[NetworkNode, ...]
    edges: tuple[tuple[PubKey, PubKey], ...]
    dossier_ref: str

    def __post_init__(self):
        keys = {n.key for n in self.nodes}
        for a, b in self.edges:
            if a not in keys or b not in keys:
                raise ArgumentError(f"edge {a!r}->{b!r} leaves the node set")
            if a == b:
                raise ArgumentError(f"self-loop on {a!r}")

    def by_class(self, *classes: NodeClass) -> set[PubKey]:
        return {n.key for n in self.nodes if n.node_class in classes}

    def export(self, edges_path: str | Path, nodes_path: str | Path) -> None:
        """Write ``citing cited`` edge list and ``pub_key class kind`` node table."""
        Path(edges_path).write_text(
            "".join(f"{a} {b}\n" for a, b in self.edges), encoding="utf-8")
        Path(nodes_path).write_text(
            "".join(f"{n.key} {n.node_class.value} {n.kind.value}\n" for n in self.nodes),
            encoding="utf-8")


def build_network(dossier: Dossier) -> CitationNetwork:
    cand = dossier.candidate_ids
    comm = dossier.commission_ids
    co = dossier.coauthored_ids
    own = cand | comm

    kinds: dict[PubKey, PublicationKind] = {}
    for p in dossier.candidate_pubs + dossier.commission_pubs:
        kinds[p.pub_id] = kind_of(p)
    for n in dossier.neighbors:
        kinds.setdefault(n.key, PublicationKind.OTHER if isinstance(n, Stub) else kind_of(n))

    edges = set()
    for a, b in dossier.links:
        # only links touching a candidate/commission publication are kept, so
        # an OTHER node is present only if it is tied to a coloured one
        if a == b or not (a in own or b in own):
            continue
        edges.add((a, b))
    touched = {k for e in edges for k in e}

    nodes = []
    for key in sorted(own | touched, key=key_sort):
        if key in co:
            cls = NodeClass.COAUTHORED
        elif key in cand:
            cls = NodeClass.CANDIDATE
        elif key in comm:
            cls = NodeClass.COMMISSION
        else:
            cls = NodeClass.OTHER
        nodes.append(NetworkNode(key, cls, kinds.get(key, PublicationKind.OTHER)))
    return CitationNetwork(
        nodes=tuple(nodes),
        edges=tuple(sorted(edges, key=lambda e: (key_sort(e[0]), key_sort(e[1])))),
        dossier_ref=dossier.dossier_id,
    )


METRIC_NAMES = (
    "cand", "books", "articles", "other_pubbs", "co_au",
    "cand_comm", "comm_cand", "bc", "cc", "cand_other", "other_cand",
)


@dataclass(frozen=True)
class MetricVector:
    cand: int = 0
    books: int = 0
    articles: int = 0
    other_pubbs: int = 0
    co_au: int = 0
    cand_comm: int = 0
    comm_cand: int = 0
    bc: int = 0
    cc: int = 0
    cand_other: int = 0
    other_cand: int = 0
    label: Label | None = None
    section: Section | None = None

    def __post_init__(self):
        vals = self.values()
        if any(v < 0 for v in vals):
            raise ArgumentError("metric values are non-negative")
        if self.books + self.articles + self.other_pubbs != self.cand:
            raise ArgumentError("publication kinds must partition cand")
        if self.co_au > self.cand:
            raise ArgumentError("co_au exceeds cand")

    def values(self) -> tuple[int, ...]:
        return astuple(self)[: len(METRIC_NAMES)]

    def as_dict(self) -> dict[str, int]:
        return dict(zip(METRIC_NAMES, self.values()))


assert tuple(f.name for f in fields(MetricVector))[: len(METRIC_NAMES)] == METRIC_NAMES


def metrics_from_sets(cand: set, comm: set, co: set, other: set, edges, kinds: dict) -> dict[str, int]:
    """Metric values from explicit node sets; ``cand``/``comm`` include ``co``."""
    out_nb: dict = {}
    in_nb: dict = {}
    for a, b in edges:
        out_nb.setdefault(a, set()).add(b)
        in_nb.setdefault(b, set()).add(a)

    def reach(table, sources):
        got = set()
        for s in sources:
            got |= table.get(s, set())
        return got

    def coupled(table, hub):
        # two distinct publications, one per side; a co-authored publication
        # alone does not couple with itself
        a = table.get(hub, set()) & cand
        b = table.get(hub, set()) & comm
        return bool(a) and bool(b) and len(a | b) >= 2

    cited_by_cand = reach(out_nb, cand)
    citing_cand = reach(in_nb, cand)
    by_kind = {k: 0 for k in PublicationKind}
    for key in cand:
        by_kind[kinds[key]] += 1
    return {
        "cand": len(cand),
        "books": by_kind[PublicationKind.BOOK],
        "articles": by_kind[PublicationKind.ARTICLE],
        "other_pubbs": by_kind[PublicationKind.OTHER],
        "co_au": len(co),
        "cand_comm": sum(1 for a, b in edges if a in cand and b in comm),
        "comm_cand": sum(1 for a, b in edges if a in comm and b in cand),
        "bc": sum(1 for r in in_nb if coupled(in_nb, r)),
        "cc": sum(1 for r in out_nb if coupled(out_nb, r)),
        "cand_other": len(cited_by_cand & other),
        "other_cand": len(citing_cand & other),
    }


def compute_metrics(dossier: Dossier, network: CitationNetwork) -> MetricVector:
    if network.dossier_ref != dossier.dossier_id:
        raise ArgumentError(
            f"network built for {network.dossier_ref!r}, not {dossier.dossier_id!r}")
    node_keys = {n.key for n in network.nodes}
    if not (dossier.candidate_ids | dossier.commission_ids) <= node_keys:
        raise ArgumentError("network is missing dossier publications")
    cand = network.by_class(NodeClass.CANDIDATE, NodeClass.COAUTHORED)
    comm = network.by_class(NodeClass.COMMISSION, NodeClass.COAUTHORED)
    co = network.by_class(NodeClass.COAUTHORED)
    other = network.by_class(NodeClass.OTHER)
    kinds = {n.key: n.kind for n in network.nodes}
    values = metrics_from_sets(cand, comm, co, other, network.edges, kinds)
    return MetricVector(**values, label=dossier.outcome_label, section=dossier.section)
