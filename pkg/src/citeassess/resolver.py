"""Match CV entries to stored publications and assemble per-candidate dossiers.

Collection order for one person:

1. each CV entry by DOI, else by (normalized title, year) among MAG records;
2. author ids of the person are read off the matched records and every
   publication carrying one of them is pulled in (author expansion); CV
   entries still unmatched may be found among those;
3. remaining entries are looked up by title and year in OpenAIRE, then in
   Crossref.

Citation neighborhoods of every collected publication are harvested from the
store (native references and COCI links merged, de-duplicated by DOI).
"""
from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import ArgumentError, NotFoundError
from .store import (
    CorpusStore,
    KeyKind,
    PubKey,
    Publication,
    SourceKind,
    canonical_doi,
    key_sort,
    normalize_title,
)


class Method(str, enum.Enum):
    BY_DOI = "BY_DOI"
    BY_TITLE_YEAR = "BY_TITLE_YEAR"
    AUTHOR_EXPANSION = "AUTHOR_EXPANSION"
    FALLBACK_OA = "FALLBACK_OA"
    FALLBACK_CR = "FALLBACK_CR"


class Outcome(str, enum.Enum):
    MATCHED = "MATCHED"
    UNRESOLVED = "UNRESOLVED"


class Role(str, enum.Enum):
    CANDIDATE = "CANDIDATE"
    COMMISSION = "COMMISSION"


class Section(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"


class Label(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"

    @classmethod
    def parse(cls, value) -> "Label | None":
        if value is None or value == "":
            return None
        if isinstance(value, Label):
            return value
        return cls(str(value).strip().upper())


@dataclass(frozen=True)
class CvEntry:
    entry_id: str
    title: str
    year: int | None = None
    doi: str | None = None
    declared_kind: str | None = None

    def __post_init__(self):
        if not self.title or not self.title.strip():
            raise ArgumentError(f"CV entry {self.entry_id!r} has an empty title")
        object.__setattr__(self, "doi", canonical_doi(self.doi))

    @classmethod
    def from_dict(cls, d: dict) -> "CvEntry":
        return cls(
            entry_id=str(d["entry_id"]),
            title=d["title"],
            year=d.get("year"),
            doi=d.get("doi"),
            declared_kind=d.get("declared_kind"),
        )


@dataclass(frozen=True)
class Resolution:
    entry_id: str
    outcome: Outcome
    pub: Publication | None = None
    method: Method | None = None

    def __post_init__(self):
        matched = self.outcome is Outcome.MATCHED
        if matched != (self.pub is not None and self.method is not None):
            raise ArgumentError("MATCHED resolutions carry a publication and a method")

    @classmethod
    def unresolved(cls, entry_id: str) -> "Resolution":
        return cls(entry_id, Outcome.UNRESOLVED)


@dataclass
class Person:
    """One roster line.  ``name`` and ``author_ids`` are optional hints used to
    decide which author of a matched record is this person."""

    person_id: str
    role: Role
    cv: list[CvEntry]
    name: str | None = None
    author_ids: tuple[str, ...] = ()
    outcome: Label | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "Person":
        return cls(
            person_id=str(d["person_id"]),
            role=Role(str(d["role"]).upper()),
            cv=[CvEntry.from_dict(e) for e in d.get("cv", [])],
            name=d.get("name"),
            author_ids=tuple(d.get("author_ids") or ()),
            outcome=Label.parse(d.get("outcome")),
        )


@dataclass
class AuthorProfile:
    person_id: str
    role: Role
    author_ids: tuple[str, ...] = ()
    publications: frozenset[int] = frozenset()

    def __post_init__(self):
        if len(set(self.author_ids)) != len(self.author_ids):
            raise ArgumentError("duplicate author ids in profile")

    def to_dict(self) -> dict:
        return {
            "person_id": self.person_id,
            "role": self.role.value,
            "author_ids": list(self.author_ids),
            "publications": sorted(self.publications),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuthorProfile":
        return cls(d["person_id"], Role(d["role"]), tuple(d["author_ids"]), frozenset(d["publications"]))


@dataclass(frozen=True)
class Stub:
    """A citation neighbor with no metadata in any source."""

    key: str

    @property
    def doi(self) -> str | None:
        return self.key if self.key.startswith("10.") else None

    kind_hint = None


Node = Union[Publication, Stub]


def node_key(node: Node) -> PubKey:
    return node.key


@dataclass(frozen=True)
class Harvest:
    cited: tuple[Node, ...] = ()
    citing: tuple[Node, ...] = ()


def classify_section(listed: int, matched: int, total_retrieved: int) -> Section:
    """Coverage section of an application.

    A: more than 15 listed publications found, or at least 70% of them.
    B: otherwise, when all retrieved publications (author expansion included)
       reach 70% of the listed count.
    C: everything else, including empty CVs.
    """
    if listed < 0 or matched < 0 or total_retrieved < 0:
        raise ArgumentError("counts must be non-negative")
    if matched > listed:
        raise ArgumentError(f"matched ({matched}) exceeds listed ({listed})")
    if total_retrieved < matched:
        raise ArgumentError(f"total_retrieved ({total_retrieved}) below matched ({matched})")
    if listed == 0:
        return Section.C
    # integer forms of matched/listed >= 0.7 and total >= 0.7 * listed
    if matched > 15 or 10 * matched >= 7 * listed:
        return Section.A
    if 10 * total_retrieved >= 7 * listed:
        return Section.B
    return Section.C


@dataclass
class Dossier:
    candidate: AuthorProfile
    commission: list[AuthorProfile]
    candidate_pubs: tuple[Publication, ...]
    commission_pubs: tuple[Publication, ...]
    coauthored_pubs: tuple[Publication, ...]
    section: Section
    listed_count: int
    matched_count: int
    total_retrieved_count: int
    outcome_label: Label | None = None
    resolutions: tuple[Resolution, ...] = ()
    neighbors: tuple[Node, ...] = ()
    links: tuple[tuple[PubKey, PubKey], ...] = ()

    def __post_init__(self):
        cand = {p.pub_id for p in self.candidate_pubs}
        comm = {p.pub_id for p in self.commission_pubs}
        co = {p.pub_id for p in self.coauthored_pubs}
        if not (co <= cand and co <= comm):
            raise ArgumentError("co-authored publications must belong to both sides")
        if self.matched_count > self.listed_count or self.matched_count > self.total_retrieved_count:
            raise ArgumentError("inconsistent dossier counts")

    @property
    def dossier_id(self) -> str:
        return self.candidate.person_id

    @property
    def candidate_ids(self) -> frozenset[int]:
        return frozenset(p.pub_id for p in self.candidate_pubs)

    @property
    def commission_ids(self) -> frozenset[int]:
        return frozenset(p.pub_id for p in self.commission_pubs)

    @property
    def coauthored_ids(self) -> frozenset[int]:
        return frozenset(p.pub_id for p in self.coauthored_pubs)

    @property
    def unresolved_entries(self) -> list[str]:
        return [r.entry_id for r in self.resolutions if r.outcome is Outcome.UNRESOLVED]

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        def node(n: Node) -> dict:
            if isinstance(n, Stub):
                return {"stub": n.key}
            return n.to_dict()

        return {
            "candidate": self.candidate.to_dict(),
            "commission": [m.to_dict() for m in self.commission],
            "candidate_pubs": [p.to_dict() for p in self.candidate_pubs],
            "commission_pubs": [p.to_dict() for p in self.commission_pubs],
            "coauthored_pubs": [{"pub_id": p.pub_id, "doi": p.doi} for p in self.coauthored_pubs],
            "section": self.section.value,
            "listed_count": self.listed_count,
            "matched_count": self.matched_count,
            "total_retrieved_count": self.total_retrieved_count,
            "outcome_label": self.outcome_label.value if self.outcome_label else None,
            "resolutions": [
                {
                    "entry_id": r.entry_id,
                    "outcome": r.outcome.value,
                    "method": r.method.value if r.method else None,
                    "pub_id": r.pub.pub_id if r.pub else None,
                    "doi": r.pub.doi if r.pub else None,
                }
                for r in self.resolutions
            ],
            "neighbors": [node(n) for n in self.neighbors],
            "links": [list(edge) for edge in self.links],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dossier":
        pubs: dict[int, Publication] = {}
        for p in d["candidate_pubs"] + d["commission_pubs"]:
            pubs.setdefault(p["pub_id"], Publication.from_dict(p))
        neighbors = tuple(
            Stub(n["stub"]) if "stub" in n else Publication.from_dict(n) for n in d["neighbors"]
        )
        known = dict(pubs)
        known.update({n.pub_id: n for n in neighbors if isinstance(n, Publication)})
        resolutions = tuple(
            Resolution(
                r["entry_id"],
                Outcome(r["outcome"]),
                known.get(r["pub_id"]) if r["pub_id"] is not None else None,
                Method(r["method"]) if r["method"] else None,
            )
            for r in d["resolutions"]
        )
        return cls(
            candidate=AuthorProfile.from_dict(d["candidate"]),
            commission=[AuthorProfile.from_dict(m) for m in d["commission"]],
            candidate_pubs=tuple(pubs[p["pub_id"]] for p in d["candidate_pubs"]),
            commission_pubs=tuple(pubs[p["pub_id"]] for p in d["commission_pubs"]),
            coauthored_pubs=tuple(pubs[p["pub_id"]] for p in d["coauthored_pubs"]),
            section=Section(d["section"]),
            listed_count=d["listed_count"],
            matched_count=d["matched_count"],
            total_retrieved_count=d["total_retrieved_count"],
            outcome_label=Label.parse(d["outcome_label"]),
            resolutions=resolutions,
            neighbors=neighbors,
            links=tuple((a, b) for a, b in d["links"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, ensure_ascii=False) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Dossier":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _name_tokens(name: str | None) -> tuple[str, ...]:
    return tuple(sorted(normalize_title(name or "").split()))


@dataclass
class _Collected:
    profile: AuthorProfile
    resolutions: list[Resolution]
    pubs: dict[int, Publication] = field(default_factory=dict)
    matched: set[int] = field(default_factory=set)


class Resolver:
    """Runs the collection process against one (read-only) store."""

    def __init__(self, store: CorpusStore):
        self.store = store
        self._members: dict[str, _Collected] = {}

    # -- single entries ----------------------------------------------------
    def _by_doi(self, entry: CvEntry) -> Resolution | None:
        if entry.doi:
            hits = self.store.query(KeyKind.DOI, entry.doi)
            if hits:
                return Resolution(entry.entry_id, Outcome.MATCHED, hits[0], Method.BY_DOI)
        return None

    def _by_title_year(self, entry: CvEntry, origin: SourceKind, method: Method) -> Resolution | None:
        if entry.year is None:
            return None
        hits = self.store.query(KeyKind.TITLE_YEAR, (entry.title, entry.year), origin=origin)
        if not hits:
            return None
        # richest record wins, lowest pub_id on ties
        best = min(hits, key=lambda p: (-len(p.references), p.pub_id))
        return Resolution(entry.entry_id, Outcome.MATCHED, best, method)

    def _primary(self, entry: CvEntry) -> Resolution | None:
        return self._by_doi(entry) or self._by_title_year(entry, SourceKind.MAG, Method.BY_TITLE_YEAR)

    def _fallback(self, entry: CvEntry) -> Resolution | None:
        return (self._by_title_year(entry, SourceKind.OA, Method.FALLBACK_OA)
                or self._by_title_year(entry, SourceKind.CR, Method.FALLBACK_CR))

    def match_entry(self, entry: CvEntry) -> Resolution:
        return self._primary(entry) or self._fallback(entry) or Resolution.unresolved(entry.entry_id)

    # -- author expansion --------------------------------------------------
    def expand_by_author(self, profile: AuthorProfile, already_matched: Iterable[Publication | int]) -> list[Publication]:
        seen_ids = {p if isinstance(p, int) else p.pub_id for p in already_matched}
        found: dict[int, Publication] = {}
        for aid in profile.author_ids:
            for pub in self.store.query(KeyKind.AUTHOR_ID, aid):
                if pub.pub_id not in seen_ids:
                    found[pub.pub_id] = pub
        # pub_ids are unique and DOIs are unique per store, so one pass by
        # pub_id also de-duplicates by DOI
        return [found[k] for k in sorted(found)]

    @staticmethod
    def person_author_ids(person: Person, matched: Sequence[Publication]) -> tuple[str, ...]:
        """Source author ids of ``person``, one per matched record.

        Explicit roster ids win.  Otherwise the author whose name tokens equal
        the roster name is taken; without a name, the author id recurring most
        often across the person's matched records (smallest id on ties).
        """
        if person.author_ids:
            return tuple(dict.fromkeys(person.author_ids))
        freq = Counter(aid for pub in matched for aid in pub.author_ids)
        target = _name_tokens(person.name)
        out: dict[str, None] = {}
        for pub in matched:
            with_ids = [a for a in pub.authors if a.author_id]
            if not with_ids:
                continue
            chosen = None
            if target:
                named = [a.author_id for a in with_ids if _name_tokens(a.name) == target]
                chosen = min(named) if named else None
            else:
                chosen = min((a.author_id for a in with_ids), key=lambda a: (-freq[a], a))
            if chosen:
                out.setdefault(chosen, None)
        return tuple(out)

    def collect(self, person: Person) -> _Collected:
        """Match, expand and fall back for one person's CV."""
        resolutions: dict[str, Resolution] = {}
        for entry in person.cv:
            res = self._primary(entry)
            if res:
                resolutions[entry.entry_id] = res
        matched_pubs = [r.pub for r in resolutions.values()]
        profile = AuthorProfile(
            person.person_id, person.role, self.person_author_ids(person, matched_pubs)
        )
        expanded = self.expand_by_author(profile, matched_pubs)
        by_doi = {p.doi: p for p in expanded if p.doi}
        by_ty = {}
        for p in expanded:
            by_ty.setdefault((p.norm_title, p.year), p)
        for entry in person.cv:
            if entry.entry_id in resolutions:
                continue
            hit = by_doi.get(entry.doi) if entry.doi else None
            if hit is None and entry.year is not None:
                hit = by_ty.get((normalize_title(entry.title), entry.year))
            res = (Resolution(entry.entry_id, Outcome.MATCHED, hit, Method.AUTHOR_EXPANSION) if hit
                   else self._fallback(entry))
            resolutions[entry.entry_id] = res or Resolution.unresolved(entry.entry_id)

        ordered = [resolutions[e.entry_id] for e in person.cv]
        pubs = {r.pub.pub_id: r.pub for r in ordered if r.pub is not None}
        matched = set(pubs)
        for p in expanded:
            pubs.setdefault(p.pub_id, p)
        profile.publications = frozenset(pubs)
        return _Collected(profile, ordered, pubs, matched)

    def _member(self, person: Person) -> _Collected:
        if person.person_id not in self._members:
            self._members[person.person_id] = self.collect(person)
        return self._members[person.person_id]

    # -- citations ---------------------------------------------------------
    def _node(self, key: PubKey) -> Node:
        return self.store.get(key) if isinstance(key, int) else Stub(key)

    def harvest_citations(self, pub: Publication | PubKey) -> Harvest:
        if not isinstance(pub, Publication):
            pub = self.store.lookup(pub)
        elif pub.pub_id is None:
            raise NotFoundError("publication is not stored")
        nb = self.store.citation_neighbors(pub)
        return Harvest(
            cited=tuple(self._node(k) for k in nb.cited),
            citing=tuple(self._node(k) for k in nb.citing),
        )

    # -- dossiers ----------------------------------------------------------
    def build_dossier(self, candidate: Person, commission: Sequence[Person],
                      outcome: Label | str | None = None) -> Dossier:
        if not commission:
            raise ArgumentError("commission is empty")
        cand = self.collect(candidate)
        members = [self._member(m) for m in commission]

        cand_pubs = dict(cand.pubs)
        comm_pubs: dict[int, Publication] = {}
        for m in members:
            comm_pubs.update(m.pubs)
        cand_aids = set(cand.profile.author_ids)
        member_aids = set().union(*(m.profile.author_ids for m in members))
        for pid, pub in list(cand_pubs.items()) + list(comm_pubs.items()):
            aids = pub.author_ids
            if aids & cand_aids and aids & member_aids:
                cand_pubs.setdefault(pid, pub)
                comm_pubs.setdefault(pid, pub)
        co_ids = sorted(set(cand_pubs) & set(comm_pubs))

        listed = len(candidate.cv)
        matched = len(cand.matched)
        total = len(cand_pubs)
        section = classify_section(listed, matched, total)

        own = set(cand_pubs) | set(comm_pubs)
        neighbors: dict[PubKey, Node] = {}
        links: set[tuple[PubKey, PubKey]] = set()
        for pid in sorted(own):
            h = self.harvest_citations(cand_pubs.get(pid) or comm_pubs[pid])
            for n in h.cited:
                links.add((pid, n.key))
                if n.key not in own:
                    neighbors.setdefault(n.key, n)
            for n in h.citing:
                links.add((n.key, pid))
                if n.key not in own:
                    neighbors.setdefault(n.key, n)

        label = Label.parse(outcome) if outcome is not None else candidate.outcome
        return Dossier(
            candidate=cand.profile,
            commission=[m.profile for m in members],
            candidate_pubs=tuple(cand_pubs[k] for k in sorted(cand_pubs)),
            commission_pubs=tuple(comm_pubs[k] for k in sorted(comm_pubs)),
            coauthored_pubs=tuple(cand_pubs[k] for k in co_ids),
            section=section,
            listed_count=listed,
            matched_count=matched,
            total_retrieved_count=total,
            outcome_label=label,
            resolutions=tuple(cand.resolutions),
            neighbors=tuple(neighbors[k] for k in sorted(neighbors, key=key_sort)),
            links=tuple(sorted(links, key=lambda e: (key_sort(e[0]), key_sort(e[1])))),
        )


def load_roster(path: str | Path) -> tuple[list[Person], list[Person]]:
    """Read a roster file; returns ``(candidates, commission)`` in file order."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    people = data["people"] if isinstance(data, dict) else data
    persons = [Person.from_dict(p) for p in people]
    ids = [p.person_id for p in persons]
    if len(set(ids)) != len(ids):
        raise ArgumentError("duplicate person_id in roster")
    cands = [p for p in persons if p.role is Role.CANDIDATE]
    comm = [p for p in persons if p.role is Role.COMMISSION]
    return cands, comm
