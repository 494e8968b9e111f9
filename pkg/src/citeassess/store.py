"""Normalized publication records and the embedded, file-backed corpus store.

Each source dump (MAG, OpenAIRE, Crossref or a native export) is a JSON-lines
file; COCI is a CSV of ``citing,cited`` DOI pairs.  Records are normalized on
the way in and persisted in a single SQLite database with indexes on DOI,
(normalized title, year), author id and source id, plus a forward and reverse
index over citation links.

Link endpoints are stored as *reference strings*: a canonical DOI
(``10.1000/xyz``) or a source-qualified native id (``MAG:2041``).  They are
resolved to ``pub_id`` integers at query time, which is what lets a MAG
reference and a COCI link pointing at the same DOI collapse into one neighbor.
"""
from __future__ import annotations

import csv
import enum
import json
import logging
import re
import sqlite3
import unicodedata
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator, Union

from .errors import ArgumentError, NotFoundError, StoreNotOpenError

log = logging.getLogger(__name__)

DB_FILENAME = "corpus.sqlite"

#: A publication key: a stored ``pub_id`` or, for publications with no
#: metadata in any source, the bare reference string (usually a DOI).
PubKey = Union[int, str]


class SourceKind(str, enum.Enum):
    MAG = "MAG"
    OA = "OA"
    CR = "CR"
    COCI = "COCI"
    NATIVE = "NATIVE"


class KeyKind(str, enum.Enum):
    DOI = "DOI"
    TITLE_YEAR = "TITLE_YEAR"
    AUTHOR_ID = "AUTHOR_ID"
    SOURCE_ID = "SOURCE_ID"


_DOI_PREFIXES = (
    "https://doi.org/",
    "http://doi.org/",
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "doi:",
)
_NON_WORD = re.compile(r"[^\w\s]|_")
_SPACES = re.compile(r"\s+")


def normalize_title(title: str) -> str:
    """Fold a title to the form used for title+year matching.

    >>> normalize_title("  Soil, Moisture; and Crop Yield!  ")
    'soil moisture and crop yield'
    >>> normalize_title("Étude de cas")
    'etude de cas'
    """
    if not title:
        return ""
    decomposed = unicodedata.normalize("NFKD", title)
    folded = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    folded = _NON_WORD.sub(" ", folded.lower())
    return _SPACES.sub(" ", folded).strip()


def canonical_doi(doi: str | None) -> str | None:
    """Lowercase, trim and strip resolver prefixes; ``None`` for empty input."""
    if doi is None:
        return None
    value = str(doi).strip().lower()
    for prefix in _DOI_PREFIXES:
        if value.startswith(prefix):
            value = value[len(prefix):].strip()
            break
    return value or None


def looks_like_doi(value: str) -> bool:
    return value.startswith("10.") and "/" in value


def key_sort(key: PubKey) -> tuple:
    """Total order over mixed publication keys: pub_ids first, then strings."""
    if isinstance(key, int):
        return (0, key, "")
    return (1, 0, key)


@dataclass(frozen=True)
class AuthorRef:
    author_id: str | None
    name: str

    def __post_init__(self):
        if not self.author_id and not self.name:
            raise ArgumentError("author needs an id or a name")


@dataclass
class Publication:
    pub_id: int | None
    doi: str | None
    source_ids: dict[str, str]
    title: str
    norm_title: str
    year: int | None
    kind_hint: str | None
    authors: tuple[AuthorRef, ...]
    references: tuple[str, ...]
    origin: SourceKind

    @property
    def key(self) -> PubKey:
        return self.pub_id if self.pub_id is not None else (self.doi or "")

    @property
    def author_ids(self) -> frozenset[str]:
        return frozenset(a.author_id for a in self.authors if a.author_id)

    def refs(self) -> list[str]:
        """Reference strings under which links may point at this record."""
        out = [f"{kind}:{sid}" for kind, sid in sorted(self.source_ids.items())]
        if self.doi:
            out.append(self.doi)
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["origin"] = self.origin.value
        d["authors"] = [{"id": a.author_id, "name": a.name} for a in self.authors]
        d["references"] = list(self.references)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Publication":
        return cls(
            pub_id=d["pub_id"],
            doi=d["doi"],
            source_ids=dict(d["source_ids"]),
            title=d["title"],
            norm_title=d["norm_title"],
            year=d["year"],
            kind_hint=d["kind_hint"],
            authors=tuple(AuthorRef(a["id"], a["name"]) for a in d["authors"]),
            references=tuple(d["references"]),
            origin=SourceKind(d["origin"]),
        )


@dataclass(frozen=True)
class CitationLink:
    citing: PubKey
    cited: PubKey

    def __post_init__(self):
        if self.citing == self.cited:
            raise ArgumentError(f"self-citation link on {self.citing!r}")


@dataclass
class IngestStats:
    records_read: int = 0
    records_stored: int = 0
    duplicates_skipped: int = 0
    malformed_skipped: int = 0
    links_stored: int = 0

    def __iadd__(self, other: "IngestStats") -> "IngestStats":
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self


@dataclass(frozen=True)
class Neighbors:
    cited: tuple[PubKey, ...] = ()
    citing: tuple[PubKey, ...] = ()


class MalformedRecord(ValueError):
    pass


def parse_record(obj: object, kind: SourceKind) -> Publication:
    """Validate one decoded dump record and return it normalized (no pub_id)."""
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not an object")
    sid = obj.get("id")
    if isinstance(sid, int) and not isinstance(sid, bool):
        sid = str(sid)
    if not isinstance(sid, str) or not sid.strip():
        raise MalformedRecord("missing id")
    sid = sid.strip()
    title = obj.get("title")
    if title is None:
        title = ""
    if not isinstance(title, str):
        raise MalformedRecord("title must be text")
    year = obj.get("year")
    if year is not None and (not isinstance(year, int) or isinstance(year, bool)):
        if isinstance(year, str) and year.strip().isdigit():
            year = int(year)
        else:
            raise MalformedRecord("year must be an integer")
    doi = obj.get("doi")
    if doi is not None and not isinstance(doi, str):
        raise MalformedRecord("doi must be text")
    doi = canonical_doi(doi)
    kind_hint = obj.get("type")
    if kind_hint is not None and not isinstance(kind_hint, str):
        raise MalformedRecord("type must be text")

    authors = []
    for a in obj.get("authors") or []:
        if not isinstance(a, dict):
            raise MalformedRecord("author entries must be objects")
        aid = a.get("id")
        aid = str(aid).strip() if aid not in (None, "") else None
        name = a.get("name") or ""
        if not isinstance(name, str):
            raise MalformedRecord("author name must be text")
        if not aid and not name.strip():
            raise MalformedRecord("author without id or name")
        authors.append(AuthorRef(aid, name.strip()))

    refs: list[str] = []
    seen = set()
    raw_refs = obj.get("references") or []
    if not isinstance(raw_refs, list):
        raise MalformedRecord("references must be a list")
    for r in raw_refs:
        if isinstance(r, int) and not isinstance(r, bool):
            r = str(r)
        if not isinstance(r, str) or not r.strip():
            raise MalformedRecord("reference entries must be id or DOI strings")
        d = canonical_doi(r)
        ref = d if d and looks_like_doi(d) else r.strip()
        if ref not in seen:
            seen.add(ref)
            refs.append(ref)

    return Publication(
        pub_id=None,
        doi=doi,
        source_ids={kind.value: sid},
        title=title,
        norm_title=normalize_title(title),
        year=year,
        kind_hint=kind_hint,
        authors=tuple(authors),
        references=tuple(refs),
        origin=kind,
    )


def reference_key(ref: str, kind: SourceKind) -> str:
    """Link-table form of a record's reference entry."""
    return ref if looks_like_doi(ref) else f"{kind.value}:{ref}"


_SCHEMA = """
CREATE TABLE IF NOT EXISTS publications (
    pub_id     INTEGER PRIMARY KEY,
    doi        TEXT UNIQUE,
    norm_title TEXT NOT NULL,
    year       INTEGER,
    origin     TEXT NOT NULL,
    n_refs     INTEGER NOT NULL,
    data       TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS pub_title_year ON publications (norm_title, year);
CREATE TABLE IF NOT EXISTS source_ids (
    kind   TEXT NOT NULL,
    sid    TEXT NOT NULL,
    pub_id INTEGER NOT NULL,
    PRIMARY KEY (kind, sid)
);
CREATE INDEX IF NOT EXISTS source_sid ON source_ids (sid);
CREATE TABLE IF NOT EXISTS author_ids (
    author_id TEXT NOT NULL,
    pub_id    INTEGER NOT NULL,
    PRIMARY KEY (author_id, pub_id)
);
CREATE TABLE IF NOT EXISTS links (
    citing TEXT NOT NULL,
    cited  TEXT NOT NULL,
    origin TEXT NOT NULL,
    PRIMARY KEY (citing, cited)
);
CREATE INDEX IF NOT EXISTS links_reverse ON links (cited, citing);
"""


class CorpusStore:
    """Embedded publication store rooted at a directory.

    One writer at a time; once ingestion is done any number of readers may
    open the same directory with ``readonly=True`` (one instance per thread).

        with CorpusStore(path) as store:
            store.ingest_dump("mag.jsonl", SourceKind.MAG)
            store.query(KeyKind.DOI, "10.1000/xyz")
    """

    def __init__(self, path: str | Path, readonly: bool = False):
        self.path = Path(path)
        self.readonly = readonly
        self._conn: sqlite3.Connection | None = None

    # -- lifecycle ---------------------------------------------------------
    def open(self) -> "CorpusStore":
        if self._conn is not None:
            return self
        db = self.path / DB_FILENAME
        if self.readonly:
            if not db.exists():
                raise NotFoundError(f"no store at {self.path}")
            self._conn = sqlite3.connect(f"file:{db}?mode=ro", uri=True)
        else:
            self.path.mkdir(parents=True, exist_ok=True)
            self._conn = sqlite3.connect(db)
            self._conn.executescript(_SCHEMA)
        return self

    def close(self) -> None:
        if self._conn is not None:
            self._conn.close()
            self._conn = None

    def __enter__(self) -> "CorpusStore":
        return self.open()

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def conn(self) -> sqlite3.Connection:
        if self._conn is None:
            raise StoreNotOpenError("store is not open")
        return self._conn

    # -- ingestion ---------------------------------------------------------
    def ingest_dump(self, path: str | Path, kind: SourceKind | str) -> IngestStats:
        kind = SourceKind(kind)
        conn = self.conn
        if self.readonly:
            raise StoreNotOpenError("store opened read-only")
        path = Path(path)
        with open(path, encoding="utf-8", newline="") as fh, conn:
            if kind is SourceKind.COCI:
                stats = self._ingest_coci(fh)
            else:
                stats = self._ingest_records(fh, kind)
        log.info("ingested %s (%s): %s", path, kind.value, stats)
        return stats

    def _ingest_records(self, lines: Iterable[str], kind: SourceKind) -> IngestStats:
        stats = IngestStats()
        conn = self.conn
        next_id = conn.execute("SELECT COALESCE(MAX(pub_id), 0) FROM publications").fetchone()[0] + 1
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            stats.records_read += 1
            try:
                pub = parse_record(json.loads(line), kind)
            except (json.JSONDecodeError, MalformedRecord) as exc:
                log.debug("line %d malformed: %s", lineno, exc)
                stats.malformed_skipped += 1
                continue
            sid = pub.source_ids[kind.value]
            dup = conn.execute(
                "SELECT 1 FROM source_ids WHERE kind = ? AND sid = ?", (kind.value, sid)
            ).fetchone()
            if dup is None and pub.doi is not None:
                dup = conn.execute("SELECT 1 FROM publications WHERE doi = ?", (pub.doi,)).fetchone()
            if dup is not None:
                stats.duplicates_skipped += 1
                continue
            pub.pub_id = next_id
            next_id += 1
            conn.execute(
                "INSERT INTO publications VALUES (?, ?, ?, ?, ?, ?, ?)",
                (pub.pub_id, pub.doi, pub.norm_title, pub.year, kind.value,
                 len(pub.references), json.dumps(pub.to_dict(), sort_keys=True)),
            )
            conn.execute("INSERT INTO source_ids VALUES (?, ?, ?)", (kind.value, sid, pub.pub_id))
            conn.executemany(
                "INSERT OR IGNORE INTO author_ids VALUES (?, ?)",
                [(aid, pub.pub_id) for aid in sorted(pub.author_ids)],
            )
            citing = f"{kind.value}:{sid}"
            for ref in pub.references:
                cited = reference_key(ref, kind)
                if cited == citing or cited == pub.doi:
                    continue
                cur = conn.execute(
                    "INSERT OR IGNORE INTO links VALUES (?, ?, ?)", (citing, cited, kind.value)
                )
                stats.links_stored += cur.rowcount
            stats.records_stored += 1
        return stats

    def _ingest_coci(self, fh) -> IngestStats:
        stats = IngestStats()
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"citing", "cited"} <= set(reader.fieldnames):
            raise ArgumentError("COCI file needs 'citing' and 'cited' columns")
        for row in reader:
            stats.records_read += 1
            citing = canonical_doi(row.get("citing"))
            cited = canonical_doi(row.get("cited"))
            if not citing or not cited or not looks_like_doi(citing) \
                    or not looks_like_doi(cited) or citing == cited:
                stats.malformed_skipped += 1
                continue
            cur = self.conn.execute(
                "INSERT OR IGNORE INTO links VALUES (?, ?, ?)", (citing, cited, SourceKind.COCI.value)
            )
            if cur.rowcount:
                stats.records_stored += 1
                stats.links_stored += 1
            else:
                stats.duplicates_skipped += 1
        return stats

    # -- lookups -----------------------------------------------------------
    def _load(self, rows: Iterable[tuple]) -> list[Publication]:
        return [Publication.from_dict(json.loads(r[0])) for r in rows]

    def query(self, key_kind: KeyKind | str, key, origin: SourceKind | str | None = None) -> list[Publication]:
        """All publications matching ``key``, ordered by pub_id.

        ``TITLE_YEAR`` keys are ``(title, year)`` pairs; ``SOURCE_ID`` keys are
        either a bare native id (any source) or a ``(kind, id)`` pair.
        ``origin`` restricts matches to records ingested from one source.
        """
        key_kind = KeyKind(key_kind)
        conn = self.conn
        if key is None or key == "" or key == ():
            raise ArgumentError("empty lookup key")
        if key_kind is KeyKind.DOI:
            sql = "SELECT p.data FROM publications p WHERE p.doi = ?"
            args: tuple = (canonical_doi(key),)
        elif key_kind is KeyKind.TITLE_YEAR:
            title, year = key
            sql = "SELECT p.data FROM publications p WHERE p.norm_title = ? AND p.year IS ?"
            args = (normalize_title(title), year)
        elif key_kind is KeyKind.AUTHOR_ID:
            sql = ("SELECT p.data FROM author_ids a JOIN publications p USING (pub_id) "
                   "WHERE a.author_id = ?")
            args = (str(key),)
        else:
            if isinstance(key, tuple):
                kind, sid = key
                sql = ("SELECT p.data FROM source_ids s JOIN publications p USING (pub_id) "
                       "WHERE s.kind = ? AND s.sid = ?")
                args = (SourceKind(kind).value, str(sid))
            else:
                sql = ("SELECT p.data FROM source_ids s JOIN publications p USING (pub_id) "
                       "WHERE s.sid = ?")
                args = (str(key),)
        if origin is not None:
            sql += " AND p.origin = ?"
            args += (SourceKind(origin).value,)
        sql += " ORDER BY p.pub_id"
        return self._load(conn.execute(sql, args))

    def get(self, pub_id: int) -> Publication:
        row = self.conn.execute("SELECT data FROM publications WHERE pub_id = ?", (pub_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"no publication with pub_id {pub_id}")
        return self._load([row])[0]

    def lookup(self, key: PubKey) -> Publication:
        """Fetch by pub_id or DOI."""
        if isinstance(key, int):
            return self.get(key)
        found = self.query(KeyKind.DOI, key)
        if not found:
            raise NotFoundError(f"no publication with DOI {key!r}")
        return found[0]

    def resolve_ref(self, ref: str) -> int | None:
        """pub_id holding a link reference string, if any."""
        if looks_like_doi(ref):
            row = self.conn.execute("SELECT pub_id FROM publications WHERE doi = ?", (ref,)).fetchone()
        else:
            kind, _, sid = ref.partition(":")
            row = self.conn.execute(
                "SELECT pub_id FROM source_ids WHERE kind = ? AND sid = ?", (kind, sid)
            ).fetchone()
        return row[0] if row else None

    def citation_neighbors(self, pub: PubKey | Publication) -> Neighbors:
        """Cited and citing publications, merged over every source.

        Neighbors with stored metadata are returned as pub_ids; the rest keep
        their reference string.  Both lists are de-duplicated and sorted with
        :func:`key_sort`.
        """
        if not isinstance(pub, Publication):
            pub = self.lookup(pub)
        refs = pub.refs()
        marks = ",".join("?" * len(refs))
        conn = self.conn
        cited = conn.execute(f"SELECT cited FROM links WHERE citing IN ({marks})", refs).fetchall()
        citing = conn.execute(f"SELECT citing FROM links WHERE cited IN ({marks})", refs).fetchall()
        return Neighbors(
            cited=self._resolve_keys((r[0] for r in cited), pub.pub_id),
            citing=self._resolve_keys((r[0] for r in citing), pub.pub_id),
        )

    def _resolve_keys(self, refs: Iterator[str], own_id: int | None) -> tuple[PubKey, ...]:
        keys: set[PubKey] = set()
        for ref in refs:
            pid = self.resolve_ref(ref)
            if pid is not None:
                if pid != own_id:
                    keys.add(pid)
            else:
                keys.add(ref)
        return tuple(sorted(keys, key=key_sort))

    # -- bulk views --------------------------------------------------------
    def publications(self) -> Iterator[Publication]:
        for row in self.conn.execute("SELECT data FROM publications ORDER BY pub_id"):
            yield Publication.from_dict(json.loads(row[0]))

    def links(self) -> list[tuple[str, str]]:
        return [tuple(r) for r in self.conn.execute("SELECT citing, cited FROM links ORDER BY citing, cited")]

    def count(self) -> int:
        return self.conn.execute("SELECT COUNT(*) FROM publications").fetchone()[0]
