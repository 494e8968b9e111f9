"""Synthetic assessment exercise: source dumps plus a roster with outcomes.

The generator plants the outcome in the candidate-commission relationship.
Each candidate gets an *affinity* in (0, 1); the higher it is, the more the
candidate cites commission work, shares references with the commission, is
co-cited with it, co-authors with members and is cited by them.  Candidates
with affinity >= 0.5 pass.  Productivity (publication counts by kind) is
drawn independently of affinity and carries no signal.

Publications are spread over the MAG/OA/CR dumps and a COCI link file the
way the real sources overlap: most records sit in MAG, a few only in OpenAIRE
or Crossref, and COCI repeats part of the DOI-to-DOI links while adding some
that no record carries.  The last two candidates are given poorly covered
CVs so the exercise contains B and C applications.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

_WORDS = (
    "adaptive analysis approach assessment bayesian bibliometric citation cognitive "
    "comparative computational data diffusion dynamic empirical evaluation evidence "
    "framework graph historical inference knowledge language learning linguistic "
    "markets measurement model network open optimal patterns peer portfolio "
    "probabilistic quantitative random review risk science semantic stochastic "
    "structure study survey systems theory towards variation"
).split()

_TYPES_OTHER = ("proceedings-article", "book-chapter", "posted-content", None)


@dataclass
class SynthConfig:
    seed: int = 0
    n_candidates: int = 20
    n_commission: int = 5
    n_background: int = 400
    member_pubs: int = 25
    candidate_pubs: tuple[int, int] = (18, 30)
    refs_per_pub: int = 6
    doi_rate: float = 0.85
    cv_doi_rate: float = 0.5
    oa_share: float = 0.05
    cr_share: float = 0.05
    coci_overlap: float = 0.6
    unlisted_per_candidate: int = 2
    dangling_links: int = 30

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        if "candidate_pubs" in known:
            known["candidate_pubs"] = tuple(known["candidate_pubs"])
        return cls(**known)


@dataclass
class _Pub:
    sid: str
    title: str
    year: int
    type: str | None
    authors: list[tuple[str, str]]
    refs: list[int] = field(default_factory=list)
    doi: str | None = None
    source: str = "MAG"


@dataclass
class SynthCorpus:
    files: dict[str, str]
    n_publications: int
    n_candidates: int
    n_commission: int
    affinities: dict[str, float]


class _Gen:
    def __init__(self, cfg: SynthConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.pubs: list[_Pub] = []
        self._titles: set[str] = set()

    def title(self) -> str:
        while True:
            words = self.rng.choice(_WORDS, size=int(self.rng.integers(4, 8)), replace=False)
            t = " ".join(words).capitalize()
            if t not in self._titles:
                self._titles.add(t)
                return t

    def kind(self, p_book=0.08, p_article=0.62) -> str | None:
        u = self.rng.random()
        if u < p_book:
            return str(self.rng.choice(["book", "monograph"]))
        if u < p_book + p_article:
            return "journal-article"
        return _TYPES_OTHER[int(self.rng.integers(len(_TYPES_OTHER)))]

    def new_pub(self, authors, year=None, kind=None) -> int:
        i = len(self.pubs)
        doi = f"10.5072/syn.{i:05d}" if self.rng.random() < self.cfg.doi_rate else None
        self.pubs.append(_Pub(
            sid=str(2_000_000 + i), title=self.title(),
            year=int(year if year is not None else self.rng.integers(2005, 2019)),
            type=kind if kind is not None else self.kind(), authors=list(authors), doi=doi))
        return i

    def pick(self, pool, k) -> list[int]:
        k = min(k, len(pool))
        return [int(x) for x in self.rng.choice(pool, size=k, replace=False)] if k else []


def _perturb_title(title: str, rng: np.random.Generator) -> str:
    u = rng.random()
    if u < 0.3:
        return title.upper()
    if u < 0.6:
        return title.replace(" ", ", ", 1) + "."
    return title


def generate(cfg: SynthConfig, out_dir: str | Path) -> SynthCorpus:
    """Write ``mag.jsonl``, ``oa.jsonl``, ``cr.jsonl``, ``coci.csv`` and ``roster.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = _Gen(cfg)
    rng = g.rng

    others = [(f"X{j:04d}", f"Other Author{j}") for j in range(300)]
    background = []
    for _ in range(cfg.n_background):
        i = g.new_pub([others[int(rng.integers(len(others)))]])
        g.pubs[i].refs = g.pick(background, int(rng.integers(0, 6)))
        background.append(i)
    half = cfg.n_background // 2
    core, periphery = background[:half], background[half:]

    members = [(f"M{m:03d}", f"Member{m} Commissario") for m in range(cfg.n_commission)]
    member_pubs: dict[int, list[int]] = {}
    comm_all = []
    for m, author in enumerate(members):
        member_pubs[m] = []
        for _ in range(cfg.member_pubs):
            i = g.new_pub([author, others[int(rng.integers(len(others)))]])
            g.pubs[i].refs = g.pick(core, cfg.refs_per_pub)
            member_pubs[m].append(i)
            comm_all.append(i)

    affinity = (np.arange(cfg.n_candidates) + 0.5) / cfg.n_candidates
    rng.shuffle(affinity)
    cands = [(f"C{c:03d}", f"Candidate{c} Aspirante") for c in range(cfg.n_candidates)]
    cand_pubs: dict[int, list[int]] = {}
    for c, author in enumerate(cands):
        a = float(affinity[c])
        lo, hi = cfg.candidate_pubs
        n_pubs = int(rng.integers(lo, hi + 1))
        if c == cfg.n_candidates - 2:
            n_pubs = 12
        elif c == cfg.n_candidates - 1:
            n_pubs = 10
        cand_pubs[c] = []
        for _ in range(n_pubs):
            authors = [author]
            if rng.random() < 0.25 * a:
                authors.append(members[int(rng.integers(len(members)))])
            else:
                authors.append(others[int(rng.integers(len(others)))])
            i = g.new_pub(authors)
            refs = []
            for _ in range(cfg.refs_per_pub):
                u = rng.random()
                if u < 0.3 * a:
                    refs.append(int(rng.choice(comm_all)))
                elif u < a:
                    refs.append(int(rng.choice(core)))
                else:
                    refs.append(int(rng.choice(periphery)))
            g.pubs[i].refs = sorted(set(refs))
            cand_pubs[c].append(i)
            # commission members citing the candidate
            if rng.random() < 0.4 * a:
                citer = int(rng.choice(comm_all))
                g.pubs[citer].refs.append(i)
        # third-party works citing candidate and commission together
        for _ in range(int(rng.poisson(6 * a))):
            k = g.new_pub([others[int(rng.integers(len(others)))]])
            g.pubs[k].refs = g.pick(cand_pubs[c], 1) + g.pick(comm_all, 2)
        for _ in range(int(rng.poisson(3))):
            k = g.new_pub([others[int(rng.integers(len(others)))]])
            g.pubs[k].refs = g.pick(cand_pubs[c], 1) + g.pick(periphery, 2)

    # spread candidate records over sources; everything else stays in MAG
    for c in cand_pubs:
        for i in cand_pubs[c]:
            u = rng.random()
            if u < cfg.oa_share:
                g.pubs[i].source = "OA"
            elif u < cfg.oa_share + cfg.cr_share:
                g.pubs[i].source = "CR"

    files = _write_dumps(g, out)
    roster = _roster(g, cfg, cands, members, cand_pubs, member_pubs, affinity)
    (out / "roster.json").write_text(json.dumps(roster, indent=1, ensure_ascii=False) + "\n",
                                     encoding="utf-8")
    files["roster"] = str(out / "roster.json")
    (out / "synth_config.json").write_text(json.dumps(asdict(cfg), indent=1) + "\n", encoding="utf-8")
    return SynthCorpus(
        files=files, n_publications=len(g.pubs), n_candidates=cfg.n_candidates,
        n_commission=cfg.n_commission,
        affinities={cands[c][0]: float(affinity[c]) for c in range(cfg.n_candidates)},
    )


def _write_dumps(g: _Gen, out: Path) -> dict[str, str]:
    cfg, rng = g.cfg, g.rng
    handles = {s: open(out / f"{s.lower()}.jsonl", "w", encoding="utf-8") for s in ("MAG", "OA", "CR")}
    coci_rows = []
    try:
        for p in g.pubs:
            native = p.source == "MAG"
            refs = []
            for r in sorted(set(p.refs)):
                target = g.pubs[r]
                both_doi = p.doi and target.doi
                if native and target.source == "MAG":
                    refs.append(target.sid)
                    if both_doi and rng.random() < cfg.coci_overlap:
                        coci_rows.append((p.doi, target.doi))
                elif both_doi:
                    coci_rows.append((p.doi, target.doi))
            rec = {
                "id": p.sid if native else f"{p.source.lower()}::{p.sid}",
                "doi": p.doi,
                "title": p.title,
                "year": p.year,
                "type": p.type,
                "authors": [{"id": aid if native else None, "name": name} for aid, name in p.authors],
                "references": refs,
                "source": p.source,
            }
            handles[p.source].write(json.dumps(rec, ensure_ascii=False) + "\n")
    finally:
        for h in handles.values():
            h.close()

    doi_pubs = [p for p in g.pubs if p.doi]
    for j in range(cfg.dangling_links):
        target = doi_pubs[int(rng.integers(len(doi_pubs)))]
        coci_rows.append((f"10.5072/ghost.{j:04d}", target.doi))
    with open(out / "coci.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["oci", "citing", "cited", "creation", "timespan"])
        for n, (a, b) in enumerate(coci_rows):
            w.writerow([f"0200{n:08d}", a, b, "", ""])
    files = {s: str(out / f"{s.lower()}.jsonl") for s in ("MAG", "OA", "CR")}
    files["COCI"] = str(out / "coci.csv")
    return files


def _roster(g, cfg, cands, members, cand_pubs, member_pubs, affinity) -> dict:
    rng = g.rng

    def cv(pub_ids, person, fakes):
        entries = []
        for n, i in enumerate(pub_ids):
            p = g.pubs[i]
            doi = p.doi if (p.doi and rng.random() < cfg.cv_doi_rate) else None
            entries.append({"entry_id": f"{person}-{n:03d}", "title": _perturb_title(p.title, rng),
                            "year": p.year, "doi": doi, "declared_kind": p.type})
        for k in range(fakes):
            entries.append({"entry_id": f"{person}-x{k:02d}", "title": f"Unindexed working paper {person} {k}",
                            "year": int(rng.integers(2005, 2019)), "doi": None, "declared_kind": None})
        return entries

    people = []
    for m, (aid, name) in enumerate(members):
        listed = member_pubs[m][: int(cfg.member_pubs * 0.8)]
        people.append({"person_id": f"member-{m:02d}", "role": "commission", "name": name,
                       "cv": cv(listed, f"member-{m:02d}", 0)})
    for c, (aid, name) in enumerate(cands):
        pubs = cand_pubs[c]
        # the unlisted tail is only reachable through author expansion
        listed = pubs[: max(1, len(pubs) - cfg.unlisted_per_candidate)]
        fakes = int(rng.poisson(1))
        if c == cfg.n_candidates - 2:
            fakes = 5   # 10 of 15 matched, 12 retrieved -> section B
        elif c == cfg.n_candidates - 1:
            listed, fakes = pubs[:5], 10   # 5 of 15 matched, 10 retrieved -> section C
        pid = f"cand-{c:02d}"
        people.append({"person_id": pid, "role": "candidate", "name": name,
                       "cv": cv(listed, pid, fakes),
                       "outcome": "pass" if affinity[c] >= 0.5 else "fail"})
    return {"exercise": f"synthetic-{cfg.seed}", "people": people}
