import pytest
from hypothesis import given
from hypothesis import strategies as st

from citeassess import CorpusStore, CvEntry, Dossier, Label, Method, Person, Resolver, Section, classify_section
from citeassess.errors import ArgumentError
from citeassess.resolver import Outcome, Role, load_roster

from conftest import FIXTURES, dossier_for
from oracles import oracle_section


def entry(title, year=None, doi=None, eid="e"):
    return CvEntry(eid, title, year, doi)


@pytest.mark.parametrize("e, method, sid", [
    (entry("whatever", doi="https://doi.org/10.1000/P"), Method.BY_DOI, ("MAG", "101")),
    (entry("Tidal patterns in shallow estuaries.", 2015), Method.BY_TITLE_YEAR, ("MAG", "101")),
    # two MAG records share the title; the one with more references wins
    (entry("shared title", 2015), Method.BY_TITLE_YEAR, ("MAG", "106")),
    (entry("Soil moisture drought and crop yield", 2020), Method.FALLBACK_OA, ("OA", "oa::1")),
    (entry("ETUDE DE CAS", 2019), Method.FALLBACK_CR, ("CR", "cr::1")),
])
def test_match_entry_order(corpus_store, e, method, sid):
    res = Resolver(corpus_store).match_entry(e)
    assert res.outcome is Outcome.MATCHED
    assert res.method is method
    kind, value = sid
    assert res.pub.source_ids[kind] == value


@pytest.mark.parametrize("e", [
    entry("Shared Title"),                 # title/year matching needs the year
    entry("Shared Title", 2014),
    entry("Nothing like this", 2015, doi="10.0/none"),
])
def test_unresolved(corpus_store, e):
    assert Resolver(corpus_store).match_entry(e).outcome is Outcome.UNRESOLVED


def test_cv_entry_validation():
    with pytest.raises(ArgumentError):
        CvEntry("x", "  ")
    assert CvEntry("x", "t", doi="DOI:10.1/AB").doi == "10.1/ab"


def test_f1_dossier(f1_dossier):
    d = f1_dossier
    assert d.section is Section.A
    assert (d.listed_count, d.matched_count, d.total_retrieved_count) == (3, 3, 3)
    assert [r.method for r in d.resolutions] == [Method.BY_DOI, Method.BY_TITLE_YEAR, Method.BY_TITLE_YEAR]
    assert d.coauthored_ids <= d.candidate_ids & d.commission_ids
    assert len(d.coauthored_ids) == 1
    assert d.candidate.author_ids == ("c1",)
    assert d.outcome_label is Label.PASS


def test_author_expansion_and_shared_member_pubs(tmp_path):
    d = dossier_for(tmp_path, "commission5")
    assert (d.listed_count, d.matched_count, d.total_retrieved_count) == (3, 3, 5)
    # members m1/m2 and m3/m4 share a paper each; the pooled set counts it once
    assert len(d.commission_ids) == 6
    assert len(d.commission) == 5
    assert all(len(set(m.author_ids)) == 1 for m in d.commission)
    assert d.coauthored_ids == frozenset()


def test_expansion_matches_unlisted_doi(tmp_path):
    # a CV line whose title is garbled but whose DOI belongs to an expanded record
    with CorpusStore(tmp_path) as s:
        s.ingest_dump(FIXTURES / "commission5" / "mag.jsonl", "MAG")
        person = Person("k", Role.CANDIDATE, [entry("Kim paper 0", 2010, eid="a"),
                                             entry("garbled", 2013, eid="b")], name="Kim Candidate")
        col = Resolver(s).collect(person)
        assert [r.outcome for r in col.resolutions] == [Outcome.MATCHED, Outcome.UNRESOLVED]
        assert len(col.pubs) == 5


def test_person_author_ids_rules(corpus_store):
    pubs = corpus_store.query("AUTHOR_ID", "a1")
    named = Person("p", Role.CANDIDATE, [], name="Dora Gamma")
    assert Resolver.person_author_ids(named, pubs) == ("a4",)
    anon = Person("p", Role.CANDIDATE, [])
    assert Resolver.person_author_ids(anon, pubs) == ("a1",)
    explicit = Person("p", Role.CANDIDATE, [], author_ids=("z", "z", "y"))
    assert Resolver.person_author_ids(explicit, pubs) == ("z", "y")


def test_empty_commission(corpus_store):
    with pytest.raises(ArgumentError):
        Resolver(corpus_store).build_dossier(Person("c", Role.CANDIDATE, []), [])


def test_dossier_round_trip(tmp_path, f1_dossier):
    path = tmp_path / "d.json"
    f1_dossier.save(path)
    back = Dossier.load(path)
    assert back.dumps() == f1_dossier.dumps()
    assert back.links == f1_dossier.links


def test_roster_split():
    cands, comm = load_roster(FIXTURES / "commission5" / "roster.json")
    assert [c.person_id for c in cands] == ["cand-kim"]
    assert len(comm) == 5
    assert cands[0].outcome is Label.FAIL


@pytest.mark.parametrize("listed, matched, total, section", [
    (20, 16, 16, "A"), (10, 7, 7, "A"), (40, 10, 30, "B"), (40, 10, 15, "C"),
    (0, 0, 0, "C"), (10, 6, 7, "B"), (10, 6, 6, "C"), (100, 16, 16, "A"), (100, 15, 15, "C"),
])
def test_section_table(listed, matched, total, section):
    assert classify_section(listed, matched, total).value == section


@pytest.mark.parametrize("bad", [(-1, 0, 0), (3, 4, 4), (5, 3, 2)])
def test_section_rejects_inconsistent(bad):
    with pytest.raises(ArgumentError):
        classify_section(*bad)


triples = st.integers(0, 200).flatmap(
    lambda listed: st.integers(0, listed).flatmap(
        lambda matched: st.tuples(st.just(listed), st.just(matched), st.integers(matched, 400))))


@given(triples)
def test_section_matches_oracle(t):
    assert classify_section(*t).value == oracle_section(*t)


@given(triples, st.integers(0, 5), st.integers(0, 5))
def test_section_monotone(t, dm, dt):
    listed, matched, total = t
    m2 = min(listed, matched + dm)
    t2 = max(total + dt, m2)
    assert classify_section(listed, m2, t2).value <= classify_section(listed, matched, total).value
