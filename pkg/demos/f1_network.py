"""
One dossier, step by step
=========================

Load a tiny exercise into a fresh store, resolve the candidate's CV against
it and count the eleven network metrics.
"""
import tempfile
from pathlib import Path

from citeassess import CorpusStore, Resolver, build_network, compute_metrics, load_roster

data = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "f1"
workdir = tempfile.mkdtemp()

# ingest the MAG-style records, then the DOI-to-DOI link table
store = CorpusStore(workdir).open()
print(store.ingest_dump(data / "mag.jsonl", "MAG"))
print(store.ingest_dump(data / "coci.csv", "COCI"))

# one candidate, two commission members
candidates, commission = load_roster(data / "roster.json")
dossier = Resolver(store).build_dossier(candidates[0], commission)
for r in dossier.resolutions:
    print(r.entry_id, r.outcome.value, r.method.value if r.method else "-")
print("section", dossier.section.value)

network = build_network(dossier)
for node in network.nodes:
    print(node.key, node.node_class.value, node.kind.value)

for name, value in compute_metrics(dossier, network).as_dict().items():
    print(f"{name:12s} {value}")
store.close()
