"""Independent reference encoder for the audit-ledger golden files.

Reads fixture_entries.json and writes golden_ledger.jsonl using only the
Python standard library. Run from this directory; the outputs are committed.
"""
import hashlib
import json

GENESIS = "0" * 64


def canonical(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def main():
    with open("fixture_entries.json", encoding="utf-8") as f:
        fixtures = json.load(f)
    prev = GENESIS
    lines = []
    for index, item in enumerate(fixtures):
        entry = {
            "index": index,
            "timestamp": item["timestamp"],
            "event_type": item["event_type"],
            "payload": item["payload"],
            "prev_hash": prev,
        }
        entry["entry_hash"] = hashlib.sha256(canonical(entry).encode("utf-8")).hexdigest()
        prev = entry["entry_hash"]
        lines.append(canonical(entry))
    with open("golden_ledger.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


if __name__ == "__main__":
    main()
