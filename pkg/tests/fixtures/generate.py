"""Regenerate the synthetic fixtures in this directory.

    python tests/fixtures/generate.py

Expected labels in ``e2e/expected.jsonl`` follow from construction: a post is
lexicon-positive iff a planted lexicon term was inserted, and its stub score
is fixed by the number of seed-list words inserted. Output is deterministic.
"""

from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

HERE = Path(__file__).parent

NEUTRAL = (
    "people stay home today news update cases rising hospital doctors nurses "
    "masks testing lockdown week city family friends school work online support "
    "vaccine research data report health local government schools open store "
    "shopping groceries weekend morning evening walk park safe together hope"
).split()
BLAME = "blame origin lab wuhan market started spread lies cover bats".split()
POLITICS = "president briefing press conference minister election policy response".split()
TOPIC = ["coronavirus", "COVID", "corona", "#COVID-19", "#coronavirus", "Coronavirus"]
TOXIC = ["idiot", "stupid", "pathetic", "trash", "liar"]

N_POSTS = 200
BASIC_TERMS = ["kungflu", "chinazi", "coochie", "china virus"]
EXPANDED_TERM = "wuflu"
FRAME = "blame the {} for all of this"
FILLER = [
    "all of this is too much",
    "nobody to blame but the weather",
    "for the love of god",
    "this is the new normal",
    "the best of us",
    "all of us for each other",
]


def _write_jsonl(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def lexicon_lists() -> None:
    """Three term lists, 120 lines in total, 12 terms shared between lists."""
    rng = random.Random(7)
    shared = [f"sharedterm{i:02d}" for i in range(12)]
    a = [f"alphaterm{i:02d}" for i in range(34)] + shared[:6]
    b = [f"betaterm{i:02d}" for i in range(34)] + shared[6:]
    c = [f"gammaterm{i:02d}" for i in range(28)] + shared
    for name, terms in (("hatebase_terms.txt", a), ("rsdb_terms.txt", b), ("wiki_slurs.txt", c)):
        rng.shuffle(terms)
        lines = ["# synthetic term list"] + [f"  {t.upper() if i % 5 == 0 else t}  " for i, t in enumerate(terms)]
        (HERE / "lexicon").mkdir(exist_ok=True)
        (HERE / "lexicon" / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


def e2e() -> None:
    rng = random.Random(2020)
    out = HERE / "e2e"
    out.mkdir(exist_ok=True)

    (out / "hatebase.txt").write_text(
        "# fixture slur list\nKungFlu\nchinazi\ncoochie\nyellow\nobscureterm\n", encoding="utf-8"
    )
    (out / "wiki_slurs.txt").write_text(
        "china virus\npancake\nloser\nrareslur\nkungflu\n", encoding="utf-8"
    )
    (out / "stoplist.txt").write_text("pancake\nyellow\n", encoding="utf-8")

    ref = []
    plan = {"kungflu": 8, "chinazi": 6, "coochie": 5, "china virus": 5, "loser": 4, "rareslur": 1, "obscureterm": 2}
    k = 0
    for term, n in plan.items():
        for _ in range(n):
            words = rng.sample(NEUTRAL, 6)
            words.insert(rng.randrange(len(words) + 1), term)
            # a repeat inside the same record must not count twice
            if k % 3 == 0:
                words.append(term)
            ref.append({"id": f"ref{k}", "text": " ".join(words), "label": "antisocial"})
            k += 1
    for _ in range(20):
        words = rng.sample(NEUTRAL, 7) + ["loser"]
        ref.append({"id": f"ref{k}", "text": " ".join(words), "label": "normal"})
        k += 1
    _write_jsonl(out / "reference.jsonl", ref)

    start = datetime(2020, 3, 17, tzinfo=timezone.utc)
    raw, expected = [], []
    spike_day = 20
    for i in range(N_POSTS):
        day = i % 30
        kind = rng.random()
        words = rng.sample(NEUTRAL, rng.randint(5, 8))
        lex_terms: list[str] = []
        if rng.random() < 0.5:
            words += rng.choice(FILLER).split()
        if day == spike_day or kind < 0.18:
            term = rng.choice(BASIC_TERMS)
            lex_terms.append(term)
            tagged = " " not in term and rng.random() < 0.2
            token = "#" + term if tagged else term
            if term == "kungflu":
                token = FRAME.format(token)
            words.insert(rng.randrange(len(words) + 1), token)
        elif kind < 0.30:
            # same frame as kungflu, so the two end up with near-identical contexts
            lex_terms.append(EXPANDED_TERM)
            words.insert(rng.randrange(len(words) + 1), FRAME.format(EXPANDED_TERM))
        elif kind < 0.40:
            words = rng.sample(POLITICS + BLAME, 3) + words[:4]
        hits = rng.choices([0, 1, 2, 3, 4], weights=[55, 15, 12, 12, 6])[0]
        for _ in range(hits):
            words.insert(rng.randrange(len(words) + 1), rng.choice(TOXIC))
        words.insert(rng.randrange(len(words) + 1), rng.choice(TOPIC))
        text = " ".join(words)
        if i % 17 == 0:
            text = "RT @someone: " + text
        if i % 23 == 0:
            text += " https://t.co/abc" + str(i)
        ts = start + timedelta(days=day, seconds=rng.randrange(86400))
        rec = {"id": f"t{i:03d}", "created_at": ts.strftime("%Y-%m-%dT%H:%M:%SZ"), "text": text}
        if i % 10 != 3:
            rec["lang"] = "en"
        else:
            # untagged posts rely on the frequent-word fallback
            rec["text"] = text = text + " and we have to stay at home now"
        if i % 17 == 0:
            rec["retweeted_status"] = {"id": "orig"}
        raw.append(rec)
        stub = min(1.0, round(0.1 + 0.2 * hits, 10))
        lex = "antisocial" if lex_terms else "normal"
        tox = "antisocial" if stub > 0.5 else "normal"
        expected.append(
            {
                "source_id": rec["id"],
                "planted_terms": lex_terms,
                "seed_hits": hits,
                "lexicon_label": lex,
                "toxicity_label": tox,
                "combined_label": "antisocial" if "antisocial" in (lex, tox) else "normal",
            }
        )
    dropped = [
        {"id": "x1", "created_at": "2020-03-20T10:00:00Z", "text": "El coronavirus llega a la ciudad", "lang": "es"},
        {"id": "x2", "created_at": "2020-03-20T11:00:00Z", "text": "Le coronavirus est partout", "lang": "fr"},
        {"id": "x3", "created_at": "2020-03-21T11:00:00Z", "text": "Nice weather for a walk today", "lang": "en"},
        {"id": "x4", "created_at": "2020-03-21T12:00:00Z", "text": "Corona beer sales are fine", "lang": "en"},
        {"id": "x5", "created_at": "2020-03-22T12:00:00Z", "text": "", "lang": "en"},
    ]
    lines = [json.dumps(r, sort_keys=True) for r in raw[: N_POSTS // 2]]
    lines += [json.dumps(r, sort_keys=True) for r in dropped]
    lines.append('{"id": "x6", "created_at": "2020-03-22T12:00:00Z", "text": "broken coronavirus')
    lines += [json.dumps(r, sort_keys=True) for r in raw[N_POSTS // 2 :]]
    (out / "tweets.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_jsonl(out / "expected.jsonl", expected)


def tokenizer_samples() -> None:
    rng = random.Random(50)
    pieces = NEUTRAL + BLAME + TOXIC + [
        "#ChineseVirus", "#COVID-19", "@USER", "@who", "https://t.co/xYz", "www.example.org/a?b=1",
        "RT", "don't", "U.S.", "#StayHome!!", "café", "Ünïcode", "3.5%", "(wow)", "...", "#1", "it's",
        "covid-19", "e-mail", "@", "#", "naïve", "snake_case", "ok?!",
    ]
    rows = []
    for i in range(50):
        words = [rng.choice(pieces) for _ in range(rng.randint(3, 12))]
        words = [w.upper() if rng.random() < 0.15 else w for w in words]
        rows.append({"id": f"tok{i}", "text": " ".join(words)})
    _write_jsonl(HERE / "tokenizer_samples.jsonl", rows)


def ingest_mixed() -> None:
    """200 lines mixing kept, off-topic, non-English, malformed and duplicate records."""
    rng = random.Random(200)
    lines = []
    for i in range(200):
        r = rng.random()
        ts = f"2020-04-{1 + i % 28:02d}T{i % 24:02d}:00:00Z"
        if r < 0.06:
            lines.append("{not json" + str(i))
            continue
        if r < 0.09:
            lines.append(json.dumps({"id": f"m{i}", "text": "coronavirus news"}))
            continue
        if r < 0.11:
            lines.append(json.dumps({"id": "m0", "created_at": ts, "text": "coronavirus dup id"}))
            continue
        topical = r < 0.75
        words = rng.sample(NEUTRAL, 6)
        if topical:
            words.insert(2, rng.choice(TOPIC + ["COVIDIOT", "Corona"]))
        rec = {"id": f"m{i}", "created_at": ts, "text": " ".join(words)}
        lang = rng.choice(["en", "en", "en", "en-gb", "es", None])
        if lang is None:
            if rng.random() < 0.5:
                rec["text"] = "la casa de mi familia coronavirus hoy"
        else:
            rec["lang"] = lang
        lines.append(json.dumps(rec))
    (HERE / "ingest_mixed.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    lexicon_lists()
    e2e()
    tokenizer_samples()
    ingest_mixed()
