import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antisocial.corpus import TokenSequence, normalize
from antisocial.labels import Label
from antisocial.lexicon import LexiconEntry, LexiconSet
from antisocial.matcher import MatcherError, PatternAutomaton, annotate, annotate_batch, compile


def naive_find(tokens, terms):
    tokens = list(tokens)
    hits = set()
    for term in terms:
        pat = term.split(" ")
        k = len(pat)
        if any(tokens[i : i + k] == pat for i in range(len(tokens) - k + 1)):
            hits.add(term)
    return sorted(hits)


def random_lexicon(rng, vocab, size, max_arity=3):
    terms = set()
    while len(terms) < size:
        terms.add(" ".join(rng.choice(vocab) for _ in range(rng.randint(1, max_arity))))
    return sorted(terms)


def random_docs(rng, vocab, terms, n):
    docs = []
    for _ in range(n):
        toks = [rng.choice(vocab) for _ in range(rng.randint(0, 25))]
        for _ in range(rng.choice([0, 0, 1, 2])):
            k = rng.randrange(len(toks) + 1)
            toks[k:k] = rng.choice(terms).split()
        docs.append(toks)
    return docs


def test_single_term():
    auto = compile(["kungflu"])
    assert auto.pattern_count == 1
    res = annotate(TokenSequence(("the", "kungflu", "is", "here")), auto)
    assert res.label is Label.ANTISOCIAL and res.matched_terms == {"kungflu"}


def test_token_boundary():
    res = annotate(normalize("so grateful"), compile(["rat"]))
    assert res.label is Label.NORMAL and res.matched_terms == frozenset()


def test_duplicates_collapse():
    assert compile(["a", "a", "b"]).pattern_count == 2
    lex = LexiconSet("x", {"a": LexiconEntry("a")})
    assert compile(lex).pattern_count == 1


def test_empty_lexicon_rejected():
    with pytest.raises(MatcherError):
        compile([])


def test_unnormalized_pattern_rejected():
    with pytest.raises(MatcherError):
        compile(["a  b"])


def test_hashtag_duality():
    auto = compile(["kungflu"])
    assert annotate(normalize("#KungFlu is here"), auto).matched_terms == {"kungflu"}
    auto = compile(["#kungflu"])
    assert annotate(normalize("#KungFlu is here"), auto).matched_terms == {"#kungflu"}
    assert annotate(normalize("kungflu is here"), auto).matched_terms == frozenset()


def test_overlapping_and_nested_terms(backend):
    terms = ["china", "china virus", "virus", "the china virus", "a b a", "b a b"]
    auto = PatternAutomaton(terms, backend=backend)
    for doc in (["the", "china", "virus"], ["a", "b", "a", "b", "a"], ["china", "the", "virus"], ["the", "china"]):
        assert auto.find(doc) == naive_find(doc, terms)


def test_fail_links_across_partial_matches(backend):
    terms = ["a a b", "a b c", "b c d", "c"]
    auto = PatternAutomaton(terms, backend=backend)
    doc = ["a", "a", "a", "b", "c", "d"]
    assert auto.find(doc) == naive_find(doc, terms) == ["a a b", "a b c", "b c d", "c"]


def test_unknown_tokens_and_empty_docs(backend):
    auto = PatternAutomaton(["x y"], backend=backend)
    assert auto.find([]) == []
    assert auto.find(["zzz", "x", "zzz", "y"]) == []


def test_500_term_fixture_equals_naive(backend):
    rng = random.Random(500)
    vocab = [f"t{i}" for i in range(400)]
    terms = random_lexicon(rng, vocab, 500)
    docs = random_docs(rng, vocab, terms, 2000)
    auto = PatternAutomaton(terms, backend=backend)
    assert auto.find_batch(docs) == [naive_find(d, terms) for d in docs]


def test_annotate_batch_keeps_ids():
    auto = compile(["a"])
    seqs = [TokenSequence(("a",), "1"), TokenSequence(("b",), "2")]
    out = annotate_batch(seqs, auto)
    assert [(r.source_id, r.label) for r in out] == [("1", Label.ANTISOCIAL), ("2", Label.NORMAL)]


def test_backends_agree():
    from antisocial._backend import available

    mods = list(available().values())
    rng = random.Random(3)
    vocab = [f"w{i}" for i in range(50)]
    terms = random_lexicon(rng, vocab, 80)
    docs = random_docs(rng, vocab, terms, 500)
    outs = [PatternAutomaton(terms, backend=m).find_batch(docs) for m in mods]
    assert all(o == outs[0] for o in outs)


_tok = st.sampled_from(["a", "b", "c", "d", "#a", "rat", "grateful"])
_term = st.lists(_tok, min_size=1, max_size=3).map(" ".join)


@settings(max_examples=300, deadline=None)
@given(st.lists(_term, min_size=1, max_size=12), st.lists(_tok, max_size=20))
def test_equivalent_to_naive_scan(terms, doc):
    assert compile(terms).find(doc) == naive_find(doc, set(terms))


@settings(max_examples=200, deadline=None)
@given(st.lists(_term, min_size=1, max_size=8), st.lists(_term, max_size=8), st.lists(_tok, max_size=20))
def test_bigger_lexicon_never_unflags(terms, extra, doc):
    small = annotate(TokenSequence(tuple(doc)), compile(terms))
    big = annotate(TokenSequence(tuple(doc)), compile(terms + extra))
    assert small.matched_terms <= big.matched_terms
    if small.label is Label.ANTISOCIAL:
        assert big.label is Label.ANTISOCIAL
