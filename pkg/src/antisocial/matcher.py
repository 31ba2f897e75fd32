"""Token-level Aho-Corasick automaton for lexicon annotation.

Patterns are sequences of whole tokens, so a term can never fire inside a
longer token ("rat" does not match "grateful") and multi-token terms match
contiguous token runs.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .corpus import TokenSequence
from .labels import Label
from .lexicon import LexiconSet


class MatcherError(ValueError):
    pass


@dataclass(frozen=True)
class MatchResult:
    source_id: str | None
    matched_terms: frozenset[str]

    @property
    def label(self) -> Label:
        return Label.ANTISOCIAL if self.matched_terms else Label.NORMAL


class PatternAutomaton:
    def __init__(self, terms: Iterable[str], name: str = "", backend=None):
        patterns = sorted(set(terms))
        if not patterns:
            raise MatcherError("cannot compile an empty lexicon")
        if any(not p or p != p.strip() or "  " in p for p in patterns):
            raise MatcherError("patterns must be normalized, space-joined terms")
        self.name = name
        self.patterns: tuple[str, ...] = tuple(patterns)

        sym: dict[str, int] = {}
        goto: list[dict[int, int]] = [{}]
        terminal: list[list[int]] = [[]]
        for pid, term in enumerate(patterns):
            state = 0
            for tok in term.split(" "):
                s = sym.setdefault(tok, len(sym) + 1)
                nxt = goto[state].get(s)
                if nxt is None:
                    nxt = len(goto)
                    goto[state][s] = nxt
                    goto.append({})
                    terminal.append([])
                state = nxt
            terminal[state].append(pid)

        n_states = len(goto)
        fail = [0] * n_states
        outputs = [list(t) for t in terminal]
        queue = deque(goto[0].values())
        while queue:
            r = queue.popleft()
            for s, child in goto[r].items():
                queue.append(child)
                f = fail[r]
                while f and s not in goto[f]:
                    f = fail[f]
                fail[child] = goto[f].get(s, 0) if goto[f].get(s, 0) != child else 0
                outputs[child].extend(outputs[fail[child]])

        edge_start = np.zeros(n_states + 1, dtype=np.intc)
        edge_sym, edge_dst = [], []
        out_start = np.zeros(n_states + 1, dtype=np.intc)
        out_pat: list[int] = []
        for st in range(n_states):
            for s in sorted(goto[st]):
                edge_sym.append(s)
                edge_dst.append(goto[st][s])
            edge_start[st + 1] = len(edge_sym)
            out_pat.extend(sorted(set(outputs[st])))
            out_start[st + 1] = len(out_pat)

        self.n_states = n_states
        self._tables = (backend or kernels).ScanTables(
            sym,
            edge_start,
            np.asarray(edge_sym, dtype=np.intc),
            np.asarray(edge_dst, dtype=np.intc),
            np.asarray(fail, dtype=np.intc),
            out_start,
            np.asarray(out_pat, dtype=np.intc),
            len(patterns),
        )

    @property
    def pattern_count(self) -> int:
        return len(self.patterns)

    def find(self, tokens: Sequence[str]) -> list[str]:
        """Sorted distinct patterns occurring in ``tokens``."""
        pats = self.patterns
        return [pats[i] for i in self._tables.scan(tokens)]

    def find_batch(self, docs: Sequence[Sequence[str]]) -> list[list[str]]:
        pats = self.patterns
        return [[pats[i] for i in hit] for hit in self._tables.scan_batch(docs)]


def compile(lex: LexiconSet | Iterable[str], backend=None) -> PatternAutomaton:  # noqa: A001
    if isinstance(lex, LexiconSet):
        return PatternAutomaton(lex.entries.keys(), lex.name, backend)
    return PatternAutomaton(lex, backend=backend)


def annotate(tokens: TokenSequence, automaton: PatternAutomaton) -> MatchResult:
    return MatchResult(tokens.source_id, frozenset(automaton.find(tokens.tokens)))


def annotate_batch(seqs: Sequence[TokenSequence], automaton: PatternAutomaton) -> list[MatchResult]:
    hits = automaton.find_batch([s.tokens for s in seqs])
    return [MatchResult(s.source_id, frozenset(h)) for s, h in zip(seqs, hits)]
