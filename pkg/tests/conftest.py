from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import strategies as st

from tracesolve.instance import load_instance
from tracesolve.trace_core import ResourceAlphabet

DATA = Path(__file__).resolve().parent / "data"
CORPUS = DATA / "corpus"


def corpus_files():
    return sorted(CORPUS.glob("*.json"))


def corpus(name):
    return load_instance(CORPUS / f"{name}.json")


@pytest.fixture
def load():
    return corpus


@st.composite
def alphabets(draw, max_resources=3, max_pairs=3):
    """A random resource alphabet (no self-involuting letters)."""
    n_res = draw(st.integers(1, max_resources))
    alpha = ResourceAlphabet([f"r{i}" for i in range(n_res)])
    full = (1 << n_res) - 1
    for i in range(draw(st.integers(1, max_pairs))):
        rho = draw(st.integers(1, full))
        alpha.add_pair(chr(ord("a") + i), chr(ord("A") + i), rho)
    return alpha


@st.composite
def alphabet_and_words(draw, count=2, max_len=6):
    alpha = draw(alphabets())
    letters = alpha.constants()
    words = [tuple(draw(st.lists(st.sampled_from(letters), max_size=max_len)))
             for _ in range(count)]
    return alpha, words
