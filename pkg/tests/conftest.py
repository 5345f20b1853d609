import random
from pathlib import Path

import pytest

from gaelforge.corpus import Document

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


def make_doc(text, doc_id="d0", source="src", lang="ga"):
    return Document(id=doc_id, source=source, lang=lang, text=text)


SYLLABLES = ["ba", "le", "án", "dú", "gha", "sí", "mo", "rá", "ceo",
             "lín", "tá", "se", "ór", "ui", "née", "cla", "ío", "dha"]


def irishish_words(rng, n):
    """Seeded gibberish with fadas; stands in for target-language text."""
    return [
        "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(1, 3)))
        for _ in range(n)
    ]


def irishish_corpus(seed, n_docs, words_per_doc=60, source="syn"):
    rng = random.Random(seed)
    return [
        Document(id=f"{source}-{i}", source=source, lang="ga",
                 text=" ".join(irishish_words(rng, words_per_doc)))
        for i in range(n_docs)
    ]
