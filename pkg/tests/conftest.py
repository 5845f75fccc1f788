import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from selecteval.corpus import Repository, Utterance, load_stopwords


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture(scope="session")
def synth():
    """Shared 600-question synthetic corpus (topics, repository, vectors)."""
    from synthetic import SyntheticCorpus

    return SyntheticCorpus(n_questions=600, seed=7)


@pytest.fixture
def toy_repository():
    # Three utterances share the content word "focus", two do not.
    texts = [
        "Do not lose your focus!",
        "But I do have ninja focus.",
        "Could he not focus on that?",
        "I like green tea.",
        "The train leaves at noon.",
    ]
    return Repository([Utterance(id=f"u{i:06d}", text=t) for i, t in enumerate(texts)])


def make_repository(texts):
    return Repository([Utterance(id=f"u{i:06d}", text=t) for i, t in enumerate(texts)])
