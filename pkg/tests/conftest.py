import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from isp import build_incidence, load_catalog, load_embeddings, tfidf_embed  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def movies():
    return load_catalog(DATA / "movies_1000.csv")


@pytest.fixture(scope="session")
def movies_incidence(movies):
    return build_incidence(movies, pair_categories=[("genre", "language")])


@pytest.fixture(scope="session")
def movies_embedding(movies):
    return tfidf_embed(movies, vocab_size=1000)


@pytest.fixture(scope="session")
def clustered():
    catalog = load_catalog(DATA / "clustered.csv")
    return catalog, load_embeddings(DATA / "clustered.emb", catalog)
