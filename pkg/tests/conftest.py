import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rbir import pipeline, synth

CORPUS_SIZE = 64


# leaves sized to hold a whole 20-image class: the cover test prunes any
# subtree missing one query bit, and the width-1 fallback beam recovers only
# a single path, so same-class neighbours must colocate for search recall
NODE_MIN, NODE_MAX = 20, 40


def _build(tmp_root: Path, classes: int, per_class: int):
    corpus = tmp_root / f"corpus_{classes}x{per_class}"
    synth.make_corpus(corpus, classes, per_class, CORPUS_SIZE)
    prefix = tmp_root / f"idx_{classes}x{per_class}"
    config = pipeline.BuildConfig(size=CORPUS_SIZE, node_min=NODE_MIN,
                                  node_max=NODE_MAX)
    pipeline.build_index(corpus, prefix, config)
    return corpus, prefix


@pytest.fixture(scope="session")
def corpus200(tmp_path_factory):
    """10 classes x 20 images plus its index: the main evaluation corpus."""
    root = tmp_path_factory.mktemp("c200")
    corpus, prefix = _build(root, 10, 20)
    return {"dir": corpus, "prefix": prefix,
            "index": pipeline.load_index(prefix)}


@pytest.fixture(scope="session")
def corpus100(tmp_path_factory):
    """10 classes x 10 images plus its index: the retrieval-quality corpus."""
    root = tmp_path_factory.mktemp("c100")
    corpus, prefix = _build(root, 10, 10)
    return {"dir": corpus, "prefix": prefix,
            "index": pipeline.load_index(prefix)}


@pytest.fixture(scope="session")
def scaling_indexes(tmp_path_factory, corpus100):
    """Indexes at n = 100, 400, 1600 images for the cost-scaling checks."""
    root = tmp_path_factory.mktemp("scaling")
    out = {100: corpus100["index"]}
    for classes, per_class in ((20, 20), (40, 40)):
        _, prefix = _build(root, classes, per_class)
        out[classes * per_class] = pipeline.load_index(prefix)
    return out
