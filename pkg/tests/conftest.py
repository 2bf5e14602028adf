import json
from pathlib import Path

import pytest

from companysim.synth import make_synthetic_corpus

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def filings_manifest():
    manifest = json.loads((FIXTURES / "filings" / "manifest.json").read_text())
    texts = {
        name: (FIXTURES / "filings" / f"{name}.txt").read_text(encoding="utf-8")
        for name in manifest
    }
    return manifest, texts


@pytest.fixture(scope="session")
def small_corpus():
    # 48 companies, 4 per industry; big enough for splits and pair sampling.
    return make_synthetic_corpus(48, seed=11)
