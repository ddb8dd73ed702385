import pathlib

import pytest

from stokolmo import AnalysisBudget, classify, load_model

ROOT = pathlib.Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"


def model_path(name: str) -> str:
    return str(MODELS / f"{name}.json")


@pytest.fixture(scope="session")
def bundled():
    """name -> parsed model, for every bundled instance."""
    out = {}
    for p in sorted(MODELS.glob("*.json")):
        if p.stem.startswith("foodchain"):
            continue
        out[p.stem] = load_model(str(p))
    return out


# classification is deterministic, so verdicts are shared across the suite
_VERDICTS: dict = {}


@pytest.fixture(scope="session")
def verdict_of(bundled):
    def get(name: str):
        if name not in _VERDICTS:
            _VERDICTS[name] = classify(bundled[name], AnalysisBudget())
        return _VERDICTS[name]
    return get
