"""The bundled GCDC cooperative-driving reference model and its goldens."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from stpa.dsl import parse
from stpa.model import SafetyModel

CORPUS_DIR = Path(str(resources.files("stpa") / "corpus"))
MODEL_PATH = CORPUS_DIR / "gcdc.stpa"
GOLDEN_PATHS = {
    "md": CORPUS_DIR / "golden" / "report.md",
    "json": CORPUS_DIR / "golden" / "report.json",
    "csv": CORPUS_DIR / "golden" / "matrix.csv",
}
# Loop endpoints outside the cooperative module; not architecture components.
BOUNDARY_COMPONENTS = ("Driver", "EgoVehicle")


@dataclass(frozen=True)
class CorpusManifest:
    model_path: Path = MODEL_PATH
    golden_paths: dict[str, Path] = field(default_factory=lambda: dict(GOLDEN_PATHS))
    expected_counts: dict[str, int] = field(
        default_factory=lambda: {"accidents": 3, "hazards": 7, "top_components": 7, "loops": 9}
    )


def load_corpus() -> SafetyModel:
    return parse(MODEL_PATH.read_text(encoding="utf-8"), file=str(MODEL_PATH))


def top_components(model: SafetyModel) -> list[str]:
    return [c.id for c in model.components if c.id not in BOUNDARY_COMPONENTS]
