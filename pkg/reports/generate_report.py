"""Machine-readable outputs: ranking, explanation, bench, redundancy and axiom files.

Feature numbers are 1-based in every file. CSV files open with a
``# schema_version=1`` line; JSON documents carry ``"schema_version": 1``.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import pandas as pd

SCHEMA_VERSION = 1


@dataclass
class RunManifest:
    command: str
    space: Optional[dict] = None
    source: Dict[str, object] = field(default_factory=dict)
    config: Dict[str, object] = field(default_factory=dict)
    call_count: int = 0
    wall_time_s: Optional[float] = None

    def to_dict(self):
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "space": self.space,
            "source": self.source,
            "config": self.config,
            "call_count": self.call_count,
        }
        if self.wall_time_s is not None:
            manifest["wall_time_s"] = self.wall_time_s
        return manifest


def manifest_path(out):
    return f"{out}.manifest.json"


def _dumps(document):
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_json(path, document):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(_dumps(document))
    logging.info(f"Wrote {path}")


def write_csv(path, frame: pd.DataFrame, manifest: Optional[RunManifest] = None):
    """CSV with the schema line first; the manifest goes next to it"""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"# schema_version={SCHEMA_VERSION}\n")
        frame.to_csv(handle, index=False, lineterminator="\n")
    logging.info(f"Wrote {len(frame)} rows to {path}")
    if manifest is not None:
        write_json(manifest_path(path), manifest.to_dict())


def ranking_frame(ranking) -> pd.DataFrame:
    frame = ranking.to_frame()
    frame["i"] += 1
    frame["j"] += 1
    return frame


def write_ranking(path, ranking, manifest: RunManifest):
    write_csv(path, ranking_frame(ranking), manifest)


def explanation_document(explanation, manifest: RunManifest):
    document = explanation.to_dict()
    document["sets"] = [[i + 1 for i in fset] for fset in document["sets"]]
    document["schema_version"] = SCHEMA_VERSION
    document["manifest"] = manifest.to_dict()
    return document


def write_explanation(path, explanation, manifest: RunManifest):
    write_json(path, explanation_document(explanation, manifest))


def bench_frame(results: Dict[str, Dict[str, float]], functions: Sequence[str]) -> pd.DataFrame:
    """One row per context regime, one AUC column per function."""
    rows = [{"contexts": regime, **{name: scores[name] for name in functions}}
            for regime, scores in results.items()]
    return pd.DataFrame(rows, columns=["contexts", *functions])


def write_bench(path, results, functions, manifest: RunManifest):
    write_csv(path, bench_frame(results, functions), manifest)


def redundancy_frame(curves: Dict[str, pd.Series]) -> pd.DataFrame:
    frames = []
    for sequence, curve in curves.items():
        frame = curve.reset_index()
        frame.insert(0, "sequence", sequence)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)[["sequence", "n", "overlap_ratio"]]


def write_redundancy(path, curves, manifest: RunManifest):
    write_csv(path, redundancy_frame(curves), manifest)


def axioms_document(reports: List) -> List[dict]:
    return [dict(report.to_dict(), schema_version=SCHEMA_VERSION) for report in reports]


def dump_axioms(reports) -> str:
    return _dumps(axioms_document(reports))


def write_axioms(path, reports):
    write_json(path, axioms_document(reports))
