"""Spectral stability report for trained checkpoints.

For every square weight tensor in a checkpoint this reports the largest
real part among the eigenvalues of its materialized block-circulant
matrix, and the largest absolute real part of the assembled conservative
system ``[[0, C], [-C^T, 0]]`` (which antisymmetry pins to zero up to
eigensolver noise).  Forward propagation through a weight is stable when
those real parts are non-positive and near zero.

Layers whose materialization would exceed the entry cap are skipped with
a notice row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import algebra
from .checkpoint import load_checkpoint
from .tensor import MATERIALIZE_CAP


@dataclass
class SpectrumRow:
    name: str
    max_real: float            # max Re(lambda) of bcirc(W)
    assembled_max_abs_real: float  # max |Re(lambda)| of the antisymmetric system
    skipped: bool = False
    note: str = ""


def spectral_report(tensors: dict[str, np.ndarray],
                    cap: int = MATERIALIZE_CAP) -> list[SpectrumRow]:
    """Analyze every square ``*.W`` tensor in ``tensors``."""
    rows = []
    for name, w in tensors.items():
        if not name.endswith(".W") or w.shape[0] != w.shape[1]:
            continue
        try:
            eigs = algebra.bcirc_spectrum(w, cap=cap)
            assembled = algebra.antisymmetric_spectrum(w, cap=cap)
        except ValueError as exc:
            rows.append(SpectrumRow(name, float("nan"), float("nan"),
                                    skipped=True, note=str(exc)))
            continue
        rows.append(SpectrumRow(
            name,
            float(eigs.real.max()),
            float(np.abs(assembled.real).max()),
        ))
    return rows


def diagnose_checkpoint(checkpoint_path, out_dir=None,
                        cap: int = MATERIALIZE_CAP,
                        render_figures: bool = True) -> list[SpectrumRow]:
    """Load a checkpoint, run the report, write CSV (+ figure), return rows."""
    tensors = load_checkpoint(checkpoint_path)
    rows = spectral_report(tensors, cap=cap)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "spectrum.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(("layer", "max_real", "assembled_max_abs_real",
                             "skipped", "note"))
            for r in rows:
                writer.writerow((r.name, repr(r.max_real),
                                 repr(r.assembled_max_abs_real),
                                 int(r.skipped), r.note))
        if render_figures:
            from . import figures
            eig_sets = {}
            for name, w in tensors.items():
                if name.endswith(".W") and w.shape[0] == w.shape[1]:
                    try:
                        eig_sets[name] = algebra.bcirc_spectrum(w, cap=cap)
                    except ValueError:
                        pass
            if eig_sets:
                figures.save_spectrum(eig_sets, out_dir / "spectrum.png")
    return rows


def format_report(rows: list[SpectrumRow]) -> str:
    lines = [f"{'layer':<24} {'max Re(lambda)':>16} {'assembled max|Re|':>18}"]
    for r in rows:
        if r.skipped:
            lines.append(f"{r.name:<24} {'skipped':>16} {'skipped':>18}  {r.note}")
        else:
            lines.append(
                f"{r.name:<24} {r.max_real:>16.6e} {r.assembled_max_abs_real:>18.6e}"
            )
    return "\n".join(lines)
