"""
Equalized / reference grid pairs on disk (.npz), handed from ``receive`` to ``measure``.
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from nr_fso_bench.common.bench_exception import FormatError
from nr_fso_bench.rx.equalizer import EqualizedGrid
from nr_fso_bench.waveform.test_models import ResourceGrid

_KEYS = ("eq_symbols", "eq_mask", "ref_symbols", "ref_role", "ref_reference", "modulation", "symbols_per_slot")


def save_grids(path: Union[str, Path], eq: EqualizedGrid, reference: ResourceGrid, test_model: Optional[str] = None,
               seed: Optional[int] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    info = {}
    if test_model is not None:
        info["test_model"] = np.array(test_model)
    if seed is not None:
        info["seed"] = np.array(int(seed))
    with path.open("wb") as f:
        np.savez_compressed(f, eq_symbols=eq.symbols, eq_mask=eq.mask, ref_symbols=reference.symbols,
                            ref_role=reference.role, ref_reference=reference.reference,
                            modulation=np.array(reference.modulation), symbols_per_slot=np.array(eq.symbols_per_slot),
                            **info)
    return path


def load_grid_info(path: Union[str, Path]) -> Dict[str, Any]:
    """test_model and seed recorded by ``receive``, when present."""
    try:
        with np.load(Path(path), allow_pickle=False) as z:
            info: Dict[str, Any] = {}
            if "test_model" in z.files:
                info["test_model"] = str(z["test_model"])
            if "seed" in z.files:
                info["seed"] = int(z["seed"])
    except (OSError, ValueError) as e:
        raise FormatError(f"Cannot read grid file {path}: {e}")
    return info


def load_grids(path: Union[str, Path]) -> Tuple[EqualizedGrid, ResourceGrid]:
    try:
        with np.load(Path(path), allow_pickle=False) as z:
            missing = [k for k in _KEYS if k not in z.files]
            if missing:
                raise FormatError(f"{path}: grid file lacks {missing}")
            sps = int(z["symbols_per_slot"])
            eq = EqualizedGrid(symbols=z["eq_symbols"], mask=z["eq_mask"], symbols_per_slot=sps)
            ref = ResourceGrid(symbols=z["ref_symbols"], role=z["ref_role"], reference=z["ref_reference"],
                               modulation=str(z["modulation"]), symbols_per_slot=sps)
    except (OSError, ValueError) as e:
        raise FormatError(f"Cannot read grid file {path}: {e}")
    return eq, ref
