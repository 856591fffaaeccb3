"""
Reader for sampled profiles and wavefunctions.

Tables are whitespace-delimited text with two or three numeric columns:
x, real part, and optionally imaginary part. Lines starting with '#' are
comments. Parsing goes through pandas so stray blank lines, tabs and
scientific notation are handled the same way everywhere.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from .logging_utils import log_info


def load_complex_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """
    Load a (x, Re [, Im]) table.

    Returns:
        (x, values) with values complex.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If the file cannot be parsed, has the wrong number of
                    columns, or holds non-finite numbers.
    """
    path = Path(path)

    if not path.exists():
        raise FileNotFoundError(f"Table file not found: {path}")

    try:
        df = pd.read_csv(
            path,
            sep=r"\s+",
            comment="#",
            header=None,
            skip_blank_lines=True,
            engine="python",
        )
    except pd.errors.EmptyDataError:
        raise ValueError(f"Table file contains no data: {path}")
    except Exception as e:
        raise ValueError(f"Failed to read table file {path.name}: {e}")

    if df.shape[1] not in (2, 3):
        raise ValueError(
            f"Expected 2 or 3 columns (x, Re [, Im]) in {path.name}, found {df.shape[1]}"
        )

    try:
        data = df.astype(float).to_numpy()
    except ValueError as e:
        raise ValueError(f"Non-numeric entry in {path.name}: {e}")

    if not np.all(np.isfinite(data)):
        raise ValueError(f"Non-finite entry in {path.name}")

    x = data[:, 0]
    values = data[:, 1].astype(complex)
    if data.shape[1] == 3:
        values = values + 1j * data[:, 2]

    log_info(f"Loaded {len(x)} samples from: {path.name}")
    return x, values


def save_complex_table(path: str | Path, x: np.ndarray, values: np.ndarray, header: str = "") -> Path:
    """Write a three-column (x, Re, Im) table readable by load_complex_table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(values, dtype=complex)
    df = pd.DataFrame({"x": np.asarray(x, dtype=float), "re": values.real, "im": values.imag})
    with path.open("w", encoding="utf-8", newline="") as handle:
        for line in header.splitlines():
            handle.write(f"# {line}\n")
        df.to_csv(handle, sep=" ", header=False, index=False, float_format="%.17g")
    return path
