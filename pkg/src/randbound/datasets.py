"""Bundled example datasets.

``table1``: a 16-unit completely randomized experiment (8 treated, 8
control), the worked example used throughout the test suite.

``paired8``: a synthetic 8-block paired experiment (one treated and one
control unit per block) with vote-share-like outcomes in [0, 100].

Externally published datasets are not bundled; load your own CSV with the
same column layout (id, w, y, optional block) through the CLI or
``randbound.cli.ingest_csv``.

Run ``python -m randbound.datasets NAME`` to print a fixture's path.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def _path(name: str) -> Path:
    return Path(str(resources.files(__package__).joinpath(f"data/{name}")))


def table1_path() -> Path:
    return _path("table1.csv")


def paired8_path() -> Path:
    return _path("paired8.csv")


def load_table1():
    from .cli import ingest_csv

    return ingest_csv(table1_path())


def load_paired8():
    from .cli import ingest_csv

    return ingest_csv(paired8_path())


if __name__ == "__main__":
    import sys

    name = sys.argv[1] if len(sys.argv) > 1 else "table1"
    print({"table1": table1_path, "paired8": paired8_path}[name]())
