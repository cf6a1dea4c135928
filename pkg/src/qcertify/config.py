"""Calibrated constants, loaded from the checked-in ``defaults.json``.

Regenerate with ``qcertify calibrate --out src/qcertify/defaults.json``.
"""

from __future__ import annotations

import json
from importlib import resources


def load_defaults() -> dict:
    with resources.files(__package__).joinpath("defaults.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


DEFAULTS = load_defaults()

THRESHOLD_CONSTANT: float = float(DEFAULTS["threshold_constant"])
COPIES_CONSTANT: float = float(DEFAULTS["copies_constant"])
