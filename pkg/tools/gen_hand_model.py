"""Regenerate the committed hand model file from the canonical generator.

Run from the repo root:

    python3 tools/gen_hand_model.py

The committed JSON is the source of truth at runtime; this script exists so
the file can be rebuilt from scratch when the generator changes.
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from handsmooth.hand_model import DEFAULT_MODEL, default_model_dict  # noqa: E402


def main():
    out = (
        pathlib.Path(__file__).resolve().parents[1]
        / "src"
        / "handsmooth"
        / "data"
        / f"{DEFAULT_MODEL}.json"
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(default_model_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
