"""Regenerate tests/golden/ from the CLI examples listed in README.md.

Run after an intentional change to report contents:

    python scripts/regen_golden.py
"""

import re
import shlex
import shutil
import sys
from pathlib import Path

from cmgkit import cli

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"


def documented_examples(readme: Path = ROOT / "README.md") -> list[str]:
    text = readme.read_text()
    block = re.search(r"<!-- golden:start -->(.*?)<!-- golden:end -->", text, re.S)
    if block is None:
        raise SystemExit("README.md has no golden example block")
    return [line.strip()[len("cmgkit "):] for line in block.group(1).splitlines()
            if line.strip().startswith("cmgkit ")]


def slug(args: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "-", args).strip("-")


def main() -> int:
    for args in documented_examples():
        out = GOLDEN / slug(args)
        shutil.rmtree(out, ignore_errors=True)
        code = cli.main(shlex.split(args) + ["--out-dir", str(out)])
        print(f"{code}  {args}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
