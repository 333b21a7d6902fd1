"""Command line entry point: ``hypcomp <experiment> [options]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import HypcompError
from .experiments import EXPERIMENTS, emit, parse_config, run


def _model(text: str) -> dict:
    """``F2``, ``F3`` or ``F2:1,2`` (rank, then optional edge lengths)."""
    head, _, tail = text.partition(":")
    if not head.upper().startswith("F"):
        raise argparse.ArgumentTypeError(f"model must look like F2 or F2:1,2, got {text!r}")
    out = {"rank": int(head[1:])}
    if tail:
        out["lengths"] = tail
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypcomp", description=__doc__)
    p.add_argument("experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--config", type=Path, help="key=value or JSON file; overrides flags")
    p.add_argument("--out", type=Path, help="write here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--model", type=_model, default=None, help="F2 (default) or F2:1,2")
    p.add_argument("--seed", type=int)
    p.add_argument("--s", dest="s")
    p.add_argument("--s-grid", dest="s_grid", help="lo:hi:step or a comma list")
    p.add_argument("--depth")
    p.add_argument("--t-range", dest="t_range", help="lo:hi or a comma list")
    p.add_argument("--Lmax", dest="Lmax")
    p.add_argument("--L", dest="L")
    p.add_argument("--tol")
    p.add_argument("--timing", action="store_true", help="include wall-clock time (JSON only)")
    p.add_argument("--matrix", type=Path,
                   help="gram only: write the Gram matrix at the largest depth and first s as CSV")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {"experiment": args.experiment, "format": args.format, "seed": args.seed}
    flags.update(args.model or {})
    for key in ("s", "s_grid", "depth", "t_range", "Lmax", "L", "tol"):
        flags[key] = getattr(args, key)
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, flags)
    except (HypcompError, OSError) as exc:
        print(f"hypcomp: {exc}", file=sys.stderr)
        return 2
    report = run(cfg)
    fmt = cfg.format
    out = emit(report, fmt, include_timing=args.timing and fmt == "json")
    target = args.out or (Path(cfg.out) if cfg.out else None)
    if target:
        target.write_text(out)
    else:
        sys.stdout.write(out)
    if args.matrix and cfg.experiment == "gram" and report.error is None:
        _dump_matrix(cfg, args.matrix)
    if report.error:
        print(f"hypcomp: {report.error}", file=sys.stderr)
    return 0 if report.passed else 1


def _dump_matrix(cfg, path: Path) -> None:
    import numpy as np

    from .conformal_density import Density
    from .kernel_ops import gram_matrix
    from .tree_geometry import all_cylinders

    depth = cfg.get("depth", 4)
    s = cfg.get("s_grid", [0.75])[0]
    d = Density(cfg.model())
    g = gram_matrix(depth, s, d)
    labels = [c.label for c in all_cylinders(cfg.rank, depth)]
    rows = [",".join(["", *labels])]
    rows += [",".join([lab, *(f"{v:.9g}" for v in row)]) for lab, row in zip(labels, g)]
    path.write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    sys.exit(main())
