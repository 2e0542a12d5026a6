"""Run every subcommand once into a directory and collect its artifacts."""

import contextlib
import io
from pathlib import Path

from ddlsff.cli import main


def ok(*argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = main([str(a) for a in argv])
    assert code == 0, f"{argv} exited {code}"
    return out.getvalue()


def run_all(root, threads, seed=5, size=32):
    root = Path(root)
    g = ["--threads", threads, "--seed", seed]
    syn = root / "syn"
    man = syn / "manifest.json"
    ok(*g, "synth", "--h", size, "--w", size, "--s", 6, "--out", syn)
    (root / "kernels.txt").write_text(ok(*g, "kernels", "dump", "--r", 3, "--theta", 135))
    ok(*g, "fv", "--manifest", man, "--r", 4, "--cumulative", "--out", root / "fv")
    ok(*g, "depth", "--fv", root / "fv", "--out", root / "depth.pfm")
    ok(*g, "depth", "--manifest", man, "--r", 2, "--format", "png16", "--out", root / "depth.png")
    ok(*g, "aif", "--manifest", man, "--depth", root / "depth.pfm", "--out", root / "aif.png")
    ok(*g, "fmcurve", "--fv", root / "fv", "--px", "3,4", "--gt", syn / "gt.pfm", "--out", root / "curve.csv")
    ok(*g, "noise", "--manifest", man, "--kind", "gaussian", "--param", 1e-4, "--out", root / "noisy")
    ok(*g, "eval", "--pred", root / "depth.pfm", "--gt", syn / "gt.pfm", "--badpix-t", 0.5,
       "--unit", "index", "--out", root / "report.json")
    ok(*g, "refine", "--manifest", man, "--iters", 2, "--out", root / "refined.pfm",
       "--dump-intermediates", root / "iters")
    ok(*g, "pipeline", "--manifest", root / "noisy" / "manifest.json", "--r", 4, "--cumulative",
       "--eval", syn / "gt.pfm", "--out", root / "pipe")
    return root


def artifacts(root):
    """Relative path -> bytes for every file except provenance records."""
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "run.json"}
