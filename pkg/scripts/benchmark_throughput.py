"""Time dataset generation for every demo config and report frames per second."""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from medsynth.assets import AssetLibrary
from medsynth.pipeline import generate
from medsynth.procedural import write_demo_assets
from medsynth.render import build_instances
from medsynth.scene import compose, load_config


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--assets", default=None, help="existing asset bundle (default: build one in a temp dir)")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(args.assets) if args.assets else Path(tmp) / "assets"
        if not args.assets:
            write_demo_assets(root)
        for name in ("dr_cad", "dr_scans", "sdr_cad", "sdr_scans"):
            config = load_config(root / "configs" / f"{name}.json")
            library = AssetLibrary(config)
            tris = [sum(len(i.mesh.triangles) for i in build_instances(compose(config, k, args.seed), library))
                    for k in range(5)]
            result = generate(config, Path(tmp) / name, args.count, args.seed, threads=args.threads)
            w, h = config.image_size
            print(f"{name:10s} {w}x{h}  ~{int(np.mean(tris)):6d} tris  "
                  f"{result.frames_per_second:6.2f} frames/s ({args.count} frames, {args.threads} threads)")


if __name__ == "__main__":
    main()
