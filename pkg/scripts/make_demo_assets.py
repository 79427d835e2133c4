"""Write the procedural asset bundle (bodies, garments, textures, room, configs)."""

import argparse

from medsynth.procedural import write_demo_assets


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=896, help="frame size written into the configs")
    args = p.parse_args()
    for key, path in sorted(write_demo_assets(args.out, seed=args.seed, image_size=(args.size, args.size)).items()):
        print(f"{key}: {path}")


if __name__ == "__main__":
    main()
