import os

import yaml

from cli.common import add_command, emit, size_pair
from services.synthetic import frame_rect_for, generate_corpus


def register(subparsers) -> None:
    parser = add_command(subparsers, "demo", "Generate the synthetic two-class ECG-sheet corpus")
    parser.add_argument("--out", required=True, help="Corpus directory (COVID/ and Normal/ are created)")
    parser.add_argument("--per-class", type=int, default=20)
    parser.add_argument("--size", type=size_pair, default=(320, 240), help="Sheet size WIDTHxHEIGHT")
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=run)


def run(args, cfg) -> int:
    width, height = args.size
    counts = generate_corpus(args.out, per_class=args.per_class, size=(width, height), seed=args.seed)

    # starting run config for this corpus: the frame position is known exactly
    suggested = {
        "seed": cfg.seed,
        "dataset": {"root": os.path.abspath(args.out), "labels": {"COVID": "COVID", "Normal": "NON_COVID"}},
        "preprocess": {"crop_rect": list(frame_rect_for(width, height)), "target": [224, 224]},
        "model": {"backbone": "VGG16"},
    }
    config_path = os.path.join(args.out, "run.yaml")
    with open(config_path, "w", encoding="utf-8") as f:
        f.write("# generated by `demo`; edit freely\n")
        yaml.safe_dump(suggested, f, sort_keys=False)

    emit(args, {"root": args.out, "counts": counts, "config": config_path},
         f"Wrote {sum(counts.values())} synthetic sheets to {args.out}; run config at {config_path}")
    return 0
