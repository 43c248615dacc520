"""Command-line entry points for every workflow.

Exit codes: 0 success, 1 domain error, 2 usage error. Every command takes
--config for a JSON config file; configuration precedence is
defaults < file < flags < environment (VTON_<SECTION>_<KEY>).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .config import ConfigError, resolve_config


@dataclass
class CommandSpec:
    """One subcommand: its flags, the mapping from flags to config keys, and
    the handler run against the resolved configuration."""

    name: str
    help: str
    configure: Callable[[argparse.ArgumentParser], None]
    run: Callable[[argparse.Namespace, dict], int]
    flag_map: dict[str, str] = field(default_factory=dict)  # args attr -> "section.key"


def _add_synth_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--size", type=int, help="image side in pixels")
    p.add_argument("--seed", type=int, help="generator seed")
    p.add_argument("--split-fraction", type=float, help="train fraction")


def _run_synth_data(args, cfg) -> int:
    from .data import synth_dataset

    d = cfg["data"]
    manifest = synth_dataset(
        args.out, n=d["n"], size=d["size"], seed=d["seed"], split_fraction=d["split_fraction"], label=d["label"]
    )
    print(json.dumps({"samples": len(manifest.samples), "root": manifest.root, "skipped": manifest.skipped}))
    return 0


def _add_augment(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset directory with a manifest")
    p.add_argument("--out", required=True, help="output directory for augmented pairs")
    p.add_argument("--copies", type=int, help="augmented copies per source pair")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")


def _run_augment(args, cfg) -> int:
    from .augment import AugmentConfig, augment_pair, sample_transform
    from .data import load_manifest, load_pair
    from .imgbuf import save_image, save_mask

    aug_cfg = AugmentConfig.from_dict(cfg["augment"])
    manifest = load_manifest(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for sid in manifest.ids():
        image, mask, target = load_pair(manifest, sid)
        for c in range(aug_cfg.copies):
            t = sample_transform(aug_cfg, seed=args.seed * 1_000_003 + count)
            warped_image, warped_mask = augment_pair(t, image, mask)
            save_image(out / f"{sid}_aug{c}.png", warped_image)
            save_mask(out / f"{sid}_aug{c}_mask.png", warped_mask)
            if target is not None:
                warped_target, _ = augment_pair(t, target, mask)
                save_image(out / f"{sid}_aug{c}_target.png", warped_target)
            count += 1
    print(json.dumps({"written": count, "out": str(out)}))
    return 0


def _add_train_seg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset directory with a manifest")
    p.add_argument("--out", help="checkpoint output path")
    p.add_argument("--bundle", help="bundle directory to install the checkpoint into")
    p.add_argument("--iterations", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--input-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--spec", choices=["small", "full"])
    p.add_argument("--history", help="write the loss history CSV here")


def _run_train_seg(args, cfg) -> int:
    from .data import load_manifest
    from .pipeline import init_bundle, set_bundle_segmentation
    from .segnet import SegTrainConfig, U2NetSpec, save_seg_checkpoint, train_segmentation

    s = cfg["seg"]
    spec = U2NetSpec.small() if s["spec"] == "small" else U2NetSpec.full()
    train_cfg = SegTrainConfig(
        lr=s["lr"],
        betas=(s["beta1"], s["beta2"]),
        eps=s["eps"],
        weight_decay=s["weight_decay"],
        input_size=s["input_size"],
        flip=s["flip"],
        crop=s["crop"],
        iterations=s["iterations"],
        batch_size=s["batch_size"],
        seed=s["seed"],
    )
    manifest = load_manifest(args.data)
    model, history = train_segmentation(manifest, spec, train_cfg)
    if args.out:
        save_seg_checkpoint(args.out, model, step=train_cfg.iterations)
    if args.bundle:
        root = init_bundle(args.bundle)
        save_seg_checkpoint(root / "segmentation.ckpt.npz", model, step=train_cfg.iterations)
        set_bundle_segmentation(root, "segmentation.ckpt.npz")
    if args.history:
        history.save_csv(args.history)
    final = history.rows[-1][1] if history.rows else None
    print(json.dumps({"iterations": train_cfg.iterations, "final_loss": final}))
    return 0


def _add_train_gan(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset directory with a manifest")
    p.add_argument("--out", help="checkpoint output path")
    p.add_argument("--bundle", help="bundle directory to install the garment into")
    p.add_argument("--garment", default="g1", help="garment id for the bundle entry")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--image-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--history", help="write the loss history CSV here")


def _run_train_gan(args, cfg) -> int:
    from .data import load_manifest
    from .pipeline import add_bundle_garment, init_bundle
    from .transnet import (
        DiscriminatorSpec,
        GanTrainConfig,
        GeneratorSpec,
        save_gan_checkpoint,
        train_translation,
    )

    g = cfg["gan"]
    gspec = GeneratorSpec(
        base_channels=g["base_channels"],
        global_downsamples=g["global_downsamples"],
        residual_blocks=g["residual_blocks"],
        enhancers=g["enhancers"],
    )
    dspec = DiscriminatorSpec(num_scales=g["num_scales"], layers=g["layers"], base_channels=g["d_base_channels"])
    train_cfg = GanTrainConfig(
        image_size=g["image_size"],
        batch_size=g["batch_size"],
        epochs=g["epochs"],
        lambda_fm=g["lambda_fm"],
        lambda_perc=g["lambda_perc"],
        g_lr=g["g_lr"],
        d_lr=g["d_lr"],
        flavor=g["flavor"],
        perceptual=g["perceptual"],
        seed=g["seed"],
    )
    manifest = load_manifest(args.data)
    generator, discriminator, history = train_translation(manifest, gspec, dspec, train_cfg)
    step = len(history.rows)
    if args.out:
        save_gan_checkpoint(args.out, generator, discriminator, gspec, dspec, step, image_size=train_cfg.image_size)
    if args.bundle:
        root = init_bundle(args.bundle)
        name = f"{args.garment}.ckpt.npz"
        save_gan_checkpoint(root / name, generator, discriminator, gspec, dspec, step, image_size=train_cfg.image_size)
        add_bundle_garment(root, args.garment, name)
    if args.history:
        history.save_csv(args.history)
    print(json.dumps({"steps": step, "d_loss": history.rows[-1][1] if history.rows else None}))
    return 0


def _add_eval(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pairs", required=True, help="directory with real/ and fake/ subdirectories of matching PNGs")
    p.add_argument("--embedder", default="randconv", help="embedding for FID/KID")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the JSON report here")


def _run_eval(args, cfg) -> int:
    import numpy as np

    from .imgbuf import load_image
    from .metrics import MS_SSIM_WEIGHTS, SsimConfig, embed, fid, kid, ms_ssim, ssim

    root = Path(args.pairs)
    real_dir, fake_dir = root / "real", root / "fake"
    if not real_dir.is_dir() or not fake_dir.is_dir():
        raise FileNotFoundError(f"{root} must contain real/ and fake/ subdirectories")
    names = sorted(p.name for p in real_dir.glob("*.png"))
    pairs = [(load_image(real_dir / n), load_image(fake_dir / n)) for n in names if (fake_dir / n).exists()]
    if not pairs:
        raise FileNotFoundError("no matching real/fake image pairs found")

    ssim_values = [ssim(a, b) for a, b in pairs]
    # use as many pyramid scales as the smallest image supports (up to 5)
    min_dim = min(min(a.shape[:2]) for a, _ in pairs)
    scales = 1
    while scales < 5 and min_dim >= 2**scales * 11:
        scales += 1
    weights = MS_SSIM_WEIGHTS[:scales]
    ms_cfg = SsimConfig(ms_weights=tuple(w / sum(weights) for w in weights))
    ms_values = [ms_ssim(a, b, ms_cfg) for a, b in pairs]

    real_set = embed([a for a, _ in pairs], args.embedder)
    fake_set = embed([b for _, b in pairs], args.embedder)
    report = {
        "ssim": float(np.mean(ssim_values)),
        "ms_ssim": float(np.mean(ms_values)),
        "ms_ssim_scales": scales,
        "fid": fid(real_set, fake_set),
        "kid": kid(real_set, fake_set, seed=args.seed),
        "n_pairs": len(pairs),
        "embedder_id": args.embedder,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text)
    return 0


def _add_tryon(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bundle", required=True, help="bundle directory")
    p.add_argument("--image", required=True, help="input image (PNG/JPEG)")
    p.add_argument("--garment", required=True, help="garment id")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--threshold", type=float)
    p.add_argument("--feather", type=float)


def _run_tryon(args, cfg) -> int:
    from .detect import DetectorConfig
    from .imgbuf import load_image, save_image
    from .pipeline import PipelineConfig, load_bundle, tryon

    pl = cfg["pipeline"]
    pcfg = PipelineConfig(
        detect=DetectorConfig(**cfg["detect"]),
        threshold=pl["threshold"],
        feather=pl["feather"],
        margin=pl["margin"],
        fallback=pl["fallback"],
    )
    bundle = load_bundle(args.bundle)
    result = tryon(load_image(args.image), args.garment, bundle, pcfg)
    save_image(args.out, result.output)
    print(json.dumps({"out": args.out, "persons": len(result.persons)}))
    return 0


def _add_serve(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bundle", required=True, help="bundle directory")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--workers", type=int)


def _run_serve(args, cfg) -> int:
    import uvicorn

    from .server import create_app

    s = cfg["serve"]
    app = create_app(args.bundle, cfg)
    uvicorn.run(app, host=s["host"], port=s["port"])
    return 0


COMMANDS = [
    CommandSpec(
        "synth-data",
        "generate a deterministic synthetic dataset",
        _add_synth_data,
        _run_synth_data,
        flag_map={"n": "data.n", "size": "data.size", "seed": "data.seed", "split_fraction": "data.split_fraction"},
    ),
    CommandSpec(
        "augment",
        "write augmented copies of every pair in a dataset",
        _add_augment,
        _run_augment,
        flag_map={"copies": "augment.copies"},
    ),
    CommandSpec(
        "train-seg",
        "train the body-region segmentation network",
        _add_train_seg,
        _run_train_seg,
        flag_map={
            "iterations": "seg.iterations",
            "batch_size": "seg.batch_size",
            "input_size": "seg.input_size",
            "seed": "seg.seed",
            "spec": "seg.spec",
        },
    ),
    CommandSpec(
        "train-gan",
        "train the mask-to-cloth translation network",
        _add_train_gan,
        _run_train_gan,
        flag_map={
            "epochs": "gan.epochs",
            "batch_size": "gan.batch_size",
            "image_size": "gan.image_size",
            "seed": "gan.seed",
        },
    ),
    CommandSpec("eval", "compute SSIM/MS-SSIM/FID/KID over an image-pair directory", _add_eval, _run_eval),
    CommandSpec(
        "tryon",
        "run the full try-on pipeline on one image",
        _add_tryon,
        _run_tryon,
        flag_map={"threshold": "pipeline.threshold", "feather": "pipeline.feather"},
    ),
    CommandSpec(
        "serve",
        "start the HTTP try-on service",
        _add_serve,
        _run_serve,
        flag_map={"host": "serve.host", "port": "serve.port", "workers": "serve.workers"},
    ),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vton", description="virtual try-on toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command.name, help=command.help)
        p.add_argument("--config", help="JSON config file")
        command.configure(p)
        p.set_defaults(_spec=command)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    spec: CommandSpec = args._spec
    flag_overrides = {
        dotted: getattr(args, attr) for attr, dotted in spec.flag_map.items() if getattr(args, attr, None) is not None
    }
    try:
        cfg = resolve_config(args.config, flag_overrides)
        return spec.run(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SystemExit, KeyboardInterrupt):
        raise
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
