"""Command-line pipeline.

Subcommands: adc, preprocess, infer, segment, evaluate, tune, phantom,
pipeline. Every command writes its artifacts plus a machine-readable run
record ``run.json`` into its output directory. Subject manifests are JSON
``{"subjects": [{"id", "dwi", "adc", "pm"?, "gt"?, "pred"?,
"slice_labels"?}]}`` with paths resolved relative to the manifest file.

Exit codes: 0 success, 2 flag validation (argparse), 3 file errors,
4 data/module errors, 1 unexpected failure.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import cam, network, phantom, tuner
from .metrics import evaluate_subjects
from .overlay import overlay_slice, write_pgm
from .regiongrow import segment_subject
from .volume import (Volume3D, as_binary_mask, compute_adc, load_volume,
                     prepare_dual_input, resample_volume, save_volume)

EXIT_FILE_ERROR = 3
EXIT_DATA_ERROR = 4


def _load_manifest(path: str) -> list[dict]:
    with open(path) as f:
        doc = json.load(f)
    subjects = doc.get("subjects")
    if not isinstance(subjects, list) or not subjects:
        raise ValueError(f"manifest {path} has no subjects")
    base = os.path.dirname(os.path.abspath(path))
    resolved = []
    for s in subjects:
        entry = dict(s)
        if "id" not in entry:
            raise ValueError(f"manifest subject missing 'id': {entry}")
        for key in ("dwi", "adc", "pm", "gt", "pred", "slice_labels"):
            if key in entry and entry[key] is not None:
                entry[key] = os.path.join(base, entry[key])
        resolved.append(entry)
    return resolved


def _write_manifest(path: str, subjects: list[dict]) -> None:
    base = os.path.dirname(os.path.abspath(path))
    rel = []
    for s in subjects:
        entry = dict(s)
        for key in ("dwi", "adc", "pm", "gt", "pred", "slice_labels"):
            if key in entry and entry[key] is not None:
                entry[key] = os.path.relpath(entry[key], base)
        rel.append(entry)
    with open(path, "w") as f:
        json.dump({"subjects": rel}, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_run_record(out_dir: str, command: str, inputs: dict,
                      parameters: dict, outputs: list[str], wall: float) -> None:
    record = {
        "command": command,
        "inputs": inputs,
        "parameters": parameters,
        "outputs": sorted(outputs),
        "wall_time": wall,
    }
    with open(os.path.join(out_dir, "run.json"), "w") as f:
        json.dump(record, f, indent=2, sort_keys=True)
        f.write("\n")


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def cmd_adc(args) -> int:
    t0 = time.perf_counter()
    out = _ensure_out(args.out)
    s0 = load_volume(args.s0)
    s1 = load_volume(args.s1)
    adc = compute_adc(s0, s1, args.b0, args.b1)
    if args.adc_negate:
        adc = Volume3D(-adc.data, adc.spacing_mm)
    dst = os.path.join(out, "adc.mvol")
    save_volume(adc, dst)
    _write_run_record(out, "adc", {"s0": args.s0, "s1": args.s1},
                      {"b0": args.b0, "b1": args.b1, "negate": args.adc_negate},
                      [dst], time.perf_counter() - t0)
    return 0


def cmd_preprocess(args) -> int:
    t0 = time.perf_counter()
    out = _ensure_out(args.out)
    subjects = _load_manifest(args.manifest)
    target = (args.size, args.size)
    outputs = []
    emitted = []
    for s in subjects:
        entry = {"id": s["id"]}
        for key in ("dwi", "adc"):
            if key not in s:
                raise ValueError(f"subject {s['id']} missing {key!r} volume")
            vol = resample_volume(load_volume(s[key]), target)
            dst = os.path.join(out, f"{s['id']}_{key}.mvol")
            save_volume(vol, dst)
            entry[key] = dst
            outputs.append(dst)
        for key in ("gt", "slice_labels"):
            if key in s and s[key] is not None:
                entry[key] = s[key]
        emitted.append(entry)
    manifest_path = os.path.join(out, "manifest.json")
    _write_manifest(manifest_path, emitted)
    outputs.append(manifest_path)
    _write_run_record(out, "preprocess", {"manifest": args.manifest},
                      {"size": args.size}, outputs, time.perf_counter() - t0)
    return 0


def cmd_infer(args) -> int:
    t0 = time.perf_counter()
    out = _ensure_out(args.out)
    cfg = network.load_config(args.net_config)
    wb = network.load_weights(args.weights)
    wb.validate_for(cfg)
    subjects = _load_manifest(args.manifest)
    outputs = []
    emitted = []
    for s in subjects:
        dwi = load_volume(s["dwi"])
        adc = load_volume(s["adc"])
        if dwi.dims != adc.dims:
            raise ValueError(f"subject {s['id']}: dwi dims {dwi.dims} != adc {adc.dims}")
        if dwi.dims[1:] != cfg.input_dims:
            raise ValueError(
                f"subject {s['id']}: slice dims {dwi.dims[1:]} differ from "
                f"network input {cfg.input_dims}; run preprocess first"
            )
        pm = np.zeros(dwi.dims, dtype=np.float32)
        scores = {"y_main": [], "y_side": []}
        for z in range(dwi.dims[0]):
            x = prepare_dual_input(dwi.data[z], adc.data[z])
            pm[z], res = cam.pm_with_scores(x, cfg, wb)
            scores["y_main"].append(res.y_main)
            scores["y_side"].append(res.y_side)
        pm_path = os.path.join(out, f"{s['id']}_pm.mvol")
        save_volume(Volume3D(pm, dwi.spacing_mm), pm_path)
        score_path = os.path.join(out, f"{s['id']}_scores.json")
        with open(score_path, "w") as f:
            json.dump(scores, f, sort_keys=True)
            f.write("\n")
        outputs += [pm_path, score_path]
        entry = dict(s)
        entry["pm"] = pm_path
        emitted.append(entry)
    manifest_path = os.path.join(out, "manifest.json")
    _write_manifest(manifest_path, emitted)
    outputs.append(manifest_path)
    _write_run_record(out, "infer",
                      {"manifest": args.manifest, "net_config": args.net_config,
                       "weights": args.weights},
                      {}, outputs, time.perf_counter() - t0)
    return 0


def cmd_segment(args) -> int:
    t0 = time.perf_counter()
    out = _ensure_out(args.out)
    subjects = _load_manifest(args.manifest)
    outputs = []
    emitted = []
    for s in subjects:
        if "pm" not in s or s["pm"] is None:
            raise ValueError(f"subject {s['id']} has no probability map; run infer first")
        pm = load_volume(s["pm"])
        dwi = load_volume(s["dwi"])
        pred = segment_subject(pm, dwi, args.k, args.delta, args.seed,
                               args.connectivity_2d, args.scope)
        dst = os.path.join(out, f"{s['id']}_pred.mvol")
        save_volume(pred, dst)
        outputs.append(dst)
        if args.overlays:
            ov_dir = _ensure_out(os.path.join(out, "overlays"))
            for z in range(pred.dims[0]):
                if pred.data[z].any():
                    img = overlay_slice(dwi.data[z], pred.data[z])
                    ov_path = os.path.join(ov_dir, f"{s['id']}_z{z:02d}.pgm")
                    write_pgm(ov_path, img)
                    outputs.append(ov_path)
        entry = dict(s)
        entry["pred"] = dst
        emitted.append(entry)
    manifest_path = os.path.join(out, "manifest.json")
    _write_manifest(manifest_path, emitted)
    outputs.append(manifest_path)
    _write_run_record(out, "segment", {"manifest": args.manifest},
                      {"delta": args.delta, "k": args.k, "seed": args.seed,
                       "connectivity_2d": args.connectivity_2d,
                       "scope": args.scope},
                      outputs, time.perf_counter() - t0)
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    out = _ensure_out(args.out)
    subjects = _load_manifest(args.manifest)
    pairs = []
    spacing = None
    for s in subjects:
        if "gt" not in s or s["gt"] is None:
            raise ValueError(f"subject {s['id']} has no ground truth")
        pred_path = s.get("pred")
        if pred_path is None:
            if args.pred_dir is None:
                raise ValueError(
                    f"subject {s['id']} has no prediction; pass --pred-dir"
                )
            pred_path = os.path.join(args.pred_dir, f"{s['id']}_pred.mvol")
        gt = as_binary_mask(load_volume(s["gt"]))
        pred = as_binary_mask(load_volume(pred_path))
        spacing = gt.spacing_mm
        pairs.append((gt.data, pred.data))
    report = evaluate_subjects(pairs, spacing_mm=spacing,
                               connectivity=args.connectivity_3d)
    dst = os.path.join(out, "metrics.json")
    with open(dst, "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    print(report.summary())
    _write_run_record(out, "evaluate", {"manifest": args.manifest},
                      {"connectivity_3d": args.connectivity_3d},
                      [dst], time.perf_counter() - t0)
    return 0


def cmd_tune(args) -> int:
    t0 = time.perf_counter()
    out = _ensure_out(args.out)
    subjects = _load_manifest(args.subjects)
    tune_set = []
    for s in subjects:
        for key in ("pm", "dwi", "gt"):
            if key not in s or s[key] is None:
                raise ValueError(f"subject {s['id']} missing {key!r} for tuning")
        tune_set.append(tuner.TuneSubject(
            pm=load_volume(s["pm"]),
            dwi=load_volume(s["dwi"]),
            gt=as_binary_mask(load_volume(s["gt"])),
        ))
    k_values = _parse_int_range(args.k_range)
    dmin, dmax = _parse_float_range(args.delta_range)
    grid = tuner.GridSpec(k_values, dmin, dmax, args.delta_step)
    result = tuner.tune(tune_set, grid, args.seed, args.connectivity_2d,
                        args.connectivity_3d)
    table_path = os.path.join(out, "tuning_table.csv")
    tuner.emit_tuning_table(result, table_path)
    report_path = os.path.join(out, "report.json")
    with open(report_path, "w") as f:
        json.dump({"best_delta": result.best_delta, "best_k": result.best_k,
                   "best_mean_dice": result.best_mean_dice}, f, sort_keys=True)
        f.write("\n")
    print(f"best (delta, K) = ({result.best_delta:g}, {result.best_k}) "
          f"mean Dice {result.best_mean_dice:.3f}")
    _write_run_record(out, "tune", {"subjects": args.subjects},
                      {"k_range": args.k_range, "delta_range": args.delta_range,
                       "delta_step": args.delta_step, "seed": args.seed},
                      [table_path, report_path], time.perf_counter() - t0)
    return 0


def cmd_phantom(args) -> int:
    t0 = time.perf_counter()
    out = _ensure_out(args.out)
    spec = phantom.load_spec(args.spec)
    subj = phantom.generate(spec)
    sid = args.id
    paths = {
        "dwi": os.path.join(out, f"{sid}_dwi.mvol"),
        "adc": os.path.join(out, f"{sid}_adc.mvol"),
        "gt": os.path.join(out, f"{sid}_gt.mvol"),
    }
    save_volume(subj.dwi, paths["dwi"])
    save_volume(subj.adc, paths["adc"])
    save_volume(subj.ground_truth, paths["gt"])
    labels_path = os.path.join(out, f"{sid}_slice_labels.json")
    with open(labels_path, "w") as f:
        json.dump({"slice_labels": subj.slice_labels}, f)
        f.write("\n")
    entry = {"id": sid, **paths, "slice_labels": labels_path}
    manifest_path = os.path.join(out, "manifest.json")
    _write_manifest(manifest_path, [entry])
    outputs = list(paths.values()) + [labels_path, manifest_path]
    if args.analytic_weights_config:
        cfg = network.load_config(args.analytic_weights_config)
        g = [float(v) for v in args.gains.split(",")]
        if len(g) != 5:
            raise ValueError("--gains expects dwi_w,adc_w,bias,fc_weight,fc_bias")
        wb = phantom.make_analytic_weights(cfg, *g)
        weights_path = os.path.join(out, "weights.json")
        network.save_weights(wb, weights_path)
        outputs.append(weights_path)
    _write_run_record(out, "phantom", {"spec": args.spec}, {"id": sid},
                      outputs, time.perf_counter() - t0)
    return 0


def cmd_pipeline(args) -> int:
    t0 = time.perf_counter()
    out = _ensure_out(args.out)

    pre = argparse.Namespace(manifest=args.manifest, size=args.size,
                             out=os.path.join(out, "pre"))
    cmd_preprocess(pre)
    infer = argparse.Namespace(manifest=os.path.join(out, "pre", "manifest.json"),
                               net_config=args.net_config, weights=args.weights,
                               out=os.path.join(out, "pm"))
    cmd_infer(infer)
    seg = argparse.Namespace(manifest=os.path.join(out, "pm", "manifest.json"),
                             delta=args.delta, k=args.k, seed=args.seed,
                             connectivity_2d=args.connectivity_2d,
                             scope=args.scope, overlays=args.overlays,
                             out=os.path.join(out, "seg"))
    cmd_segment(seg)
    has_gt = all("gt" in s and s["gt"] for s in _load_manifest(args.manifest))
    if has_gt:
        ev = argparse.Namespace(manifest=os.path.join(out, "seg", "manifest.json"),
                                pred_dir=None,
                                connectivity_3d=args.connectivity_3d, out=out)
        cmd_evaluate(ev)
    _write_run_record(out, "pipeline", {"manifest": args.manifest,
                                        "net_config": args.net_config,
                                        "weights": args.weights},
                      {"delta": args.delta, "k": args.k, "seed": args.seed,
                       "size": args.size,
                       "connectivity_2d": args.connectivity_2d,
                       "connectivity_3d": args.connectivity_3d,
                       "scope": args.scope},
                      [os.path.join(out, d) for d in ("pre", "pm", "seg")],
                      time.perf_counter() - t0)
    return 0


def _parse_int_range(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def _parse_float_range(text: str) -> tuple[float, float]:
    lo, hi = text.split(":")
    return float(lo), float(hi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strokeseg",
        description="Acute ischemic stroke lesion segmentation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("adc", help="compute the ADC map from two b-value volumes")
    p.add_argument("--s0", required=True, help="MVOL volume at b0")
    p.add_argument("--s1", required=True, help="MVOL volume at b1")
    p.add_argument("--b0", type=float, default=0.0)
    p.add_argument("--b1", type=float, default=1000.0)
    p.add_argument("--adc-negate", action="store_true",
                   help="negate the result (conventional positive-ADC sign)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_adc)

    p = sub.add_parser("preprocess", help="resample subject volumes to network size")
    p.add_argument("--manifest", required=True)
    p.add_argument("--size", type=int, default=192)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("infer", help="run the network and write probability maps")
    p.add_argument("--manifest", required=True)
    p.add_argument("--net-config", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("segment", help="cluster, region-grow and write masks")
    p.add_argument("--manifest", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--connectivity-2d", type=int, choices=(4, 8), default=8)
    p.add_argument("--scope", choices=("slice", "volume"), default="slice")
    p.add_argument("--overlays", action="store_true",
                   help="emit PGM overlays for predicted slices")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="pixel- and lesion-wise metrics")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pred-dir", default=None,
                   help="directory holding <id>_pred.mvol when the manifest has no pred entries")
    p.add_argument("--connectivity-3d", type=int, choices=(6, 26), default=26)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune", help="grid-search (delta, K) on a labeled set")
    p.add_argument("--subjects", required=True, help="manifest with pm/dwi/gt per subject")
    p.add_argument("--k-range", default="2:10", help="lo:hi inclusive, or comma list")
    p.add_argument("--delta-range", default="0.05:0.95", help="lo:hi")
    p.add_argument("--delta-step", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--connectivity-2d", type=int, choices=(4, 8), default=8)
    p.add_argument("--connectivity-3d", type=int, choices=(6, 26), default=26)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("phantom", help="generate a synthetic subject")
    p.add_argument("--spec", required=True, help="phantom spec JSON")
    p.add_argument("--id", default="phantom")
    p.add_argument("--analytic-weights-config", default=None,
                   help="also emit an analytic weight bundle for this network config")
    p.add_argument("--gains", default="1.0,-1.0,-2.0,1000.0,-4.0",
                   help="dwi_w,adc_w,bias,fc_weight,fc_bias for analytic weights")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("pipeline", help="preprocess + infer + segment (+ evaluate)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--net-config", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=192)
    p.add_argument("--connectivity-2d", type=int, choices=(4, 8), default=8)
    p.add_argument("--connectivity-3d", type=int, choices=(6, 26), default=26)
    p.add_argument("--scope", choices=("slice", "volume"), default="slice")
    p.add_argument("--overlays", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename or e}", file=sys.stderr)
        return EXIT_FILE_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FILE_ERROR
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
