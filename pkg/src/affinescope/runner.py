"""Experiment runner: config validation, builtin corpus, reports and plots.

Every experiment is a pure function of (config, inputs, version): reports
echo the config and the content hash of the input, numeric payloads are
written with a fixed float representation and sorted keys, and re-running
an identical config byte-reproduces report.json and every CSV side table.
Wall time, being volatile, goes to a separate run_meta.json that is not
part of the determinism contract.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from importlib import resources

import numpy as np

from . import __version__ as VERSION
from . import affine as _affine
from . import banach as _banach
from . import dorronsoro as _dorronsoro
from . import harmonic as _harmonic
from . import moduli as _moduli
from .geometry import Ball, GridFunction, NormSpec, from_callable, lipschitz_estimate

__all__ = ["corpus", "run", "load_config", "validate_config", "ValidationFailure"]

log = logging.getLogger("affinescope")
if os.environ.get("AFFINESCOPE_LOG"):
    logging.basicConfig(level=os.environ["AFFINESCOPE_LOG"].upper())


class ValidationFailure(ValueError):
    """Config or input failed validation (CLI exit code 2)."""


def _schema():
    with resources.files("affinescope.schemas").joinpath("config.schema.json").open() as fh:
        return json.load(fh)


def validate_config(config: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(config, _schema())
    except jsonschema.ValidationError as e:
        raise ValidationFailure(f"config rejected: {e.message}") from e


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# builtin corpus
# ---------------------------------------------------------------------------


def _parse_id(cid: str) -> tuple[str, dict]:
    parts = cid.split(":")
    kw = {}
    for part in parts[1:]:
        k, _, v = part.partition("=")
        kw[k] = v
    return parts[0], kw


def _smooth_bump(x, width):
    r = np.clip(np.abs(x / width), 0, 1)
    out = np.zeros_like(r)
    inside = r < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def corpus(cid: str, seed: int = 0) -> GridFunction:
    """Deterministic builtin test functions, Lipschitz constant in metadata.

    Ids: affine:n=..:m=.. | sawtooth:m=..:p=.. | tensor:n=..:m=..:K=..:eps=..
    | radial:n=.. | random-lip:n=..:seed=.. | bump:width=.. | tent | cutoff-radial:n=..
    """
    name, kw = _parse_id(cid)
    n = int(kw.get("n", 1))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 17)))
    if name == "affine":
        m = int(kw.get("m", 1))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        g = from_callable(lambda pts: pts @ A.T + b, [-1.5] * n, [1.5] * n, 33)
        g.meta["lipschitz"] = float(np.linalg.svd(A, compute_uv=False)[0])
        return g
    if name == "sawtooth":
        spec = _moduli.SawtoothSpec(int(kw.get("m", 2)), float(kw.get("p", 2)))
        return _moduli.sawtooth_grid(spec, int(kw["res"]) if "res" in kw else None)
    if name == "tensor":
        spec = _moduli.TensorSpec(
            n, float(kw.get("K", 0.5)), float(kw.get("eps", 0.5)),
            float(kw.get("p", 2)), int(kw.get("m", 2)),
        )
        g = from_callable(lambda pts: _moduli.tensor_stack(spec, pts), [-1.5] * n, [1.5] * n, 65)
        g.meta["lipschitz"] = 1.0
        g.meta["blocks"] = n
        return g
    if name == "radial":
        g = from_callable(lambda pts: np.linalg.norm(pts, axis=1), [-1.5] * n, [1.5] * n,
                          129 if n == 1 else 65)
        g.meta["lipschitz"] = 1.0
        return g
    if name == "random-lip":
        s = int(kw.get("seed", seed))
        r2 = np.random.default_rng(np.random.SeedSequence(entropy=(s, 19)))
        m = int(kw.get("m", 1))
        waves = 4
        k = r2.normal(size=(waves, n)) * 2.0
        amp = r2.normal(size=(waves, m))
        phase = r2.uniform(0, 2 * np.pi, size=waves)

        def fn(pts):
            osc = np.cos(pts @ k.T + phase)  # (N, waves)
            return osc @ amp

        g = from_callable(fn, [-1.5] * n, [1.5] * n, 129 if n == 1 else 65)
        lip = lipschitz_estimate(g, NormSpec("lp", n, p=2), seed=s)
        g.values /= max(lip, 1e-12)
        g._interp = None
        g.meta["lipschitz"] = 1.0
        return g
    if name == "bump":
        width = float(kw.get("width", 1.0))
        half = float(kw.get("half", 8.0))
        g = from_callable(lambda pts: _smooth_bump(pts[:, 0], width), [-half], [half],
                          int(kw.get("res", 513)))
        g.meta["lipschitz"] = float(np.abs(np.gradient(g.values[:, 0], g.axes[0])).max())
        return g
    if name == "tent":
        half = float(kw.get("half", 8.0))
        g = from_callable(lambda pts: np.maximum(0.0, 1.0 - np.abs(pts[:, 0])), [-half], [half],
                          int(kw.get("res", 513)))
        g.meta["lipschitz"] = 1.0
        return g
    if name == "cutoff-radial":
        base = corpus(f"radial:n={n}", seed)
        return _moduli.cutoff_extend(base, NormSpec("lp", n, p=2))
    raise ValidationFailure(f"unknown corpus id {cid!r}")


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _canonical(obj):
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return "inf" if np.isinf(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(_canonical(payload), fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_csv(path, rows: list[dict]) -> None:
    if not rows:
        return
    keys = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for k, v in
                        ((k, r[k]) for k in keys)])


def _plot(path, curves, xlabel, ylabel, logx=False, logy=False):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "affinescope"
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for label, x, y in curves:
        ax.plot(x, y, marker="o", ms=3, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(curves) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _load_input(config, seed):
    inp = config.get("input", "none")
    if inp == "none":
        return None, hashlib.sha256(b"none").hexdigest()
    if inp.endswith(".afsc") or inp.endswith(".csv"):
        with open(inp, "rb") as fh:
            blob = fh.read()
        g = GridFunction.from_bytes(blob) if inp.endswith(".afsc") else GridFunction.from_csv(inp)
        return g, hashlib.sha256(blob).hexdigest()
    g = corpus(inp, seed)
    blob = g.to_bytes()
    return g, hashlib.sha256(inp.encode() + blob).hexdigest()


def _norm_from_params(d: dict) -> NormSpec:
    return NormSpec.from_json(d)


def _p_of(v):
    return np.inf if v == "inf" else float(v)


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def _cmd_fit(f, prm, seed, out):
    ballspec = prm["ball"]
    ball = Ball(np.asarray(ballspec["center"], float), float(ballspec["radius"]),
                _norm_from_params(ballspec["norm"]))
    rep = _affine.best_affine_fit(f, ball, _p_of(prm["p"]),
                                  int(prm.get("node_budget", 2048)), seed=seed)
    return rep.to_json(), []


def _cmd_modulus(f, prm, seed, out):
    X = _norm_from_params(prm["X"])
    eps_list = prm["epsilon"] if isinstance(prm["epsilon"], list) else [prm["epsilon"]]
    results, radii = [], []
    for eps in eps_list:
        q = _moduli.ModulusQuery(
            epsilon=float(eps),
            p=_p_of(prm["p"]),
            r_min=float(prm.get("r_min", 1 / 64)),
            radius_levels=int(prm.get("radius_levels", 6)),
            center_samples=int(prm.get("center_samples", 16)),
            seed=seed,
            top_k=int(prm.get("top_k", 8)),
            prune_factor=float(prm.get("prune_factor", 8.0)),
            node_budget=int(prm.get("node_budget", 1024)),
        )
        res = _moduli.search_modulus(f, X, q)
        results.append({"epsilon": float(eps), "result": res.to_json()})
        radii.append(res.witness.ball.radius if res.witness else 0.0)
    rows = []
    for entry in results:
        for lv in entry["result"]["levels"]:
            rows.append({"epsilon": entry["epsilon"], **lv})
    if out:
        _write_csv(os.path.join(out, "modulus_levels.csv"), rows)
        if len(eps_list) > 1:
            _plot(os.path.join(out, "modulus.svg"),
                  [("witness radius", eps_list, radii)], "epsilon", "radius", logy=False)
        elif results[0]["result"]["levels"]:
            lv = results[0]["result"]["levels"]
            _plot(os.path.join(out, "modulus.svg"),
                  [("min relative error", [r["radius"] for r in lv],
                    [r["min_relative_error"] for r in lv])],
                  "radius", "relative error", logx=True, logy=True)
    payload = results if len(eps_list) > 1 else results[0]
    return payload, rows


def _cmd_witness(f, prm, seed, out):
    X = _norm_from_params(prm["X"])
    params = _moduli.FindBallParams(
        u_levels=int(prm.get("u_levels", 5)),
        centers_per_u=int(prm.get("centers_per_u", 24)),
        sub_centers=int(prm.get("sub_centers", 32)),
        node_budget=int(prm.get("node_budget", 1024)),
        extension_resolution=int(prm.get("extension_resolution", 257)),
        seed=seed,
    )
    wit = _moduli.find_affine_ball(f, X, float(prm["epsilon"]), _p_of(prm["p"]), params)
    payload = wit.to_json()
    payload["meta"] = _canonical(wit.meta)
    return payload, []


def _cmd_dorronsoro(f, prm, seed, out):
    p = float(prm["p"])
    u_rng = (
        float(prm["u_min"]) if "u_min" in prm else None,
        float(prm["u_max"]) if "u_max" in prm else None,
    )
    default = _dorronsoro.default_u_range(f)
    u_range = (u_rng[0] or default[0], u_rng[1] or default[1])
    params = _dorronsoro.DorronsoroParams(
        p, p, u_range,
        centers=int(prm.get("centers", 64)),
        directions=int(prm.get("directions", 2048)),
        points_per_octave=int(prm.get("points_per_octave", 8)),
        seed=seed,
    )
    rep = _dorronsoro.dorronsoro_ratio_report(f, p, params, s=prm.get("s"))
    # per-(x,u) defect table for plotting
    us, _ = _dorronsoro._log_u_grid(u_range, 8)
    slo, shi = _dorronsoro._support_box(f)
    centers = _dorronsoro._stratified_centers(slo, shi, 4, seed)
    rows = []
    for ci, x in enumerate(centers):
        for u in us:
            try:
                d = _dorronsoro.local_defect(f, x, u, p, 1024)
            except ValueError:
                continue
            rows.append({"center": ci, **{f"x{i}": x[i] for i in range(f.dim)},
                         "u": float(u), "defect": d})
    if out:
        _write_csv(os.path.join(out, "defect_table.csv"), rows)
        curves = []
        for ci in range(len(centers)):
            pts = [(r["u"], r["defect"]) for r in rows if r["center"] == ci and r["defect"] > 0]
            if pts:
                curves.append((f"center {ci}", [a for a, _ in pts], [b for _, b in pts]))
        if curves:
            _plot(os.path.join(out, "dorronsoro.svg"), curves, "scale u", "local defect",
                  logx=True, logy=True)
    return rep.to_json(), rows


def _cmd_counterexample(f, prm, seed, out):
    spec = _moduli.SawtoothSpec(int(prm["m"]), float(prm.get("p", 2)))
    table = _moduli.certify_upper_bound(spec, _p_of(prm["q"]), int(prm["depth"]),
                                        int(prm.get("node_budget", 2048)))
    rows = table["rows"]
    if out:
        _write_csv(os.path.join(out, "counterexample_table.csv"), rows)
        if rows:
            _plot(os.path.join(out, "counterexample.svg"),
                  [("error / floor", [r["b"] - r["a"] for r in rows],
                    [r["ratio"] for r in rows])],
                  "interval length", "error / floor", logx=True)
    return table, rows


def _cmd_umd(f, prm, seed, out):
    kind = prm.get("kind", "beta")
    if kind == "beta":
        depth = int(prm.get("depth", 6))
        fam = _banach.nested_random_family(depth, int(prm.get("m", 1)),
                                           _p_of(prm.get("q", 2)),
                                           int(prm.get("count", 8)), seed)
        est = _banach.beta_lower_bound(fam, float(prm.get("p", 2)), seed=seed)
        return est.to_json(), []
    if kind == "riesz-product":
        k, p = int(prm.get("k", 4)), float(prm.get("p", 2))
        mart = _banach.riesz_product_martingale(k, p)
        norm2 = float(np.sqrt((_banach.target_norm(mart.levels[-1], mart.q) ** 2).mean()))
        return {"k": k, "p": p, "norm_identity": norm2,
                "expected": 2.0 ** (k * (p - 1) / p),
                "martingale_defect": mart.martingale_defect()}, []
    if kind == "cotype":
        vecs = np.asarray(prm["vectors"], float)
        est = _banach.cotype_constant(vecs, _p_of(prm.get("q_norm", 2)), float(prm.get("q", 2)))
        return est.to_json(), []
    raise ValidationFailure(f"unknown umd kind {kind!r}")


def _cmd_multiplier(f, prm, seed, out):
    spec = _harmonic.MultiplierSpec(prm["family"], dict(prm.get("mparams", {})))
    fld = _harmonic.SpectralField.from_grid(f)
    res = _harmonic.apply_multiplier(fld, spec)
    p = float(prm.get("p", 2))
    return {
        "family": spec.family,
        "params": spec.pdict,
        "input_lp": fld.lp_norm(p),
        "output_lp": res.lp_norm(p),
        "p": p,
    }, []


_COMMANDS = {
    "fit": _cmd_fit,
    "modulus": _cmd_modulus,
    "witness": _cmd_witness,
    "dorronsoro": _cmd_dorronsoro,
    "counterexample": _cmd_counterexample,
    "umd": _cmd_umd,
    "multiplier": _cmd_multiplier,
}


def run(config: dict, out_dir: str | None = None) -> dict:
    """Validate, dispatch, and persist one experiment.  Returns the report."""
    validate_config(config)
    t0 = time.perf_counter()
    seed = int(config.get("seed", 0))
    f, input_hash = _load_input(config, seed)
    cmd = config["command"]
    needs_input = cmd not in ("umd", "counterexample")
    if needs_input and f is None:
        raise ValidationFailure(f"command {cmd!r} needs an input function")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    log.info("running %s", cmd)
    results, _rows = _COMMANDS[cmd](f, config.get("params", {}), seed, out_dir)
    report = {
        "config": config,
        "results": results,
        "version": VERSION,
        "input_hash": input_hash,
    }
    if out_dir:
        _write_json(os.path.join(out_dir, "report.json"), report)
        _write_json(
            os.path.join(out_dir, "run_meta.json"),
            {"wall_time_ms": round((time.perf_counter() - t0) * 1000.0, 3)},
        )
    return _canonical(report)
