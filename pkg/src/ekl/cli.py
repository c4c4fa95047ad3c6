"""Batch job runner.

    ekl --config job.toml [--precision BITS] [--seed N] [--out PATH] [--cache-dir DIR]

The job document is TOML with a ``[job]`` table naming the command and
further tables for its inputs (see configs/). The report is JSON with
sorted keys and no timing data, so equal inputs give byte-identical output.

Exit codes: 0 pass, 1 verification failed, 2 configuration error,
3 budget exceeded. EKL_CACHE_DIR overrides the shell cache directory.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import random
import sys
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from flint import acb, arb

from . import __version__
from ._num import GUARD_BITS, decimal_str, radius, to_acb, workprec
from .errors import EKLError, MalformedConfig

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3
COMMANDS = ("ek-eval", "e-eval", "lvalue", "normalize", "verify-fe", "verify-theta-fe", "verify-dist", "verify-euler", "padic-check", "recognize")
CACHE_ENV = "EKL_CACHE_DIR"


@dataclass
class JobSpec:
    command: str
    document: dict
    precision: int = 128
    seed: int = 0
    out: str | None = None
    fingerprint: str = ""


@dataclass
class Report:
    body: dict
    exit_code: int = EXIT_PASS
    extra: dict = dc_field(default_factory=dict)

    def render(self) -> str:
        return json.dumps(self.body, sort_keys=True, indent=2) + "\n"


# ----------------------------------------------------------------------------
# parsing helpers


def _need(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise MalformedConfig(f"missing field {key!r} in [{where}]", missing=key, table=where)
    return d[key]


def _frac(v) -> Fraction:
    try:
        return Fraction(str(v)) if not isinstance(v, Fraction) else v
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedConfig(f"not a rational number: {v!r}") from exc


def _complex_arg(v) -> acb:
    """'a/b', a number, or [re, im] with rational entries."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise MalformedConfig("complex values are [re, im]", value=v)
        return acb(to_acb(_frac(v[0])).real, to_acb(_frac(v[1])).real)
    return to_acb(_frac(v))


def _num(x, err=None) -> dict:
    e = radius(x) if err is None else max(err, radius(x))
    return {"value": decimal_str(x, e), "error_bound": f"{e:.3e}"}


def _setup_field(doc: dict, precision: int):
    from .field import load_field_config

    if "field" not in doc:
        raise MalformedConfig("missing table [field]", missing="field")
    return load_field_config(doc, precision)


def _ideal(cfg, spec, label="I"):
    from .field import ideal_from_basis, principal_ideal, unit_ideal

    F = cfg.field
    if spec is None or spec == "unit":
        return unit_ideal(F)
    if isinstance(spec, dict):
        if "generator" in spec:
            return principal_ideal(F, F.elt([_frac(c) for c in spec["generator"]]), label)
        if "hnf" in spec:
            return ideal_from_basis(F, [[_frac(c) for c in r] for r in spec["hnf"]], label)
        raise MalformedConfig("ideal needs 'generator' or 'hnf'", table=label)
    return principal_ideal(F, F.elt([_frac(c) for c in spec]), label)


def _character(cfg, doc):
    from .hecke import character_from_config

    ch = _need(doc, "character", "character")
    return character_from_config(cfg, ch)


def _periods(doc, precision):
    from .hecke import PeriodData, lemniscatic_periods

    pd = doc.get("periods", {"preset": "lemniscatic"})
    if pd.get("preset", "") == "lemniscatic":
        per = lemniscatic_periods(precision)
        if "scale" in pd:
            per = per.scaled(_complex_arg(pd["scale"]), precision)
        return per
    om = tuple(_complex_arg(v) for v in _need(pd, "omega", "periods"))
    od = tuple(_complex_arg(v) for v in _need(pd, "omega_dual", "periods"))
    pr = tuple(_complex_arg(v) for v in _need(pd, "pairing", "periods"))
    return PeriodData(om, od, pr, pd.get("provenance", "config")).check(precision)


# ----------------------------------------------------------------------------
# commands


def _cmd_ek_eval(spec: JobSpec, cfg) -> dict:
    from .ekseries import EKQuery, RationalPoint, ek_k, ek_k_direct
    from .field import embed_ideal
    from .lattice import HermitianForm

    q = _need(spec.document, "query", "query")
    lat = embed_ideal(cfg.field, _ideal(cfg, q.get("ideal"), "lattice"), cfg.cm)
    d = lat.d
    H = HermitianForm(tuple(_frac(r) for r in q.get("H", [1] * d)))
    z = RationalPoint(tuple(_frac(c) for c in q.get("z", [0] * lat.rank)))
    w = RationalPoint(tuple(_frac(c) for c in q.get("w", [0] * lat.rank)))
    mu = tuple(int(m) for m in q.get("mu", [0] * d))
    s = _complex_arg(_need(q, "s", "query"))
    kq = EKQuery(mu, H, z, w, s, lat, spec.precision)
    method = q.get("method", "continued")
    v = ek_k_direct(kq) if method == "direct" else ek_k(kq)
    out = {"K": _num(v.value, v.error_bound), "method": v.method}
    if v.pole_at_0 is not None:
        out["pole_at_0"] = _num(v.pole_at_0)
    return out


def _cmd_e_eval(spec: JobSpec, cfg) -> dict:
    from .eisenstein import EisQuery, OrbitSet, e_series, e_series_direct
    from .field import embed_ideal, trivial_unit_group
    from .hecke import congruence_units

    q = _need(spec.document, "query", "query")
    F = cfg.field
    ideal = _ideal(cfg, q.get("ideal"), "lattice")
    lat = embed_ideal(F, ideal, cfg.cm)
    g = q.get("gamma", "full")
    if g == "full":
        gamma = cfg.units
    elif g == "trivial":
        gamma = trivial_unit_group(F)
    else:
        gamma = congruence_units(cfg, _ideal(cfg, g, "congruence"))
    reps = [F.elt([_frac(c) for c in r]) for r in q.get("orbit", [[0] * F.degree])]
    O = OrbitSet.from_reps(F, ideal, reps, gamma)
    eq = EisQuery(_need(q, "beta", "query"), _need(q, "alpha", "query"), O, _complex_arg(q.get("s", 0)), lat, gamma, spec.precision)
    v = e_series_direct(eq) if q.get("method") == "direct" else e_series(eq)
    return {"E": _num(v.value, v.error_bound), "method": v.method, "orbit_points": len(O.points)}


def _cmd_lvalue(spec: JobSpec, cfg) -> dict:
    from .hecke import normalized_L, total_L

    chi = _character(cfg, spec.document)
    per = _periods(spec.document, spec.precision)
    L = total_L(chi)
    bound = int(spec.document.get("recognize", {}).get("denom_bound", 10**6))
    n = normalized_L(chi, per, None, None, raw=L, recognize=bound)
    return {
        "character": chi.describe(),
        "L": _num(L.value, L.error_bound),
        "core": _num(n.normalized, n.error),
        "core_recognized": n.recognition.as_string() if n.recognition else "none",
        "recognition_residual": f"{n.recognition.residual:.3e}" if n.recognition else "inf",
    }


def _cmd_normalize(spec: JobSpec, cfg) -> dict:
    from .hecke import normalized_L, total_L

    chi = _character(cfg, spec.document)
    per = _periods(spec.document, spec.precision)
    nd = spec.document.get("normalize", {})
    c = _ideal(cfg, _need(nd, "c", "normalize"), "c")
    cp = _ideal(cfg, nd["cprime"], "c'") if "cprime" in nd else None
    bound = int(nd.get("denom_bound", 10**12))
    L = total_L(chi)
    core = normalized_L(chi, per, None, None, raw=L, recognize=bound)
    n = normalized_L(chi, per, c, cp, raw=L, recognize=bound)
    return {
        "character": chi.describe(),
        "L": _num(L.value, L.error_bound),
        "core": _num(core.normalized, core.error),
        "core_recognized": core.recognition.as_string() if core.recognition and core.recognition.found else "none",
        "regularizer": repr(n.regularizer),
        "regularizer_descriptor": n.regularizer_descriptor,
        "normalized": _num(n.normalized, n.error),
        "normalized_recognized": n.recognition.as_string() if n.recognition and n.recognition.found else "none",
        "recognition_residual": f"{n.recognition.residual:.3e}" if n.recognition else "inf",
    }


def _lattices(cfg_doc_list, precision):
    from .field import embed_ideal, preset, unit_ideal

    out = []
    for name in cfg_doc_list:
        c = preset(name, precision)
        out.append((name, embed_ideal(c.field, unit_ideal(c.field), c.cm)))
    return out


def _random_point(rng: random.Random, n: int, den: int = 97) -> tuple:
    return tuple(Fraction(rng.randrange(den), den) for _ in range(n))


def _cmd_verify_theta_fe(spec: JobSpec, cfg) -> dict:
    from .ekseries import RationalPoint, theta_fe_residual
    from .lattice import HermitianForm

    v = spec.document.get("verify", {})
    rng = random.Random(spec.seed)
    names = v.get("lattices", [spec.document.get("field", {}).get("preset", "Q(i)")])
    ts = [_frac(t) for t in v.get("t", ["1/3", "1", "3"])]
    count = int(v.get("count", 20))
    mumax = int(v.get("mu_max", 2))
    tol = 2.0 ** (-(spec.precision - int(v.get("slack_bits", 24))))
    worst = 0.0
    rows = []
    for name, lat in _lattices(names, spec.precision):
        H = HermitianForm.standard(lat.d)
        lw = 0.0
        for i in range(count):
            z = RationalPoint(_random_point(rng, lat.rank))
            w = RationalPoint(_random_point(rng, lat.rank))
            mu = tuple(0 for _ in range(lat.d))
            tot = rng.randint(0, mumax)
            mu = list(mu)
            for _ in range(tot):
                mu[rng.randrange(lat.d)] += 1
            t = ts[i % len(ts)]
            res, err, *_ = theta_fe_residual(tuple(mu), H, z, w, t, lat, spec.precision)
            lw = max(lw, res + err)
        rows.append({"lattice": name, "max_residual": f"{lw:.3e}", "samples": count})
        worst = max(worst, lw)
    return {"checks": rows, "max_residual": f"{worst:.3e}", "tolerance": f"{tol:.3e}", "pass": worst < tol}


def _cmd_verify_fe(spec: JobSpec, cfg) -> dict:
    from .ekseries import EKQuery, RationalPoint, k_fe_residual
    from .lattice import HermitianForm

    v = spec.document.get("verify", {})
    rng = random.Random(spec.seed)
    names = v.get("lattices", [spec.document.get("field", {}).get("preset", "Q(i)")])
    svals = v.get("s", None)
    tol = 2.0 ** (-(spec.precision - int(v.get("slack_bits", 28))))
    worst = 0.0
    rows = []
    for name, lat in _lattices(names, spec.precision):
        d = lat.d
        H = HermitianForm.standard(d)
        ss = [_complex_arg(x) for x in svals] if svals else [to_acb(-1), to_acb(Fraction(1, 2)), to_acb(Fraction(d, 2)), to_acb(d + 1)]
        z = RationalPoint(_random_point(rng, lat.rank))
        w = RationalPoint(_random_point(rng, lat.rank))
        mu = tuple(int(m) for m in v.get("mu", [0] * d))
        lw = 0.0
        for s in ss:
            res, err, *_ = k_fe_residual(EKQuery(mu, H, z, w, s, lat, spec.precision))
            lw = max(lw, res + err)
        rows.append({"lattice": name, "max_residual": f"{lw:.3e}", "points": len(ss)})
        worst = max(worst, lw)
    return {"checks": rows, "max_residual": f"{worst:.3e}", "tolerance": f"{tol:.3e}", "pass": worst < tol}


def _cmd_verify_dist(spec: JobSpec, cfg) -> dict:
    from .eisenstein import verify_distribution

    v = spec.document.get("verify", {})
    F = cfg.field
    f = _ideal(cfg, v.get("f", [3] + [0] * (F.degree - 1)), "f")
    b = _ideal(cfg, v.get("b", "unit"), "b")
    tol = 2.0 ** (-(spec.precision - int(v.get("slack_bits", 38))))
    from .field import trivial_unit_group

    gamma = trivial_unit_group(F) if v.get("gamma", "trivial") == "trivial" else cfg.units
    rows = []
    worst = 0.0
    for cs in v.get("c", [[2] + [0] * (F.degree - 1)]):
        c = _ideal(cfg, cs, "c")
        rep = verify_distribution(F, cfg.cm, c, f, b, v.get("beta", [0] * F.d), v.get("alpha", [4] * F.d), gamma, 0, spec.precision)
        tot = rep.residual + rep.error
        rows.append({"c": [str(x) for x in cs], "lhs": _num(rep.lhs.value), "rhs": _num(rep.rhs.value), "residual": f"{tot:.3e}", "terms": rep.terms})
        worst = max(worst, tot)
    return {"checks": rows, "max_residual": f"{worst:.3e}", "tolerance": f"{tol:.3e}", "pass": worst < tol}


def _cmd_verify_euler(spec: JobSpec, cfg) -> dict:
    from .hecke import total_L
    from .padic import check_ordinary, euler_factors

    v = spec.document.get("verify", {})
    chi = _character(cfg, spec.document)
    ps = check_ordinary(cfg, int(v.get("p", 5)), 1)
    tol = 2.0 ** (-(spec.precision - int(v.get("slack_bits", 38))))
    big = chi.conductor
    for pd in ps.sigmabar_primes:
        big = big * pd.ideal
    chi2 = chi.imprimitive(big)
    L1 = total_L(chi)
    L2 = total_L(chi2)
    _e1, e2 = euler_factors(chi, ps)
    with workprec(spec.precision + GUARD_BITS):
        diff = e2.to_acb(spec.precision) * L1.value - L2.value
        tot = float(abs(diff.mid())) + radius(diff)
    return {
        "euler_factor": repr(e2),
        "L_f": _num(L1.value),
        "L_enlarged": _num(L2.value),
        "residual": f"{tot:.3e}",
        "tolerance": f"{tol:.3e}",
        "pass": tot < tol,
    }


def _cmd_padic_check(spec: JobSpec, cfg) -> dict:
    from .padic import (
        check_ordinary,
        decompose_conductor,
        euler_factors,
        extract_chi_fin,
        inverse_partial_fourier,
        local_factor,
        measure_consistency_check,
        partial_fourier,
        rho_constant,
        rho_delta,
        rho_pairing,
    )

    v = spec.document.get("padic", {})
    p, m = int(v.get("p", 5)), int(v.get("m", 1))
    ps = check_ordinary(cfg, p, m)
    rng = random.Random(spec.seed)
    out = {"p": p, "m": m, "ordinary": True}
    # inversion and Parseval on a random rho
    E = ps.E
    rho = {k: E(Fraction(rng.randint(-9, 9), rng.randint(1, 9))) + E.zeta(rng.randrange(ps.q)) for k in ps.domain()}
    PR = partial_fourier(rho, ps)
    inv = inverse_partial_fourier(PR, ps)
    out["inversion"] = all(inv[k] == rho[k] for k in rho)
    lhs = sum((x * x.conj() for x in PR.values()), E.zero())
    rhs = sum((x * x.conj() for x in rho.values()), E.zero()) * Fraction(1, ps.q**ps.d)
    out["parseval"] = lhs == rhs
    ok = out["inversion"] and out["parseval"]
    if "character" in spec.document:
        chi = _character(cfg, spec.document)
        cf = extract_chi_fin(chi, ps)
        decs = decompose_conductor(chi, ps)
        vals = [local_factor(chi, ps, dd, cf).value for dd in decs]
        out["local_factor"] = repr(vals[0])
        out["decompositions"] = len(decs)
        out["local_independent"] = all(x == vals[0] for x in vals)
        e1, e2 = euler_factors(chi, ps)
        out["euler_factors"] = [repr(e1), repr(e2)]
        ok = ok and out["local_independent"]
    if v.get("measure", True) and ps.d == 1:
        x = cfg.field.elt([_frac(c) for c in v.get("x", ["1/3"] + [0] * (cfg.field.degree - 1))])
        tol = 2.0 ** (-(spec.precision - int(v.get("slack_bits", 48))))
        rows = {}
        for name, r in (("constant", rho_constant(ps)), ("pairing", rho_pairing(ps, (1,) * ps.d)), ("delta", rho_delta(ps))):
            rep = measure_consistency_check(cfg, ps, r, x, precision=spec.precision)
            tot = rep.residual + rep.error
            rows[name] = {"residual": f"{tot:.3e}", "pass": tot < tol}
            ok = ok and tot < tol
        out["measure"] = rows
        out["measure_tolerance"] = f"{tol:.3e}"
    out["pass"] = bool(ok)
    return out


def _cmd_recognize(spec: JobSpec, cfg) -> dict:
    from .hecke import recognize_algebraic

    r = _need(spec.document, "recognize", "recognize")
    with workprec(spec.precision + GUARD_BITS):
        raw = _need(r, "value", "recognize")
        if isinstance(raw, list):
            x = acb(arb(str(raw[0])), arb(str(raw[1])))
        else:
            x = acb(arb(str(raw)))
    rec = recognize_algebraic(x, int(r.get("denom_bound", 10**6)), r.get("field", "rational"), spec.precision)
    return {"found": rec.found, "candidate": rec.as_string(), "residual": f"{rec.residual:.3e}"}


_DISPATCH = {
    "ek-eval": _cmd_ek_eval,
    "e-eval": _cmd_e_eval,
    "lvalue": _cmd_lvalue,
    "normalize": _cmd_normalize,
    "verify-fe": _cmd_verify_fe,
    "verify-theta-fe": _cmd_verify_theta_fe,
    "verify-dist": _cmd_verify_dist,
    "verify-euler": _cmd_verify_euler,
    "padic-check": _cmd_padic_check,
    "recognize": _cmd_recognize,
}


def run_job(spec: JobSpec) -> Report:
    header = {
        "artifact_version": __version__,
        "command": spec.command,
        "precision": spec.precision,
        "seed": spec.seed,
        "config_fingerprint": spec.fingerprint,
        "inputs": _echo(spec.document),
    }
    try:
        if spec.command not in _DISPATCH:
            raise MalformedConfig(f"unknown command {spec.command!r}", known=", ".join(COMMANDS))
        cfg = _setup_field(spec.document, spec.precision) if spec.command != "recognize" else None
        if cfg is not None:
            header["field_fingerprint"] = cfg.field.fingerprint()
        result = _DISPATCH[spec.command](spec, cfg)
    except EKLError as exc:
        header["error"] = exc.to_dict()
        header["verdict"] = "error"
        return Report(header, exc.exit_code)
    except (ValueError, TypeError, KeyError) as exc:
        header["error"] = {"type": "MalformedConfig", "message": f"{type(exc).__name__}: {exc}", "details": {}}
        header["verdict"] = "error"
        return Report(header, EXIT_CONFIG)
    header["result"] = result
    verdict = result.get("pass", True)
    header["verdict"] = "pass" if verdict else "fail"
    return Report(header, EXIT_PASS if verdict else EXIT_FAIL)


def _echo(doc):
    if isinstance(doc, dict):
        return {str(k): _echo(v) for k, v in doc.items()}
    if isinstance(doc, list):
        return [_echo(v) for v in doc]
    return doc if isinstance(doc, (str, int, float, bool)) or doc is None else str(doc)


def load_job(path: str, precision: int | None = None, seed: int | None = None, out: str | None = None) -> JobSpec:
    from .field import _read_document

    if not os.path.exists(path):
        raise MalformedConfig(f"config file not found: {path}")
    with open(path, "rb") as fh:
        raw = fh.read()
    doc = _read_document(path)
    job = _need(doc, "job", "job")
    command = _need(job, "command", "job")
    prec = int(precision if precision is not None else job.get("precision", 128))
    sd = int(seed if seed is not None else job.get("seed", 0))
    if prec < 64:
        raise MalformedConfig("precision must be at least 64 bits", precision=prec)
    return JobSpec(command, doc, prec, sd, out or job.get("out"), hashlib.sha256(raw).hexdigest()[:16])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ekl", description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", required=True, help="job document (TOML)")
    ap.add_argument("--precision", type=int, default=None, help="working precision in bits")
    ap.add_argument("--seed", type=int, default=None, help="seed for randomized checks (u64)")
    ap.add_argument("--out", default=None, help="report path (default stdout)")
    ap.add_argument("--cache-dir", default=None, help=f"shell cache directory (env {CACHE_ENV})")
    args = ap.parse_args(argv)
    cache = os.environ.get(CACHE_ENV) or args.cache_dir
    if cache:
        from .lattice import set_cache_dir

        set_cache_dir(cache)
    if args.seed is not None and not (0 <= args.seed < 2**64):
        print(json.dumps({"error": {"type": "MalformedConfig", "message": "seed must be a u64"}}, sort_keys=True))
        return EXIT_CONFIG
    try:
        spec = load_job(args.config, args.precision, args.seed, args.out)
    except EKLError as exc:
        text = json.dumps({"artifact_version": __version__, "error": exc.to_dict(), "verdict": "error"}, sort_keys=True, indent=2) + "\n"
        _emit(text, args.out)
        return exc.exit_code
    rep = run_job(spec)
    _emit(rep.render(), spec.out)
    return rep.exit_code


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
