"""Command line interface.

Subcommands
-----------
harmonics eval | table
    Evaluate spin-weighted spherical harmonics at a point or tabulate
    them on a quadrature grid.
gg table | check
    Emit the real-basis coupling coefficients, or run the Gaunt
    consistency suite (closed form against quadrature).
corr eval
    Evaluate a correlation model from a JSON file at one separation.
simulate scalar | vector | dyadic
    Run a simulation plan and write realizations as long-format CSV.
estimate corr
    Empirical correlation matrices with standard errors from a
    simulation CSV.
cmb synth | cell
    Synthesize Stokes parameter maps from an angular power spectrum;
    estimate per-degree spectra from a map file.
verify
    Run the package acceptance criteria and write a JSON report.

Exit codes: 0 on success, 1 on configuration or validation errors,
2 on numerical check failures (non-positive-semidefinite covariance,
imaginary residue above tolerance, a failed `gg check`).

Every CSV opens with one `#` comment line holding JSON metadata (the
resolved configuration including defaults, a 12-hex-digit SHA-256
configuration hash, and the seed where one applies), followed by a
header row. Rerunning a command with the same configuration reproduces
the data rows byte for byte; floats are written with 17 significant
digits so values round-trip exactly. Stochastic commands take their
seed from the command line or the plan file, never from the clock.
Report-style outputs (estimate corr, cmb cell, verify) also render a
matplotlib figure next to their output file unless --no-figures is
given.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .errors import NumericalCheckError
from .special_fn import (
    HarmonicIndex,
    SphericalPoint,
    quadrature_rule,
    spin_harmonic,
    spin_harmonic_table,
)
from .coupling import gaunt_consistency_max_error, gg_block
from .correlation import (
    PairNormalization,
    RadialKernelSet,
    SpectralMeasure,
    VectorSpectralPair,
    bessel_radial,
    constant_radial,
    exponential_radial,
    gaussian_radial,
    inplane_corr,
    rank1_corr,
    rank2_corr,
    scalar_corr,
    tabulated_radial,
    vector_corr,
)
from .simulate import (
    FieldRealization,
    SimulationPlan,
    estimate_correlation,
    simulate_dyadic,
    simulate_scalar,
    simulate_vector,
)
from .sphere import (
    COMPONENTS,
    STOKES_COLUMNS,
    AngularPowerSpectrum,
    StokesMap,
    alm_to_stokes,
    estimate_cell,
    stokes_to_alm,
    synthesize_alm,
)

FORMAT_VERSION = 1

_GAUNT_TOLERANCE = 1e-8

_COMPONENT_LABELS = {
    "scalar": ("T",),
    "vector": ("T1", "T2", "T3"),
    "dyadic": ("C11", "C12", "C21", "C22"),
}


class _UsageError(Exception):
    pass


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError("%s: %s" % (self.prog, message))


# ---------------------------------------------------------------------------
# formatting, metadata, CSV transport


def _fmt(value):
    """17 significant digits: lossless round trip for doubles."""
    return "%.17g" % float(value)


def _canonical(config):
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def config_hash(config):
    return hashlib.sha256(_canonical(config).encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one CLI run.

    `config` holds every parameter that influenced the output, with
    defaults already filled in, so the metadata line records exactly
    what ran. Unknown keys never reach this type: JSON inputs are
    validated against the shipped schemas first. Paths are kept out of
    the metadata so moving files does not change the config hash.
    """

    subcommand: str
    config: dict
    seed: object = None
    input_path: object = None
    output_path: object = None
    format_version: int = FORMAT_VERSION

    @property
    def tool(self):
        return "isofield-" + self.subcommand

    def metadata(self):
        meta = {
            "tool": self.tool,
            "format": self.format_version,
            "config": self.config,
            "config_hash": config_hash(self.config),
        }
        if self.seed is not None:
            meta["seed"] = int(self.seed)
        return meta


def _write_csv(path, meta, header, rows):
    buffer = io.StringIO()
    buffer.write("# " + _canonical(meta) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buffer.getvalue()
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as handle:
            handle.write(text)


def _read_csv(path):
    with open(path, newline="") as handle:
        first = handle.readline()
        meta = None
        if first.startswith("#"):
            try:
                meta = json.loads(first[1:])
            except json.JSONDecodeError as err:
                raise ConfigError("%s: bad metadata line: %s" % (path, err)) from None
            header_line = handle.readline()
        else:
            header_line = first
        reader = csv.reader([header_line.rstrip("\n")])
        header = next(reader, [])
        rows = list(csv.reader(handle))
    return meta, header, rows


# ---------------------------------------------------------------------------
# JSON configuration loading


@lru_cache(maxsize=None)
def _schema_document(name):
    text = resources.files("isofield").joinpath("schemas", name + ".json").read_text()
    return json.loads(text)


def _load_json(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except json.JSONDecodeError as err:
        raise ConfigError("%s: malformed JSON: %s" % (path, err)) from None


def _validate(instance, schema, source):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise ConfigError("%s: %s: %s" % (source, best.json_path, best.message))


def _validate_tagged(instance, schema_name, tag_key, source):
    """Validate against the $defs entry selected by the tag key."""
    document = _schema_document(schema_name)
    if not isinstance(instance, dict):
        raise ConfigError("%s: top level must be a JSON object" % source)
    tag = instance.get(tag_key)
    if tag not in document["$defs"]:
        allowed = sorted(k for k in document["$defs"] if tag_key in
                         document["$defs"][k].get("properties", {}))
        raise ConfigError(
            "%s: $.%s: %r is not one of %s" % (source, tag_key, tag, allowed)
        )
    schema = {"$defs": document["$defs"], "$ref": "#/$defs/" + tag}
    _validate(instance, schema, source)


def _validate_def(instance, schema_name, def_name, source):
    document = _schema_document(schema_name)
    schema = {"$defs": document["$defs"], "$ref": "#/$defs/" + def_name}
    _validate(instance, schema, source)


# ---------------------------------------------------------------------------
# model construction from validated JSON


def _measure_from_json(obj):
    return SpectralMeasure(tuple((a[0], a[1]) for a in obj["atoms"]))


_NORMALIZATIONS = {
    "barycentric": PairNormalization.BARYCENTRIC,
    "yaglom": PairNormalization.YAGLOM,
}


def _pair_from_json(obj):
    return VectorSpectralPair(
        phi1=SpectralMeasure(tuple((a[0], a[1]) for a in obj["phi1"])),
        phi2=SpectralMeasure(tuple((a[0], a[1]) for a in obj["phi2"])),
        normalization=_NORMALIZATIONS[obj.get("normalization", "barycentric")],
    )


def _radial_from_json(obj, source):
    form = obj["form"]
    needs = {
        "gaussian": ("amplitude", "scale"),
        "exponential": ("amplitude", "scale"),
        "bessel-atom": ("wavenumber",),
        "constant": ("value",),
        "table": ("path",),
    }[form]
    for key in needs:
        if key not in obj:
            raise ConfigError(
                "%s: radial form %r requires the key %r" % (source, form, key)
            )
    if form == "gaussian":
        return gaussian_radial(obj["amplitude"], obj["scale"])
    if form == "exponential":
        return exponential_radial(obj["amplitude"], obj["scale"])
    if form == "bessel-atom":
        return bessel_radial(obj["wavenumber"], obj.get("amplitude", 1.0))
    if form == "constant":
        return constant_radial(obj["value"])
    # table paths resolve relative to the model file, not the cwd
    table_path = obj["path"]
    if not os.path.isabs(table_path):
        table_path = os.path.join(os.path.dirname(os.path.abspath(source)), table_path)
    meta, header, rows = _read_csv(table_path)
    if header != ["r", "value"]:
        raise ConfigError(
            "%s: radial table %s must have columns r,value" % (source, obj["path"])
        )
    grid = np.array([float(row[0]) for row in rows])
    values = np.array([float(row[1]) for row in rows])
    return tabulated_radial(grid, values)


def _parse_separation(text, expect):
    parts = text.split(",")
    if len(parts) != expect:
        raise ConfigError(
            "--sep must hold %d comma-separated numbers, got %r" % (expect, text)
        )
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ConfigError("--sep must hold numbers, got %r" % text) from None


# ---------------------------------------------------------------------------
# harmonics


def _cmd_harmonics_eval(args):
    value = spin_harmonic(
        HarmonicIndex(args.ell, args.m, args.spin),
        SphericalPoint(args.theta, args.phi),
    )
    print("%s,%s" % (_fmt(value.real), _fmt(value.imag)))
    return 0


def _cmd_harmonics_table(args):
    rule = quadrature_rule(args.grid)
    thetas, phis = rule.grid_angles()
    table = spin_harmonic_table(args.spin, args.ell_max, thetas, phis)
    rows = []
    index = 0
    for ell in range(args.ell_max + 1):
        for m in range(-ell, ell + 1):
            values = table[index]
            for theta, phi, value in zip(thetas, phis, values):
                rows.append(
                    [ell, m, args.spin, _fmt(theta), _fmt(phi),
                     _fmt(value.real), _fmt(value.imag)]
                )
            index += 1
    config = {
        "command": "harmonics table",
        "ell_max": args.ell_max,
        "grid": args.grid,
        "spin": args.spin,
    }
    run = RunConfig("harmonics", config, output_path=args.out)
    _write_csv(
        args.out,
        run.metadata(),
        ["ell", "m", "spin", "theta", "phi", "re", "im"],
        rows,
    )
    return 0


# ---------------------------------------------------------------------------
# coupling


def _cmd_gg_table(args):
    rows = []
    for ell1 in range(args.ell_max + 1):
        for ell2 in range(args.ell_max + 1):
            for ell in range(abs(ell1 - ell2), min(ell1 + ell2, args.ell_max) + 1):
                block = gg_block(ell, ell1, ell2)
                for m in range(-ell, ell + 1):
                    for m1 in range(-ell1, ell1 + 1):
                        for m2 in range(-ell2, ell2 + 1):
                            value = block[m + ell, m1 + ell1, m2 + ell2]
                            if value != 0.0:
                                rows.append(
                                    [ell, ell1, ell2, m, m1, m2, _fmt(value)]
                                )
    config = {"command": "gg table", "ell_max": args.ell_max, "nonzero_only": True}
    run = RunConfig("gg", config, output_path=args.out)
    _write_csv(
        args.out,
        run.metadata(),
        ["ell", "ell1", "ell2", "m", "m1", "m2", "value"],
        rows,
    )
    return 0


def _cmd_gg_check(args):
    error = gaunt_consistency_max_error(args.ell_max)
    passed = error < _GAUNT_TOLERANCE
    print(
        "gaunt consistency over degrees <= %d: max |closed - quadrature| = %s "
        "(tolerance %s): %s"
        % (args.ell_max, _fmt(error), _fmt(_GAUNT_TOLERANCE),
           "PASS" if passed else "FAIL")
    )
    return 0 if passed else 2


# ---------------------------------------------------------------------------
# correlation evaluation


def _corr_rows_matrix(matrix):
    return [
        [i + 1, j + 1, _fmt(matrix[i, j])] for i in range(3) for j in range(3)
    ]


def _corr_rows_rank4(tensor, dim):
    rows = []
    for i in range(dim):
        for j in range(dim):
            for k in range(dim):
                for l_ in range(dim):
                    rows.append([i + 1, j + 1, k + 1, l_ + 1, _fmt(tensor[i, j, k, l_])])
    return rows


def _cmd_corr_eval(args):
    model = _load_json(args.model)
    _validate_tagged(model, "corr_model.schema", "kind", args.model)
    kind = model["kind"]
    if kind == "inplane":
        sep = _parse_separation(args.sep, 2)
    else:
        sep = _parse_separation(args.sep, 3)
    if kind == "scalar":
        phi = _measure_from_json(model)
        value = scalar_corr(
            float(np.linalg.norm(sep)), phi, model.get("dimension", 3)
        )
        header, rows = ["value"], [[_fmt(value)]]
    elif kind == "vector":
        header = ["i", "j", "value"]
        rows = _corr_rows_matrix(vector_corr(sep, _pair_from_json(model)))
    elif kind == "rank1":
        c_identity, c_direction = (
            _radial_from_json(obj, args.model) for obj in model["coefficients"]
        )
        kernels = RadialKernelSet.rank1(c_identity, c_direction)
        header = ["i", "j", "value"]
        rows = _corr_rows_matrix(rank1_corr(sep, kernels))
    elif kind == "rank2":
        fns = [_radial_from_json(obj, args.model) for obj in model["coefficients"]]
        maker = {
            "k": RadialKernelSet.k_basis,
            "lomakin": RadialKernelSet.lomakin,
            "damage": RadialKernelSet.damage,
        }[model["basis"]]
        header = ["i", "j", "k", "l", "value"]
        rows = _corr_rows_rank4(rank2_corr(sep, maker(*fns)), 3)
    else:
        fns = [_radial_from_json(obj, args.model) for obj in model["coefficients"]]
        header = ["i", "j", "k", "l", "value"]
        rows = _corr_rows_rank4(inplane_corr(sep, RadialKernelSet.inplane(*fns)), 2)
    config = {"command": "corr eval", "model": model, "separation": list(map(float, sep))}
    run = RunConfig("corr", config, input_path=args.model, output_path=args.out)
    _write_csv(args.out, run.metadata(), header, rows)
    return 0


# ---------------------------------------------------------------------------
# simulation and estimation


def _plan_from_config(kind, cfg):
    points = tuple(tuple(float(c) for c in p) for p in cfg["points"])
    common = {
        "points": points,
        "ell_max": int(cfg.get("ell_max", 16)),
        "realizations": int(cfg.get("realizations", 1)),
        "master_seed": int(cfg["seed"]),
    }
    if kind == "scalar":
        return SimulationPlan(kind="scalar", spectral=_measure_from_json(cfg["spectral"]), **common)
    if kind == "vector":
        return SimulationPlan(kind="vector", spectral=_pair_from_json(cfg["spectral"]), **common)
    return SimulationPlan(kind="dyadic", spectral=_pair_from_json(cfg["a_model"]), **common)


def _echo_plan_config(cfg):
    echoed = dict(cfg)
    echoed.setdefault("ell_max", 16)
    echoed.setdefault("realizations", 1)
    return echoed


def _cmd_simulate(args):
    kind = args.kind
    cfg = _load_json(args.plan)
    _validate_def(cfg, "simulate_plan.schema", kind, args.plan)
    plan = _plan_from_config(kind, cfg)
    if kind == "scalar":
        realization = simulate_scalar(plan)
    elif kind == "vector":
        realization = simulate_vector(plan)
    else:
        realization = simulate_dyadic(
            float(cfg["mean"]),
            float(cfg["scale"]),
            _pair_from_json(cfg["a_model"]),
            _pair_from_json(cfg["b_model"]),
            plan,
        )
    names = realization.component_names
    rows = []
    for r in range(plan.realizations):
        for p, point in enumerate(plan.points):
            for c, name in enumerate(names):
                rows.append(
                    [r, p, _fmt(point[0]), _fmt(point[1]), _fmt(point[2]),
                     name, _fmt(realization.values[r, p, c])]
                )
    config = {"command": "simulate " + kind, "kind": kind, "plan": _echo_plan_config(cfg)}
    run = RunConfig(
        "simulate", config, seed=cfg["seed"], input_path=args.plan, output_path=args.out
    )
    _write_csv(
        args.out,
        run.metadata(),
        ["realization", "point", "x", "y", "z", "component", "value"],
        rows,
    )
    return 0


def _realization_from_csv(path):
    meta, header, rows = _read_csv(path)
    if meta is None or meta.get("tool") != "isofield-simulate":
        raise ConfigError("%s: not an isofield simulation CSV" % path)
    expected = ["realization", "point", "x", "y", "z", "component", "value"]
    if header != expected:
        raise ConfigError("%s: expected columns %s" % (path, ",".join(expected)))
    kind = meta["config"]["kind"]
    plan = _plan_from_config(kind, meta["config"]["plan"])
    names = _COMPONENT_LABELS[kind]
    lookup = {name: c for c, name in enumerate(names)}
    values = np.full((plan.realizations, len(plan.points), len(names)), math.nan)
    for row in rows:
        if len(row) != 7:
            raise ConfigError("%s: malformed data row %r" % (path, row))
        r, p = int(row[0]), int(row[1])
        if not (0 <= r < plan.realizations and 0 <= p < len(plan.points)):
            raise ConfigError("%s: row indices (%d, %d) out of range" % (path, r, p))
        point = tuple(float(v) for v in row[2:5])
        if point != plan.points[p]:
            raise ConfigError(
                "%s: row coordinates %r disagree with the plan's point %d"
                % (path, point, p)
            )
        if row[5] not in lookup:
            raise ConfigError("%s: unknown component label %r" % (path, row[5]))
        values[r, p, lookup[row[5]]] = float(row[6])
    if np.isnan(values).any():
        raise ConfigError("%s: data rows do not cover every (realization, point, component)" % path)
    return FieldRealization(plan=plan, values=values, component_names=names), meta


def _cmd_estimate_corr(args):
    realization, meta = _realization_from_csv(args.input)
    pairs_cfg = _load_json(args.pairs)
    _validate(pairs_cfg, _schema_document("pairs.schema"), args.pairs)
    pairs = [(int(a), int(b)) for a, b in pairs_cfg["pairs"]]
    estimate = estimate_correlation(realization, pairs)
    names = realization.component_names
    rows = []
    for k, (x_point, y_point) in enumerate(pairs):
        for i, name_i in enumerate(names):
            for j, name_j in enumerate(names):
                rows.append(
                    [x_point, y_point, name_i, name_j,
                     _fmt(estimate.moments[k, i, j]),
                     _fmt(estimate.standard_errors[k, i, j])]
                )
    config = {
        "command": "estimate corr",
        "pairs": [[a, b] for a, b in pairs],
        "source_config_hash": meta["config_hash"],
    }
    run = RunConfig(
        "estimate", config, seed=meta.get("seed"),
        input_path=args.input, output_path=args.out,
    )
    _write_csv(
        args.out,
        run.metadata(),
        ["x_point", "y_point", "x_component", "y_component", "value", "stderr"],
        rows,
    )
    if args.out and not args.no_figures:
        from . import _plotting

        labels = [
            "(%d,%d) %s%s" % (a, b, ni, nj)
            for a, b in pairs
            for ni in names
            for nj in names
        ]
        _plotting.estimate_figure(
            _figure_path(args.out),
            labels,
            estimate.moments.reshape(-1),
            estimate.standard_errors.reshape(-1),
        )
    return 0


# ---------------------------------------------------------------------------
# CMB commands


def _spectrum_from_json(cfg, ell_max, source):
    ell_min = tuple(cfg.get("ell_min", (2, 2, 2, 0)))
    if cfg["kind"] == "power-law":
        return AngularPowerSpectrum.power_law(
            ell_max, cfg["amplitudes"], cfg["alpha"], ell_min=ell_min
        )
    matrices = np.array(cfg["matrices"], dtype=float)
    if matrices.shape[0] != ell_max + 1:
        raise ConfigError(
            "%s: %d matrices given but --ell-max %d needs %d"
            % (source, matrices.shape[0], ell_max, ell_max + 1)
        )
    return AngularPowerSpectrum(
        matrices=matrices,
        ell_min=ell_min,
        enforce_parity=cfg.get("enforce_parity", True),
    )


def _cmd_cmb_synth(args):
    cfg = _load_json(args.spec)
    _validate_tagged(cfg, "cmb_spectrum.schema", "kind", args.spec)
    spec = _spectrum_from_json(cfg, args.ell_max, args.spec)
    grid = args.grid if args.grid is not None else args.ell_max
    rule = quadrature_rule(grid)
    thetas, phis = rule.grid_angles()
    header = ["theta", "phi"] + list(STOKES_COLUMNS)
    if args.realizations > 1:
        header = ["realization"] + header
    rows = []
    for r in range(args.realizations):
        alm = synthesize_alm(spec, args.seed, realization=r)
        smap = alm_to_stokes(alm, rule)
        for p in range(rule.npoints):
            row = [_fmt(thetas[p]), _fmt(phis[p])] + [
                _fmt(v) for v in smap.values[p]
            ]
            if args.realizations > 1:
                row = [r] + row
            rows.append(row)
    config = {
        "command": "cmb synth",
        "spectrum": cfg,
        "ell_max": args.ell_max,
        "grid": grid,
        "realizations": args.realizations,
    }
    run = RunConfig(
        "cmb-synth", config, seed=args.seed, input_path=args.spec, output_path=args.out
    )
    _write_csv(args.out, run.metadata(), header, rows)
    return 0


_CELL_PAIRS = [(i, j) for i in range(4) for j in range(i, 4)]


def _cmd_cmb_cell(args):
    meta, header, rows = _read_csv(args.input)
    if meta is None or meta.get("tool") != "isofield-cmb-synth":
        raise ConfigError("%s: not an isofield cmb synth CSV" % args.input)
    ell_max = int(meta["config"]["ell_max"])
    rule = quadrature_rule(int(meta["config"]["grid"]))
    realizations = int(meta["config"]["realizations"])
    base = ["theta", "phi"] + list(STOKES_COLUMNS)
    with_index = header == ["realization"] + base
    if not with_index and header != base:
        raise ConfigError("%s: unexpected columns %s" % (args.input, ",".join(header)))
    if len(rows) != realizations * rule.npoints:
        raise ConfigError(
            "%s: expected %d data rows, found %d"
            % (args.input, realizations * rule.npoints, len(rows))
        )
    thetas, phis = rule.grid_angles()
    points = tuple(rule.nodes)
    maps = []
    for r in range(realizations):
        chunk = rows[r * rule.npoints:(r + 1) * rule.npoints]
        values = np.empty((rule.npoints, 4))
        for p, row in enumerate(chunk):
            if with_index:
                if int(row[0]) != r:
                    raise ConfigError("%s: realization column out of order" % args.input)
                row = row[1:]
            if abs(float(row[0]) - thetas[p]) > 1e-12 or abs(float(row[1]) - phis[p]) > 1e-12:
                raise ConfigError(
                    "%s: row %d angles disagree with the %d-degree grid"
                    % (args.input, p, rule.degree)
                )
            values[p] = [float(v) for v in row[2:6]]
        maps.append(StokesMap(points=points, values=values))
    estimate = estimate_cell(maps, ell_max=ell_max, rule=rule)
    out_rows = []
    for ell in range(ell_max + 1):
        for i, j in _CELL_PAIRS:
            out_rows.append(
                ["%d" % ell, "%s-%s" % (COMPONENTS[i], COMPONENTS[j]),
                 _fmt(estimate.means[ell, i, j]),
                 _fmt(estimate.standard_errors[ell, i, j])]
            )
    config = {
        "command": "cmb cell",
        "ell_max": ell_max,
        "realizations": realizations,
        "source_config_hash": meta["config_hash"],
    }
    run = RunConfig(
        "cmb-cell", config, seed=meta.get("seed"),
        input_path=args.input, output_path=args.out,
    )
    _write_csv(
        args.out,
        run.metadata(),
        ["ell", "pair", "value", "stderr"],
        out_rows,
    )
    if args.out and not args.no_figures:
        from . import _plotting

        series = {}
        for i, j in _CELL_PAIRS:
            label = "%s-%s" % (COMPONENTS[i], COMPONENTS[j])
            series[label] = (
                estimate.means[:, i, j],
                estimate.standard_errors[:, i, j],
            )
        _plotting.cell_figure(_figure_path(args.out), ell_max, series)
    return 0


# ---------------------------------------------------------------------------
# verify


def verify_all(budget="fast"):
    """Run every acceptance criterion; failures are report entries."""
    from . import acceptance

    return acceptance.run_all(budget)


def _cmd_verify(args):
    report = verify_all(args.budget)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as handle:
            handle.write(text)
        if not args.no_figures:
            from . import _plotting

            _plotting.verify_figure(_figure_path(args.out), report)
    return 0


def _figure_path(out_path):
    stem = out_path.rsplit(".", 1)[0] if "." in out_path.rsplit("/", 1)[-1] else out_path
    return stem + ".png"


# ---------------------------------------------------------------------------
# parser assembly


def build_parser():
    parser = _Parser(
        prog="isofield",
        description="Isotropic random fields: evaluation, simulation, validation.",
    )
    parser.add_argument("--version", action="version", version="isofield " + __version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    harmonics = sub.add_parser("harmonics", help="spin-weighted spherical harmonics")
    hsub = harmonics.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    heval = hsub.add_parser("eval", help="evaluate one harmonic at one point")
    heval.add_argument("--spin", type=int, default=0)
    heval.add_argument("--ell", type=int, required=True)
    heval.add_argument("--m", type=int, required=True)
    heval.add_argument("--theta", type=float, required=True)
    heval.add_argument("--phi", type=float, required=True)
    heval.set_defaults(func=_cmd_harmonics_eval)
    htable = hsub.add_parser("table", help="tabulate harmonics on a quadrature grid")
    htable.add_argument("--ell-max", type=int, required=True)
    htable.add_argument("--grid", type=int, required=True)
    htable.add_argument("--spin", type=int, default=0)
    htable.add_argument("--out", default=None)
    htable.set_defaults(func=_cmd_harmonics_table)

    gg = sub.add_parser("gg", help="real-basis coupling coefficients")
    gsub = gg.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    gtable = gsub.add_parser("table", help="emit nonzero coupling coefficients")
    gtable.add_argument("--ell-max", type=int, required=True)
    gtable.add_argument("--out", required=True)
    gtable.set_defaults(func=_cmd_gg_table)
    gcheck = gsub.add_parser("check", help="Gaunt closed form vs quadrature")
    gcheck.add_argument("--ell-max", type=int, default=6)
    gcheck.set_defaults(func=_cmd_gg_check)

    corr = sub.add_parser("corr", help="correlation kernels")
    csub = corr.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    ceval = csub.add_parser("eval", help="evaluate a model at one separation")
    ceval.add_argument("--model", required=True)
    ceval.add_argument("--sep", required=True, help='separation, e.g. "0.5,0,0"')
    ceval.add_argument("--out", default=None)
    ceval.set_defaults(func=_cmd_corr_eval)

    simulate = sub.add_parser("simulate", help="spectral Monte-Carlo simulation")
    ssub = simulate.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind in ("scalar", "vector", "dyadic"):
        sp = ssub.add_parser(kind, help="simulate a %s field" % kind)
        sp.add_argument("--plan", required=True)
        sp.add_argument("--out", required=True)
        sp.set_defaults(func=_cmd_simulate, kind=kind)

    estimate = sub.add_parser("estimate", help="empirical statistics")
    esub = estimate.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    ecorr = esub.add_parser("corr", help="correlation with standard errors")
    ecorr.add_argument("--in", dest="input", required=True)
    ecorr.add_argument("--pairs", required=True)
    ecorr.add_argument("--out", default=None)
    ecorr.add_argument("--no-figures", action="store_true")
    ecorr.set_defaults(func=_cmd_estimate_corr)

    cmb = sub.add_parser("cmb", help="Stokes parameter fields on the sphere")
    msub = cmb.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    synth = msub.add_parser("synth", help="synthesize Stokes maps")
    synth.add_argument("--spec", required=True)
    synth.add_argument("--ell-max", type=int, required=True)
    synth.add_argument("--grid", type=int, default=None)
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--realizations", type=int, default=1)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=_cmd_cmb_synth)
    cell = msub.add_parser("cell", help="estimate angular power spectra")
    cell.add_argument("--in", dest="input", required=True)
    cell.add_argument("--out", default=None)
    cell.add_argument("--no-figures", action="store_true")
    cell.set_defaults(func=_cmd_cmb_cell)

    verify = sub.add_parser("verify", help="run the acceptance criteria")
    verify.add_argument("--budget", choices=("fast", "full"), default="fast")
    verify.add_argument("--out", default=None)
    verify.add_argument("--no-figures", action="store_true")
    verify.set_defaults(func=_cmd_verify)

    return parser


def parse_and_dispatch(argv=None):
    """Parse arguments, run the selected command, return the exit code.

    0 on success, 1 on usage or validation problems, 2 when a numerical
    check fails. Error text goes to stderr.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print("error: %s" % err, file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except NumericalCheckError as err:
        print("numerical check failed: %s" % err, file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as err:
        print("error: %s" % err, file=sys.stderr)
        return 1


def main(argv=None):
    return parse_and_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
