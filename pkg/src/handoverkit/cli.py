"""Command-line interface.

Exit codes: 0 on success, 1 on errors (bad input, missing files, invalid
values), 2 when a request is well-formed but has no feasible answer (no
feasible handover, no winning atom, a query value outside the trained
domains).
"""
from __future__ import annotations

import json
import sys

import click

from . import csvio, dataset, mln, pipeline, stats
from .effort import MethodId, compare_methods
from .library import build_effort_setups, canonical_scene, load_library
from .optimizer import NoFeasibleHandover, SamplerConfig, optimize_handover
from .scene import Mobility, ParseError, ValidationError, load_scene
from .stats import EmptySample, UnbalancedWithin

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


class _Infeasible(click.ClickException):
    exit_code = EXIT_INFEASIBLE

    def __init__(self, message: str):
        super().__init__(message)


def _fail(message: str) -> "click.ClickException":
    exc = click.ClickException(message)
    exc.exit_code = EXIT_ERROR
    return exc


def _dump_json(data, output) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if output is None or output == "-":
        click.echo(text, nl=False)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


@click.group()
@click.version_option(package_name="handoverkit")
def main() -> None:
    """Handover planning, effort comparison, and relational learning tools."""


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------


@main.command()
@click.argument("scene_file", type=click.Path())
@click.option("--seed", type=int, default=42, show_default=True,
              help="Pose sampler seed.")
@click.option("--poses-per-voxel", type=int, default=8, show_default=True)
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Write the plan JSON here instead of stdout.")
@click.option("--check-gates/--no-check-gates", default=True, show_default=True,
              help="Verify the safety gates on the planned handover.")
def plan(scene_file, seed, poses_per_voxel, output, check_gates):
    """Plan a handover for a scene file."""
    try:
        scene = load_scene(scene_file)
    except (ParseError, ValidationError) as exc:
        raise _fail(str(exc))
    cfg = SamplerConfig(poses_per_voxel=poses_per_voxel, seed=seed)
    try:
        if check_gates:
            report = pipeline.plan_and_verify(scene, cfg=cfg)
            _dump_json(report.to_dict(), output)
        else:
            solution = optimize_handover(scene, cfg=cfg)
            _dump_json(solution.to_dict(), output)
    except NoFeasibleHandover as exc:
        raise _Infeasible(str(exc))
    except pipeline.SafetyGateFailed as exc:
        raise _fail(f"planned handover failed gate {exc.gate}: {exc}")


# ---------------------------------------------------------------------------
# effort
# ---------------------------------------------------------------------------


@main.command()
@click.option("--scene-file", type=click.Path(), default=None,
              help="Scene to compare on (default: the bundled setups).")
@click.option("--setup", type=int, default=None,
              help="Bundled setup index (0-2) to compare on.")
@click.option("--object-id", default="glass", show_default=True,
              help="Library object for bundled setups.")
@click.option("--trials", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Write per-trial efforts CSV here (JSON summary on stdout).")
@click.option("--no-timestamp", is_flag=True, default=False,
              help="Omit the generation timestamp from CSV output.")
def effort(scene_file, setup, object_id, trials, seed, output, no_timestamp):
    """Compare arm effort across transfer strategies."""
    if scene_file is not None:
        try:
            scenes = [load_scene(scene_file)]
        except (ParseError, ValidationError) as exc:
            raise _fail(str(exc))
    else:
        try:
            setups = build_effort_setups(object_id)
        except KeyError as exc:
            raise _fail(str(exc))
        if setup is not None:
            if not 0 <= setup < len(setups):
                raise _fail(f"setup must be in 0..{len(setups) - 1}")
            scenes = [setups[setup]]
        else:
            scenes = setups

    summaries = []
    all_rows = []
    try:
        for i, scene in enumerate(scenes):
            table = compare_methods(scene, trials=trials, seed=seed)
            summaries.append({"setup": i, "mean_effort_nm": table.means})
            for row in table.rows:
                all_rows.append({"setup": str(i), **{k: str(v) for k, v in row.items()}})
    except NoFeasibleHandover as exc:
        raise _Infeasible(str(exc))
    if output:
        csvio.write_rows(
            output,
            ["setup", "method", "trial", "effort_nm"],
            all_rows,
            seed=seed,
            timestamp=not no_timestamp,
        )
    _dump_json({"setups": summaries}, None)


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


@main.group("dataset")
def dataset_group() -> None:
    """Generate and split the handover corpus."""


@dataset_group.command("gen")
@click.option("--corpus", "corpus_path", type=click.Path(), required=True,
              help="Output corpus CSV path.")
@click.option("--study", "study_path", type=click.Path(), default=None,
              help="Also write the study ratings CSV here.")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--jitter-pos", type=float, default=0.002, show_default=True,
              help="Positional jitter sigma in meters.")
@click.option("--jitter-ang", type=float, default=0.5, show_default=True,
              help="Angular jitter sigma in degrees.")
@click.option("--setup", type=int, default=0, show_default=True)
@click.option("--no-timestamp", is_flag=True, default=False)
def dataset_gen(corpus_path, study_path, seed, jitter_pos, jitter_ang, setup,
                no_timestamp):
    """Generate the full corpus (study-derived + synthetic instances)."""
    try:
        records = dataset.generate_study_records(seed=seed)
        corpus = dataset.make_corpus(
            study_records=records,
            seed=seed,
            jitter_pos=jitter_pos,
            jitter_ang_deg=jitter_ang,
            setup=setup,
        )
    except (dataset.CountMismatch, ValueError) as exc:
        raise _fail(str(exc))
    dataset.write_corpus_csv(corpus, corpus_path, seed=seed,
                             timestamp=not no_timestamp)
    if study_path:
        dataset.write_study_csv(records, study_path, seed=seed,
                                timestamp=not no_timestamp)
    click.echo(f"wrote {len(corpus)} instances to {corpus_path}")


@dataset_group.command("split")
@click.option("--corpus", "corpus_path", type=click.Path(), required=True)
@click.option("--train", "train_path", type=click.Path(), required=True)
@click.option("--test", "test_path", type=click.Path(), required=True)
@click.option("--seed", type=int, default=42, show_default=True,
              help="Recorded in the output headers.")
@click.option("--no-timestamp", is_flag=True, default=False)
def dataset_split(corpus_path, train_path, test_path, seed, no_timestamp):
    """Split a corpus CSV into train/test by object identity."""
    try:
        corpus = dataset.read_corpus_csv(corpus_path)
        train, test = dataset.split(corpus)
    except OSError as exc:
        raise _fail(str(exc))
    except (dataset.OverlapError, ValueError) as exc:
        raise _fail(str(exc))
    dataset.write_corpus_csv(train, train_path, seed=seed,
                             timestamp=not no_timestamp)
    dataset.write_corpus_csv(test, test_path, seed=seed,
                             timestamp=not no_timestamp)
    click.echo(f"wrote {len(train)} train / {len(test)} test instances")


# ---------------------------------------------------------------------------
# train / infer / eval
# ---------------------------------------------------------------------------


@main.command("train")
@click.option("--train", "train_path", type=click.Path(), required=True,
              help="Training corpus CSV.")
@click.option("--model", "model_path", type=click.Path(), required=True,
              help="Output model JSON path.")
@click.option("--max-iters", type=int, default=200, show_default=True)
def train_cmd(train_path, model_path, max_iters):
    """Train the relational model on a corpus split."""
    try:
        instances = dataset.read_corpus_csv(train_path)
    except OSError as exc:
        raise _fail(str(exc))
    opts = mln.LearnOptions(max_iters=max_iters)
    try:
        trained = pipeline.train(instances, opts)
    except (pipeline.UncoveredKey, ValueError) as exc:
        raise _fail(str(exc))
    trained.save(model_path)
    click.echo(
        f"trained on {len(instances)} instances "
        f"({trained.meta.get('iterations', '?')} iterations); wrote {model_path}"
    )


@main.command()
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--shape", required=True)
@click.option("--task", required=True)
@click.option("--mobility", required=True)
@click.option("--output", "-o", type=click.Path(), default=None)
def infer(model_path, shape, task, mobility, output):
    """Infer the preferred handover for a (shape, task, mobility) context."""
    try:
        trained = pipeline.TrainedModel.load(model_path)
    except OSError as exc:
        raise _fail(str(exc))
    try:
        result = pipeline.infer_handover(trained, shape, task, mobility)
    except pipeline.UnknownDomainValue as exc:
        raise _Infeasible(f"unknown domain value: {exc}")
    except pipeline.NoWinningAtom as exc:
        raise _Infeasible(str(exc))
    except pipeline.UncoveredKey as exc:
        raise _Infeasible(str(exc))
    _dump_json(result.to_dict(), output)


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--test", "test_path", type=click.Path(), required=True)
@click.option("--output", "-o", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Also write the per-shape accuracy table as CSV "
                   "(percentages), with an overall row.")
@click.option("--no-timestamp", is_flag=True, default=False)
def eval_cmd(model_path, test_path, output, csv_path, no_timestamp):
    """Evaluate a trained model against a held-out corpus split."""
    try:
        trained = pipeline.TrainedModel.load(model_path)
        instances = dataset.read_corpus_csv(test_path)
    except OSError as exc:
        raise _fail(str(exc))
    try:
        report = pipeline.evaluate(trained, instances)
    except ValueError as exc:
        raise _fail(str(exc))
    if csv_path:
        objects_per_shape = {}
        for inst in instances:
            objects_per_shape.setdefault(inst.shape.value, set()).add(
                inst.object_id
            )
        rows = [
            {
                "shape": row.shape,
                "objects": str(len(objects_per_shape.get(row.shape, ()))),
                "pose_acc": csvio.fmt(row.pose_accuracy * 100.0),
                "grasp_acc": csvio.fmt(row.grasp_accuracy * 100.0),
                "average": csvio.fmt(row.average * 100.0),
            }
            for row in report.rows
        ]
        overall = report.overall
        rows.append({
            "shape": "overall",
            "objects": str(sum(len(v) for v in objects_per_shape.values())),
            "pose_acc": csvio.fmt(overall.pose_accuracy * 100.0),
            "grasp_acc": csvio.fmt(overall.grasp_accuracy * 100.0),
            "average": csvio.fmt(overall.average * 100.0),
        })
        csvio.write_rows(
            csv_path,
            ["shape", "objects", "pose_acc", "grasp_acc", "average"],
            rows,
            timestamp=not no_timestamp,
        )
    _dump_json(report.to_dict(), output)


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


@main.group("stats")
def stats_group() -> None:
    """Statistical tests over study ratings CSV files."""


def _load_ratings(path):
    try:
        return dataset.read_study_csv(path)
    except OSError as exc:
        raise _fail(str(exc))
    except (KeyError, ValueError) as exc:
        raise _fail(f"malformed study CSV {path}: {exc}")


@stats_group.command("ranksum")
@click.option("--study", "study_path", type=click.Path(), required=True)
@click.option("--measure", type=click.Choice(["safety", "comfort", "appropriateness"]),
              default="comfort", show_default=True)
@click.option("--method-a", "method_a", default=MethodId.METHOD_B.value,
              show_default=True, help="First method's ratings sample.")
@click.option("--method-b", "method_b", default=MethodId.ADAPTIVE.value,
              show_default=True, help="Second method's ratings sample.")
@click.option("--mobility", default=None,
              help="Restrict to one mobility level (H, H-M, L-M, L).")
def stats_ranksum(study_path, measure, method_a, method_b, mobility):
    """Rank-sum test between two methods' ratings."""
    records = _load_ratings(study_path)
    try:
        m_a, m_b = MethodId(method_a), MethodId(method_b)
        level = Mobility(mobility) if mobility else None
    except ValueError as exc:
        raise _fail(str(exc))
    sample_a = [
        rec.ratings[m_a.value][measure]
        for rec in records
        if level is None or rec.mobility is level
    ]
    sample_b = [
        rec.ratings[m_b.value][measure]
        for rec in records
        if level is None or rec.mobility is level
    ]
    try:
        result = stats.rank_sum(sample_a, sample_b)
    except EmptySample as exc:
        raise _fail(str(exc))
    _dump_json(
        {
            "measure": measure,
            "methods": [m_a.value, m_b.value],
            "mobility": level.value if level else "all",
            "n": [len(sample_a), len(sample_b)],
            "statistic": result.statistic,
            "p_value": result.p_value,
            "method": result.method,
        },
        None,
    )


@stats_group.command("anova")
@click.option("--study", "study_path", type=click.Path(), required=True)
@click.option("--measure", type=click.Choice(["safety", "comfort", "appropriateness"]),
              default="comfort", show_default=True)
@click.option("--groups", default=f"{Mobility.HEALTHY.value},{Mobility.LOW.value}",
              show_default=True, help="Two mobility levels (between factor).")
def stats_anova(study_path, measure, groups):
    """Mixed-design ANOVA: mobility group x transfer method."""
    records = _load_ratings(study_path)
    try:
        names = [Mobility(g.strip()) for g in groups.split(",")]
    except ValueError as exc:
        raise _fail(str(exc))
    if len(names) != 2:
        raise _fail("exactly two mobility groups are required")
    rows = []
    for rec in records:
        if rec.mobility not in names:
            continue
        for method in dataset.METHOD_ORDER:
            rows.append(
                {
                    "subject": rec.participant_id,
                    "group": rec.mobility.value,
                    "condition": method.value,
                    "rating": float(rec.ratings[method.value][measure]),
                }
            )
    try:
        result = stats.mixed_anova(rows)
    except (EmptySample, UnbalancedWithin) as exc:
        raise _fail(str(exc))
    _dump_json(
        {
            "measure": measure,
            "groups": [m.value for m in names],
            "effects": [
                {
                    "name": e.name,
                    "ss": e.ss,
                    "df": e.df,
                    "ms": e.ms,
                    "f_value": e.f_value,
                    "p_value": e.p_value,
                }
                for e in result.effects
            ],
        },
        None,
    )


# ---------------------------------------------------------------------------
# grasp-report
# ---------------------------------------------------------------------------


@main.command("grasp-report")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Write per-object rows CSV here (JSON stats on stdout).")
@click.option("--seed", type=int, default=42, show_default=True,
              help="Recorded in the CSV header.")
@click.option("--no-timestamp", is_flag=True, default=False)
def grasp_report(output, seed, no_timestamp):
    """Manipulation vs handover grasp distances, with per-shape tests."""
    report = pipeline.grasp_distance_report()
    if output:
        rows = [
            {
                "object_id": r["object_id"],
                "shape": r["shape"],
                "manipulation_grasp": r["manipulation_grasp"],
                "manipulation_cm": csvio.fmt(r["manipulation_cm"]),
                "handover_grasp": r["handover_grasp"],
                "handover_cm": csvio.fmt(r["handover_cm"]),
            }
            for r in report["rows"]
        ]
        csvio.write_rows(
            output,
            ["object_id", "shape", "manipulation_grasp", "manipulation_cm",
             "handover_grasp", "handover_cm"],
            rows,
            seed=seed,
            timestamp=not no_timestamp,
        )
    _dump_json({"by_shape": report["by_shape"]}, None)


# ---------------------------------------------------------------------------
# scene helper (canonical scenes for quick experiments)
# ---------------------------------------------------------------------------


@main.command("make-scene")
@click.option("--object-id", required=True)
@click.option("--mobility", default=Mobility.HEALTHY.value, show_default=True)
@click.option("--setup", type=int, default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(), required=True)
def make_scene(object_id, mobility, setup, output):
    """Write a bundled canonical scene JSON for a library object."""
    library = load_library()
    try:
        obj = library.get(object_id)
        level = Mobility(mobility)
    except (KeyError, ValueError) as exc:
        raise _fail(str(exc))
    try:
        scene = canonical_scene(obj, level, setup=setup)
    except IndexError:
        raise _fail("setup must be 0, 1, or 2")
    from .scene import save_scene

    save_scene(scene, output)
    click.echo(f"wrote scene for {object_id} ({level.value}) to {output}")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
