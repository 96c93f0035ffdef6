"""
Main Entry Point

Command-line interface for the JIT* planner and its benchmark harness.
"""

import logging
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from jitstar import __version__
from jitstar.bench.harness import (
    PlannerEntry,
    default_kinematic_planners,
    joint_space_world,
    run_benchmark,
    run_kinematic_benchmark,
)
from jitstar.bench.results import ResultsWriteError, emit_plot, summarize_by_planner, write_results
from jitstar.core.config_loader import ConfigLoader, ConfigLoadError, threads_from_env
from jitstar.core.console import configure_logging, console, key_value_table, summary_table
from jitstar.core.state import DimensionError, path_cost
from jitstar.core.world import Scenario, ScenarioConfigError, build_scenario
from jitstar.planners.base_planner import PlannerFactory, ProblemDefinition, ProblemDefinitionError
from jitstar.robot.kinematics import (
    ChainLoadError,
    KinematicSystem,
    geometric_jacobian,
    load_system,
    yoshikawa,
)
from jitstar.robot.motion_performance import (
    ManipulabilityError,
    motion_term,
    path_min_sigma,
    refine_goal,
    refine_interpolated_path,
)
from jitstar.robot.self_collision import is_self_collision_free, self_collision_predicate

# importing the planner module registers its variants
import jitstar.planners.jit_planner  # noqa: F401

logger = logging.getLogger("jitstar")

EXIT_PLANNING_FAILURE = 2
EXIT_CONFIG_ERROR = 1

CONFIG_ERRORS = (
    ConfigLoadError,
    ScenarioConfigError,
    ChainLoadError,
    ProblemDefinitionError,
    ManipulabilityError,
    DimensionError,
)


def _fail(message: str) -> None:
    click.echo(f"Error: {message}", err=True)
    sys.exit(EXIT_CONFIG_ERROR)


def _loader(ctx: click.Context) -> ConfigLoader:
    return ctx.obj["loader"]


def _load_scenario(
    loader: ConfigLoader, scenario: str, dim: int, seed: int
) -> tuple[Scenario, Optional[float]]:
    """A generated scenario (np/rr/empty) with its preset time budget, or a scenario file."""
    if scenario in ("np", "rr", "empty"):
        preset = loader.scenario_preset(scenario)
        return build_scenario(scenario, dim, seed, preset.params), preset.max_time_for(dim)
    return Scenario.load(Path(scenario)), None


def _check_planner(name: str) -> None:
    if name not in PlannerFactory.get_available_planners():
        available = ", ".join(PlannerFactory.get_available_planners())
        raise ConfigLoadError(f"Unknown planner {name!r} (available: {available})")


@click.group()
@click.version_option(__version__, prog_name="jitstar")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging")
@click.option(
    "--config-dir",
    type=click.Path(exists=True, file_okay=False),
    help="Custom configuration directory",
)
@click.pass_context
def cli(ctx, verbose, config_dir):
    """
    jitstar - just-in-time informed trees

    Asymptotically optimal sampling-based path planning with lazy reverse search,
    on-demand edge and sample repair, and manipulability-aware joint-space planning.
    """
    configure_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj["loader"] = ConfigLoader(Path(config_dir) if config_dir else None)


@cli.command()
@click.option("--scenario", default="np", show_default=True, help="np, rr, empty or a scenario JSON file")
@click.option("--dim", default=4, show_default=True, type=click.IntRange(min=2))
@click.option("--planner", default="jit", show_default=True, help="Planner variant")
@click.option("--profile", default=None, help="Planner profile from data/planners")
@click.option("--max-time", type=float, default=None, help="Time budget in seconds")
@click.option("--seed", default=0, show_default=True, type=int, help="World and planner seed")
@click.option("--alpha", type=float, default=None)
@click.option("--tau", type=int, default=None)
@click.option("--batch", type=int, default=None, help="Samples per batch")
@click.option("--save-path", type=click.Path(dir_okay=False), default=None, help="Write waypoints as CSV")
@click.pass_context
def plan(ctx, scenario, dim, planner, profile, max_time, seed, alpha, tau, batch, save_path):
    """Solve a single planning problem."""
    try:
        loader = _loader(ctx)
        _check_planner(planner)
        problem_scenario, preset_time = _load_scenario(loader, scenario, dim, seed)
        config = loader.planner_config(
            profile,
            max_time=max_time if max_time is not None else preset_time,
            alpha=alpha,
            tau=tau,
            batch_size=batch,
        )
        solver = PlannerFactory.create(planner, config)
        problem = ProblemDefinition(problem_scenario.start, problem_scenario.goal)

        def report(path, elapsed):
            logger.info("cost %.6f at %.3f s", path_cost(path), elapsed)

        result = solver.plan(problem, problem_scenario.world, np.random.default_rng(seed), report)
    except CONFIG_ERRORS as e:
        _fail(str(e))
        return

    rows = [
        ("scenario", f"{problem_scenario.name} ({problem_scenario.world.dim}-D)"),
        ("planner", planner),
        ("batches", str(result.batches)),
        ("iterations", str(result.iterations)),
        ("samples", str(result.samples)),
        ("edge checks", str(result.edge_checks)),
        ("elapsed [s]", f"{result.elapsed:.3f}"),
    ]
    if result.success:
        rows += [
            ("t_init [s]", f"{result.t_init:.4f}"),
            ("c_init", f"{result.c_init:.6f}"),
            ("cost", f"{result.cost:.6f}"),
            ("waypoints", str(len(result.path.waypoints))),
        ]
    console.print(key_value_table(rows, title="Plan"))

    if not result.success:
        click.echo("No solution found within the budget.", err=True)
        sys.exit(EXIT_PLANNING_FAILURE)
    if save_path:
        np.savetxt(save_path, result.path.as_array(), delimiter=",", fmt="%.17g")
        click.echo(f"Path written to {save_path}")


@cli.command()
@click.option("--scenario", default="np", show_default=True, help="np, rr, empty or a scenario JSON file")
@click.option("--dim", default=4, show_default=True, type=click.IntRange(min=2))
@click.option("--trials", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--base-seed", default=0, show_default=True, type=int)
@click.option(
    "--planner",
    "planners",
    multiple=True,
    default=("jit", "ablation"),
    show_default=True,
    help="Planner variants to compare (repeatable)",
)
@click.option("--profile", default=None, help="Planner profile from data/planners")
@click.option("--max-time", type=float, default=None, help="Per-run time budget in seconds")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--plot", is_flag=True, help="Also write plot.svg")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker processes (default: JIT_THREADS or 1)")
@click.pass_context
def bench(ctx, scenario, dim, trials, base_seed, planners, profile, max_time, out_dir, plot, threads):
    """Run a paired-seed benchmark and write records.csv and results.json."""
    try:
        loader = _loader(ctx)
        for name in planners:
            _check_planner(name)
        threads = threads or threads_from_env()
        config = loader.planner_config(profile)
        entries = [PlannerEntry(name, name, config) for name in planners]
        if scenario in ("np", "rr", "empty"):
            preset = loader.scenario_preset(scenario)
            budget = max_time if max_time is not None else preset.max_time_for(dim)
            target, params = scenario, preset.params
        else:
            target, params = Scenario.load(Path(scenario)), None
            budget = max_time if max_time is not None else config.max_time
            dim = target.world.dim

        with console.status(f"Running {trials} trial(s) x {len(entries)} planner(s)..."):
            records = run_benchmark(
                target, dim, entries, trials, budget, base_seed, params=params, threads=threads
            )
    except CONFIG_ERRORS as e:
        _fail(str(e))
        return

    summaries = summarize_by_planner(records, budget)
    try:
        csv_path, json_path = write_results(records, summaries, out_dir)
        if plot:
            title = f"{records[0].scenario} {dim}-D"
            emit_plot(summaries, Path(out_dir) / "plot.svg", title)
    except ResultsWriteError as e:
        _fail(str(e))
        return

    console.print(summary_table(summaries.values()))
    click.echo(f"Records written to {csv_path} and {json_path}")


@cli.group()
def kin():
    """Joint-space planning for manipulators."""
    pass


def _load_kinematic_problem(loader: ConfigLoader, chain: str, goal: str):
    system = load_system(loader.resolve(chain, loader.chains_dir))
    start, goal_state = loader.load_goal(goal)
    if start is None:
        raise ConfigLoadError(f"Goal file {goal} has no start configuration")
    if start.dim != system.dof or goal_state.dim != system.dof:
        raise ConfigLoadError(
            f"Start/goal must have {system.dof} joints, got {start.dim}/{goal_state.dim}"
        )
    return system, start, goal_state


def _yoshikawa(system: KinematicSystem, q) -> float:
    return min(yoshikawa(geometric_jacobian(ch, part)) for ch, part in zip(system.chains, system.split(q)))


@kin.command()
@click.option("--chain", default="dual_planar_3r", show_default=True, help="Chain JSON (name in data/chains or a path)")
@click.option("--goal", default="dual_planar_3r", show_default=True, help="Goal JSON (name in data/goals or a path)")
@click.option("--planner", default="jit", show_default=True)
@click.option("--profile", default="kinematic", show_default=True)
@click.option("--max-time", type=float, default=None)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--smooth", is_flag=True, help="Refine the interpolated solution path")
@click.pass_context
def demo(ctx, chain, goal, planner, profile, max_time, seed, smooth):
    """Refine a goal away from singularities, then plan with self-collision checks."""
    try:
        loader = _loader(ctx)
        _check_planner(planner)
        system, start, goal_state = _load_kinematic_problem(loader, chain, goal)
        manip = loader.manip_config(profile)
        scdf = loader.scdf_config(profile)
        config = loader.planner_config(profile, max_time=max_time)
        rng = np.random.default_rng(seed)

        refined = refine_goal(system, goal_state, manip, rng)
        before = [
            ("goal sigma_min", f"{system.sigma_min(goal_state):.4f}"),
            ("goal yoshikawa", f"{_yoshikawa(system, goal_state):.4f}"),
            ("refined sigma_min", f"{system.sigma_min(refined):.4f}"),
            ("refined yoshikawa", f"{_yoshikawa(system, refined):.4f}"),
            ("per chain sigma_min", ", ".join(f"{s:.4f}" for s in system.sigma_min_per_chain(refined))),
            ("goal self-collision free", str(is_self_collision_free(system, refined, scdf))),
        ]
        console.print(key_value_table(before, title="Goal refinement"))

        problem = ProblemDefinition(
            start,
            refined,
            state_predicate=self_collision_predicate(system, scdf),
            motion_term=motion_term(system, manip),
        )
        solver = PlannerFactory.create(planner, config)
        world = joint_space_world(system)
        result = solver.plan(problem, world, rng)
    except CONFIG_ERRORS as e:
        _fail(str(e))
        return

    if not result.success:
        click.echo("No joint-space path found within the budget.", err=True)
        sys.exit(EXIT_PLANNING_FAILURE)

    path = result.path
    rows = [
        ("cost", f"{result.cost:.6f}"),
        ("t_init [s]", f"{result.t_init:.4f}"),
        ("waypoints", str(len(path.waypoints))),
        ("path min sigma_min", f"{path_min_sigma(system, path):.4f}"),
    ]
    if smooth:
        path = refine_interpolated_path(system, path, manip, rng, checker=problem.checker(world))
        rows.append(("smoothed min sigma_min", f"{path_min_sigma(system, path):.4f}"))
    console.print(key_value_table(rows, title="Joint-space plan"))


@kin.command(name="bench")
@click.option("--chain", default="dual_planar_3r", show_default=True)
@click.option("--goal", default="dual_planar_3r", show_default=True)
@click.option("--profile", default="kinematic", show_default=True)
@click.option("--trials", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--base-seed", default=0, show_default=True, type=int)
@click.option("--max-time", type=float, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--plot", is_flag=True)
@click.option("--threads", type=click.IntRange(min=1), default=None)
@click.pass_context
def kin_bench(ctx, chain, goal, profile, trials, base_seed, max_time, out_dir, plot, threads):
    """Compare manipulability-aware and geometric JIT* on a joint-space problem."""
    try:
        loader = _loader(ctx)
        system, start, goal_state = _load_kinematic_problem(loader, chain, goal)
        threads = threads or threads_from_env()
        config = loader.planner_config(profile)
        budget = max_time if max_time is not None else config.max_time
        with console.status(f"Running {trials} joint-space trial(s)..."):
            records = run_kinematic_benchmark(
                system,
                start,
                goal_state,
                default_kinematic_planners(config),
                trials,
                budget,
                base_seed,
                manip=loader.manip_config(profile),
                scdf=loader.scdf_config(profile),
                threads=threads,
                name=Path(chain).stem,
            )
    except CONFIG_ERRORS as e:
        _fail(str(e))
        return

    summaries = summarize_by_planner(records, budget)
    try:
        csv_path, json_path = write_results(records, summaries, out_dir)
        if plot:
            emit_plot(summaries, Path(out_dir) / "plot.svg", Path(chain).stem)
    except ResultsWriteError as e:
        _fail(str(e))
        return
    console.print(summary_table(summaries.values()))
    for name in summaries:
        sigmas = [r.min_sigma for r in records if r.planner == name and r.min_sigma is not None]
        if sigmas:
            click.echo(f"{name}: median path min sigma_min {float(np.median(sigmas)):.4f}")
    click.echo(f"Records written to {csv_path} and {json_path}")


@cli.command()
@click.pass_context
def info(ctx):
    """Show version, planner variants, scenario presets and the thread cap."""
    loader = _loader(ctx)
    try:
        threads = str(threads_from_env())
    except ConfigLoadError as e:
        threads = f"invalid ({e})"
    rows = [
        ("version", __version__),
        ("planners", ", ".join(PlannerFactory.get_available_planners())),
        ("profiles", ", ".join(loader.available_profiles()) or "-"),
        ("scenarios", ", ".join(loader.available_scenarios()) or "-"),
        ("config dir", str(loader.config_dir)),
        ("threads (JIT_THREADS)", threads),
    ]
    console.print(key_value_table(rows, title="jitstar"))


@cli.command()
@click.pass_context
def validate(ctx):
    """Validate configuration files, chains and goals."""
    loader = _loader(ctx)
    click.echo("Validating configuration files...")
    try:
        loader.planner_config()
        for profile in loader.available_profiles():
            loader.planner_config(profile)
            loader.manip_config(profile)
            loader.scdf_config(profile)
            click.echo(f"✓ Planner profile: {profile}")
        for kind in loader.available_scenarios():
            preset = loader.scenario_preset(kind)
            budgets = ", ".join(f"{d}-D {t:g}s" for d, t in sorted(preset.max_time.items()))
            click.echo(f"✓ Scenario preset: {kind} ({budgets or 'fallback only'})")
        for chain_file in sorted(loader.chains_dir.glob("*.json")):
            system = load_system(chain_file)
            click.echo(f"✓ Chain: {chain_file.stem} ({len(system.chains)} chain(s), {system.dof} joints)")
        for goal_file in sorted(loader.goals_dir.glob("*.json")):
            loader.load_goal(str(goal_file))
            click.echo(f"✓ Goal: {goal_file.stem}")
    except CONFIG_ERRORS as e:
        _fail(str(e))
        return
    click.echo("\n✓ Configuration loaded successfully!")


def main():
    """Main entry point."""
    cli(obj={})


if __name__ == "__main__":
    main()
