"""Episode execution and batch experiments.

Batch runs are keyed by ``run_id`` and streamed to a results CSV as they
complete; the file is rewritten sorted at the end, so its final content does
not depend on the worker count or on interruptions followed by a resume.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bugs import (
    Algorithm,
    BugParams,
    NavState,
    NullRecognizer,
    TargetPercept,
    bug_step,
    path_to_target_free,
)
from .envgen import Environment, GenParams, generate
from .geometry import normalize_angle
from .noise import HitPointRecognizer, NoiseConfig, noisy_dt, noisy_velocity, split_streams
from .oracle import PaddingDegenerateError, environment_astar_length
from .robot import BODY_RADIUS, DEFAULT_RIG, RobotState, SensorRig, sense, step


@dataclass(frozen=True)
class EpisodeConfig:
    algorithm: Algorithm
    # an Environment, or an int seed for the default generator
    env: Environment | int
    noise: NoiseConfig = NoiseConfig()
    time_limit: float = 300.0
    goal_radius: float = 1.0
    dt: float = 0.05
    params: BugParams = BugParams()
    rig: SensorRig = DEFAULT_RIG
    record_trace: bool = False

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if not self.goal_radius > 0:
            raise ValueError("goal_radius must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class EpisodeResult:
    success: bool
    sim_time: float
    path_length: float
    leave_count: int
    reversal_count: int
    fp_count: int = 0
    fn_count: int = 0
    trace: list = field(default_factory=list)


def run_episode(cfg: EpisodeConfig) -> EpisodeResult:
    """Close the loop sense -> decide -> move until the goal or the time limit."""
    alg = Algorithm(cfg.algorithm)
    env = cfg.env
    if isinstance(env, (int, np.integer)):
        env = generate(GenParams(seed=int(env)))
    walls = env.wall_array
    target = env.target
    noise = cfg.noise
    streams = split_streams(noise.noise_seed)
    odom_rng, dt_rng, ransac_rng = streams["odom"], streams["dt"], streams["ransac"]
    params = cfg.params
    if params.dt != cfg.dt:
        params = dataclasses.replace(params, dt=cfg.dt)
    if alg.uses_hit_points:
        recognizer = HitPointRecognizer(
            p_fp=noise.p_fp, p_fn=noise.p_fn, fp_mode=noise.fp_mode, rng=streams["recognizer"]
        )
    else:
        recognizer = NullRecognizer()
    use_dt_channel = noise.dt_sigma > 0 and alg.uses_d_ht
    sigma = noise.odom_sigma
    dt = cfg.dt

    def measure(disp):
        return noisy_velocity(disp, sigma, odom_rng, dt)

    state = RobotState.at(env.start_pose)
    nav = NavState.initial(alg, env.start_pose.position, target)
    prev_est = state.est_position
    n_ticks = int(math.ceil(cfg.time_limit / dt - 1e-9))
    path_length = 0.0
    trace = []
    success = False
    if cfg.record_trace:
        trace.append(_trace_row(state, nav))
    for _ in range(n_ticks):
        pose = state.true_pose
        est = state.est_position
        scan = sense(pose, cfg.rig, walls)
        dx, dy = target.x - est.x, target.y - est.y
        odo_dist = math.hypot(dx, dy)
        bearing = normalize_angle(math.atan2(dy, dx) - state.est_heading)
        est_dist = odo_dist
        if use_dt_channel:
            true_dist = pose.position.dist(target)
            est_dist = noisy_dt(true_dist, noise.dt_sigma, dt_rng)
        percept = TargetPercept(
            bearing=bearing,
            est_distance=est_dist,
            path_free=path_to_target_free(
                scan, bearing, odo_dist, params.free_cone, params.free_half_width
            ),
            est_position=est,
            prev_position=prev_est,
            time=state.clock,
            bumped=state.blocked,
        )
        v, w, nav = bug_step(alg, nav, scan, percept, recognizer, params, ransac_rng)
        prev_est = est
        new_state = step(state, v, w, dt, walls, BODY_RADIUS, measure if sigma > 0 else None)
        path_length += new_state.true_pose.position.dist(pose.position)
        state = new_state
        if cfg.record_trace:
            trace.append(_trace_row(state, nav))
        if state.true_pose.position.dist(target) <= cfg.goal_radius:
            success = True
            break
    return EpisodeResult(
        success=success,
        sim_time=state.clock,
        path_length=path_length,
        leave_count=nav.leave_count,
        reversal_count=nav.reversal_count,
        fp_count=getattr(recognizer, "fp_count", 0),
        fn_count=getattr(recognizer, "fn_count", 0),
        trace=trace,
    )


def _trace_row(state: RobotState, nav: NavState):
    p = state.true_pose
    return (state.clock, p.position.x, p.position.y, p.heading, nav.mode.value)


log = logging.getLogger(__name__)

RESULT_FIELDS = (
    "run_id",
    "env_seed",
    "algorithm",
    "odom_sigma",
    "p_fp",
    "p_fn",
    "dt_sigma",
    "fp_mode",
    "success",
    "sim_time_s",
    "path_length_m",
    "astar_length_m",
    "normalized_length",
    "leave_count",
    "reversal_count",
)
TRACE_FIELDS = ("t_s", "x_m", "y_m", "heading_rad", "mode")


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    env_seed: int
    algorithm: str
    odom_sigma: float
    p_fp: float
    p_fn: float
    dt_sigma: float
    fp_mode: str
    success: bool
    sim_time_s: float
    path_length_m: float
    astar_length_m: float
    normalized_length: float
    leave_count: int
    reversal_count: int

    def as_row(self) -> list[str]:
        out = []
        for name in RESULT_FIELDS:
            v = getattr(self, name)
            if isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        kw = {}
        for f in dataclasses.fields(cls):
            raw = row[f.name]
            if f.type == "bool":
                if raw not in ("true", "false"):
                    raise ValueError(f"bad boolean {raw!r} in column {f.name}")
                kw[f.name] = raw == "true"
            elif f.type == "int":
                kw[f.name] = int(raw)
            elif f.type == "float":
                kw[f.name] = float(raw)
            else:
                kw[f.name] = raw
        return cls(**kw)


def make_run_id(env_seed: int, algorithm, noise: NoiseConfig) -> str:
    alg = Algorithm(algorithm).value
    return (
        f"{env_seed:010d}-{alg}-o{noise.odom_sigma:g}-fp{noise.p_fp:g}"
        f"-fn{noise.p_fn:g}-dt{noise.dt_sigma:g}-{noise.fp_mode}"
    )


def make_record(env_seed: int, algorithm, noise: NoiseConfig, result: EpisodeResult, astar: float):
    return RunRecord(
        run_id=make_run_id(env_seed, algorithm, noise),
        env_seed=int(env_seed),
        algorithm=Algorithm(algorithm).value,
        odom_sigma=float(noise.odom_sigma),
        p_fp=float(noise.p_fp),
        p_fn=float(noise.p_fn),
        dt_sigma=float(noise.dt_sigma),
        fp_mode=noise.fp_mode,
        success=bool(result.success),
        sim_time_s=float(result.sim_time),
        path_length_m=float(result.path_length),
        astar_length_m=float(astar),
        normalized_length=float(result.path_length / astar),
        leave_count=int(result.leave_count),
        reversal_count=int(result.reversal_count),
    )


def derive_env_seed(base_seed: int, index: int, attempt: int = 0) -> int:
    """Environment seed for slot ``index``; independent of how many slots exist."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(index), int(attempt)))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def episode_noise_seed(noise_seed: int, env_seed: int) -> int:
    """Noise seed shared by every algorithm on one environment (paired runs)."""
    ss = np.random.SeedSequence(entropy=int(noise_seed), spawn_key=(int(env_seed),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class BatchSpec:
    algorithms: tuple
    noise_grid: tuple
    gen: GenParams = field(default_factory=GenParams)
    time_limit: float = 300.0
    goal_radius: float = 1.0
    dt: float = 0.05
    params: BugParams = BugParams()


def build_environment(base_seed: int, index: int, gen: GenParams, max_attempts: int = 10):
    """Generate slot ``index``; regenerate if the oracle padding seals start or target."""
    for attempt in range(max_attempts):
        seed = derive_env_seed(base_seed, index, attempt)
        env = generate(dataclasses.replace(gen, seed=seed))
        try:
            return seed, env, environment_astar_length(env.grid)
        except PaddingDegenerateError as exc:
            log.warning("env seed %d: %s; regenerating", seed, exc)
    raise RuntimeError(f"slot {index}: padding degenerate after {max_attempts} attempts")


def _run_slot(base_seed: int, index: int, spec: BatchSpec, skip: frozenset) -> list[RunRecord]:
    env_seed, env, astar = build_environment(base_seed, index, spec.gen)
    out = []
    for noise in spec.noise_grid:
        ep_noise = dataclasses.replace(noise, noise_seed=episode_noise_seed(noise.noise_seed, env_seed))
        for alg in spec.algorithms:
            if make_run_id(env_seed, alg, noise) in skip:
                continue
            cfg = EpisodeConfig(
                algorithm=Algorithm(alg),
                env=env,
                noise=ep_noise,
                time_limit=spec.time_limit,
                goal_radius=spec.goal_radius,
                dt=spec.dt,
                params=spec.params,
            )
            out.append(make_record(env_seed, alg, noise, run_episode(cfg), astar))
    return out


def read_results(path) -> list[RunRecord]:
    """Parse a results CSV. A truncated final line (interrupted write) is dropped."""
    path = Path(path)
    if not path.exists():
        return []
    text = path.read_text(encoding="utf-8")
    if text and not text.endswith("\n"):
        # the last row was cut off mid-write
        text = text[: text.rfind("\n") + 1]
    records = []
    with io.StringIO(text, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if tuple(reader.fieldnames) != RESULT_FIELDS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            try:
                records.append(RunRecord.from_row(row))
            except (KeyError, TypeError, ValueError):
                log.warning("%s: skipping malformed row %r", path, row)
    return records


def write_results(path, records) -> None:
    """Write records sorted by run_id, atomically."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for rec in sorted(records, key=lambda r: r.run_id):
            w.writerow(rec.as_row())
    os.replace(tmp, path)


def write_trace(path, trace) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for t, x, y, heading, mode in trace:
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(heading)), mode])


def read_trace(path) -> list[tuple]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [
            (float(r["t_s"]), float(r["x_m"]), float(r["y_m"]), float(r["heading_rad"]), r["mode"])
            for r in reader
        ]


def trace_path_length(trace) -> float:
    return float(sum(math.hypot(b[1] - a[1], b[2] - a[2]) for a, b in zip(trace, trace[1:])))


def default_workers() -> int:
    raw = os.environ.get("BUGNAV_WORKERS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"BUGNAV_WORKERS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError("BUGNAV_WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1


def run_batch(
    n_envs: int,
    algorithms,
    noise_grid,
    base_seed: int = 0,
    out_path=None,
    workers: int = 1,
    spec: BatchSpec | None = None,
    progress=None,
) -> list[RunRecord]:
    """Run every algorithm x noise point on ``n_envs`` generated environments.

    With ``out_path`` the records are appended to that CSV as each environment
    finishes, rows already present (matched by run_id) are skipped, and the
    file is finally rewritten sorted. Returns all records sorted by run_id.
    """
    if n_envs < 1:
        raise ValueError("n_envs must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    algorithms = tuple(Algorithm(a) for a in algorithms)
    noise_grid = tuple(noise_grid)
    if not algorithms or not noise_grid:
        raise ValueError("need at least one algorithm and one noise point")
    if spec is None:
        spec = BatchSpec(algorithms, noise_grid)
    else:
        spec = dataclasses.replace(spec, algorithms=algorithms, noise_grid=noise_grid)

    done: dict[str, RunRecord] = {}
    sink = None
    writer = None
    if out_path is not None:
        out_path = Path(out_path)
        for rec in read_results(out_path):
            done[rec.run_id] = rec
        # drop any torn tail before appending
        write_results(out_path, done.values())
        sink = out_path.open("a", newline="", encoding="utf-8")
        writer = csv.writer(sink, lineterminator="\n")
    skip = frozenset(done)

    def collect(records):
        for rec in records:
            done[rec.run_id] = rec
            if writer is not None:
                writer.writerow(rec.as_row())
        if sink is not None:
            sink.flush()
        if progress is not None:
            progress(len(records))

    try:
        if workers == 1:
            for i in range(n_envs):
                collect(_run_slot(base_seed, i, spec, skip))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_slot, base_seed, i, spec, skip) for i in range(n_envs)]
                for fut in as_completed(futures):
                    collect(fut.result())
    finally:
        if sink is not None:
            sink.close()
    if out_path is not None:
        write_results(out_path, done.values())
    return sorted(done.values(), key=lambda r: r.run_id)
