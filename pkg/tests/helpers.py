"""Shared builders for test scenarios."""

from __future__ import annotations

import dataclasses
import math

from criteval.model import Dataset, Detection, Frame, ObjectState, Vec2
from criteval.synthgen import ScenarioObject, ScenarioSpec, SplitMix64, gen_dataset


def make_state(
    object_id="a",
    class_name="car",
    center=(0.0, 0.0),
    velocity=(0.0, 0.0),
    size=(2.0, 4.5),
    yaw=0.0,
) -> ObjectState:
    vel = None if velocity is None else Vec2(*velocity)
    return ObjectState(object_id, class_name, Vec2(*center), vel, size, yaw)


def make_ego(center=(0.0, 0.0), velocity=(0.0, 0.0), yaw=0.0) -> ObjectState:
    return ObjectState("ego", "ego", Vec2(*center), Vec2(*velocity), (2.0, 5.0), yaw)


def make_frame(frame_id="f0", timestamp=0.0, ego=None, objects=()) -> Frame:
    return Frame(frame_id, timestamp, ego if ego is not None else make_ego(), list(objects))


def perfect_detections(dataset: Dataset, confidence=0.9) -> list[Detection]:
    """Predictions identical to the ground truth."""
    out = []
    for frame in dataset.frames:
        for i, gt in enumerate(frame.ground_truth):
            state = dataclasses.replace(gt, object_id=f"det{i}")
            out.append(Detection(frame.frame_id, state, confidence))
    return out


def random_scenario_spec(seed: int, n_frames: int = 6) -> ScenarioSpec:
    """Mixed scenario: movers, a few velocity-unknown objects, varied ranges."""
    rng = SplitMix64(seed)
    n_objects = 6 + int(rng.uniform() * 6)
    objects = []
    for _ in range(n_objects):
        start = Vec2(rng.uniform() * 80.0 - 40.0, rng.uniform() * 80.0 - 40.0)
        if rng.uniform() < 0.12:
            velocity = None
        else:
            velocity = Vec2(rng.uniform() * 16.0 - 8.0, rng.uniform() * 16.0 - 8.0)
        objects.append(ScenarioObject(start=start, velocity=velocity))
    return ScenarioSpec(
        n_frames=n_frames,
        ego_start=Vec2(0.0, 0.0),
        ego_velocity=Vec2(rng.uniform() * 10.0 - 5.0, rng.uniform() * 10.0 - 5.0),
        objects=objects,
        seed=seed,
    )


def approaching_pairs(n: int, seed: int) -> list[tuple[ObjectState, ObjectState]]:
    """(ego, object) pairs built from known approach geometry.

    The closest-approach offset is kept >= 0.3 m and the relative speed
    <= 10 m/s so a 1 ms sampled simulation can localize the approach.
    """
    rng = SplitMix64(seed)
    pairs = []
    for _ in range(n):
        ego_pos = Vec2(rng.uniform() * 20.0 - 10.0, rng.uniform() * 20.0 - 10.0)
        theta = 2.0 * math.pi * rng.uniform()
        ux, uy = math.cos(theta), math.sin(theta)
        side = 1.0 if rng.uniform() < 0.5 else -1.0
        offset = 0.3 + 39.7 * rng.uniform()
        travel = 1.0 + 39.0 * rng.uniform()
        speed = 0.5 + 9.5 * rng.uniform()
        closest = Vec2(ego_pos.x - uy * offset * side, ego_pos.y + ux * offset * side)
        b_pos = Vec2(closest.x - ux * travel, closest.y - uy * travel)
        v_ego = Vec2(rng.uniform() * 10.0 - 5.0, rng.uniform() * 10.0 - 5.0)
        v_b = Vec2(ux * speed + v_ego.x, uy * speed + v_ego.y)
        ego = ObjectState("ego", "ego", ego_pos, v_ego, (2.0, 5.0), 0.0)
        obj = ObjectState("b", "car", b_pos, v_b, (2.0, 4.5), 0.0)
        pairs.append((ego, obj))
    return pairs


def sweep_dataset_and_detectors(
    n_scenes: int = 10, frames_per_scene: int = 20
) -> tuple[Dataset, dict[str, list[Detection]]]:
    """200-frame corpus of slow-moving scenes plus two imperfect detectors."""
    from criteval.synthgen import ErrorModel, corrupt

    frames = []
    for s in range(n_scenes):
        rng = SplitMix64(5000 + s)
        objects = []
        for _ in range(10 + int(rng.uniform() * 5)):
            start = Vec2(rng.uniform() * 88.0 - 44.0, rng.uniform() * 88.0 - 44.0)
            if rng.uniform() < 0.1:
                velocity = None
            else:
                velocity = Vec2(rng.uniform() * 5.0 - 2.5, rng.uniform() * 5.0 - 2.5)
            objects.append(ScenarioObject(start=start, velocity=velocity))
        spec = ScenarioSpec(
            n_frames=frames_per_scene,
            ego_start=Vec2(0.0, 0.0),
            ego_velocity=Vec2(rng.uniform() * 4.0 - 2.0, rng.uniform() * 4.0 - 2.0),
            objects=objects,
            seed=5000 + s,
            frame_prefix=f"s{s:02d}_f",
        )
        frames.extend(gen_dataset(spec).frames)
    dataset = Dataset(frames=frames)
    detectors = {
        "farblind": corrupt(
            dataset,
            ErrorModel(miss_prob_by_distance=[(25.0, 0.05), (50.0, 0.5)],
                       center_noise_sigma=0.25, velocity_noise_sigma=0.3,
                       fp_rate_per_frame=0.4),
            seed=611,
        ),
        "nearblind": corrupt(
            dataset,
            ErrorModel(miss_prob_by_distance=[(15.0, 0.35), (50.0, 0.05)],
                       center_noise_sigma=0.35, velocity_noise_sigma=0.4,
                       fp_rate_per_frame=0.6),
            seed=612,
        ),
    }
    return dataset, detectors


def divergence_scenario() -> tuple[Dataset, list[Detection], list[Detection]]:
    """Two detectors whose count-based and weighted rankings disagree.

    Detector A misses only distant receding objects (zero weight at caps
    (20, 20, 8)); detector B misses one head-on object per frame but has
    better raw counts.
    """
    near = [
        ScenarioObject(start=Vec2(0.0, 14.0), velocity=Vec2(0.0, -4.0), object_id="near0"),
        ScenarioObject(start=Vec2(4.0, 12.0), velocity=Vec2(-1.2, -3.6), object_id="near1"),
        ScenarioObject(start=Vec2(-5.0, 10.0), velocity=Vec2(1.5, -3.0), object_id="near2"),
    ]
    far = []
    for i in range(10):
        angle = 2.0 * math.pi * i / 10.0
        direction = Vec2(math.cos(angle), math.sin(angle))
        far.append(
            ScenarioObject(
                start=Vec2(38.0 * direction.x, 38.0 * direction.y),
                velocity=Vec2(2.0 * direction.x, 2.0 * direction.y),
                object_id=f"far{i}",
            )
        )
    spec = ScenarioSpec(
        n_frames=4,
        ego_start=Vec2(0.0, 0.0),
        ego_velocity=Vec2(0.0, 0.0),
        objects=near + far,
        seed=7,
    )
    dataset = gen_dataset(spec)

    def detect(frame: Frame, skip_ids: set[str]) -> list[Detection]:
        dets = []
        for i, gt in enumerate(frame.ground_truth):
            if gt.object_id in skip_ids:
                continue
            state = dataclasses.replace(
                gt,
                object_id=f"det{i}",
                center=Vec2(gt.center.x + 0.15, gt.center.y - 0.1),
            )
            dets.append(Detection(frame.frame_id, state, 0.9 - 0.02 * i))
        return dets

    miss_a = {"far0", "far1", "far2", "far3"}
    miss_b = {"near0"}
    dets_a = [d for f in dataset.frames for d in detect(f, miss_a)]
    dets_b = [d for f in dataset.frames for d in detect(f, miss_b)]
    return dataset, dets_a, dets_b
