"""Acceptance suite: one test per criterion, each printing a PASS line with
the measured figures (run with ``pytest tests/test_acceptance.py -v -s``).

Tolerances are pinned here, next to each assertion, and nowhere else.
"""

import random
import time

import pytest

from hlsinterp import (
    ActivityProfile,
    FunctionSpec,
    calibrate_routing,
    canonical_hash,
    dynamic_power,
    cap_activity,
    evaluate,
    gamma,
    gamma_parts,
    parse,
    PowerParams,
    predict,
    routing_bits,
    run_fsm,
    state_count,
    substitute_optimized,
    translate,
)
from hlsinterp import fixtures, kernel
from hlsinterp.fsm import flatten

from enumspace import ALL_VALUATIONS, enumerate_programs

_REPORTED: list[str] = []


def report(line: str) -> None:
    _REPORTED.append(line)
    print(line)


class budget:
    """Measure a criterion's runtime and enforce its stated bound."""

    def __init__(self, seconds: float):
        self.limit = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.limit, \
                f"runtime {self.elapsed:.2f}s exceeds the {self.limit:.0f}s budget"
        return False


@pytest.fixture(scope="module")
def program_space():
    programs, raw = enumerate_programs()
    return programs, raw


def test_criterion_01_chaser_function_mix(chaser, chaser_activity):
    with budget(1) as b:
        parts = gamma_parts(chaser, chaser_activity)
    assert abs(parts.numerator_watts - 721.312) <= 1e-3
    assert abs(parts.value - 5.227) <= 1e-3
    report(f"criterion 01 PASS: mix numerator {parts.numerator_watts:.3f} "
           f"(721.312 +/- 0.001), value {parts.value:.6f} (5.227 +/- 0.001) "
           f"[{b.elapsed:.3f}s]")


def test_criterion_02_calibration():
    with budget(1) as b:
        cal = calibrate_routing(5.895, 5.227, 288)
    assert abs(cal.pr1_watts_per_bit - 0.0023194) <= 1e-6
    report(f"criterion 02 PASS: pr1 {cal.pr1_watts_per_bit:.9f} "
           f"(0.0023194 +/- 1e-6) [{b.elapsed:.3f}s]")


def _chaser_calibration(chaser, chaser_activity):
    g = gamma(chaser, chaser_activity)
    return calibrate_routing(5.895, g, routing_bits(chaser.routing, chaser.costs))


def test_criterion_03_grabber_prediction(chaser, chaser_activity, grabber,
                                         grabber_activity):
    with budget(1) as b:
        cal = _chaser_calibration(chaser, chaser_activity)
        rep = predict(grabber, grabber_activity, None,
                      PowerParams(pr1_watts_per_bit=cal.pr1_watts_per_bit),
                      fixtures.measurement("grabber")[1])
    assert abs(rep.dynamic.mean_watts - 7.498) <= 5e-3
    assert rep.rel_error <= 0.002
    report(f"criterion 03 PASS: predicted {rep.dynamic.mean_watts:.6f} W "
           f"(7.498 +/- 0.005), error vs 7.505 = {100 * rep.rel_error:.3f}% "
           f"(<= 0.2%) [{b.elapsed:.3f}s]")


def test_criterion_04_optimized_grabber_prediction(chaser, chaser_activity,
                                                   grabber, density_opt,
                                                   grabber_opt_activity):
    with budget(1) as b:
        cal = _chaser_calibration(chaser, chaser_activity)
        optimized = substitute_optimized(grabber, density_opt)
        rep = predict(optimized, grabber_opt_activity, None,
                      PowerParams(pr1_watts_per_bit=cal.pr1_watts_per_bit),
                      fixtures.measurement("grabber_opt")[1])
    assert abs(rep.dynamic.mean_watts - 5.937) <= 5e-3
    assert rep.rel_error <= 0.01
    report(f"criterion 04 PASS: predicted {rep.dynamic.mean_watts:.6f} W "
           f"(5.937 +/- 0.005), error vs 5.898 = {100 * rep.rel_error:.3f}% "
           f"(<= 1%, the cross-design re-use claim) [{b.elapsed:.3f}s]")


def _rand_design(rng):
    from hlsinterp import (CostVector, DesignSpec, Instruction, ProgramSpec,
                           RoutingMatrix, StorageElement)
    from hlsinterp.design import default_instances
    n = rng.randint(1, 4)
    storage = [StorageElement("e0", 8, True)]
    functions = {}
    instructions = []
    for i in range(n):
        on = rng.uniform(0.5, 8.0)
        off = rng.uniform(0.0, on)
        functions[f"f{i}"] = FunctionSpec(f"f{i}", 8, 8, 1, 1, on, off,
                                          rng.randint(1, 50))
        storage.append(StorageElement(f"e{i + 1}", 8))
        instructions.append(Instruction(f"f{i}", (f"e{i}", f"e{i + 1}")))
    rows = [[1 if (j == i + 1 or i == j == 0) else 0 for j in range(n)]
            for i in range(n)]
    program = ProgramSpec(tuple(instructions))
    design = DesignSpec("rand", tuple(storage), program, functions,
                        default_instances(program),
                        RoutingMatrix.from_rows(rows),
                        CostVector.from_list([rng.randint(16, 1024)] * n))
    activity = ActivityProfile(200, {
        f"f{i}#0": rng.randint(1, min(functions[f'f{i}'].state_count, 40))
        for i in range(n)})
    return design, activity


def test_criterion_05_calibration_round_trip_property():
    rng = random.Random(0xC0FFEE)
    worst = 0.0
    with budget(10) as b:
        for _ in range(1000):
            design, activity = _rand_design(rng)
            pr1 = rng.uniform(0.01, 0.1)
            est = dynamic_power(design, activity, None,
                                PowerParams(pr1_watts_per_bit=pr1))
            cal = calibrate_routing(est.mean_watts, gamma(design, activity),
                                    routing_bits(design.routing, design.costs))
            rel = abs(cal.pr1_watts_per_bit - pr1) / pr1
            worst = max(worst, rel)
            assert rel <= 1e-12
    report(f"criterion 05 PASS: 1000 randomized round-trips, worst relative "
           f"error {worst:.2e} (<= 1e-12) [{b.elapsed:.2f}s]")


def test_criterion_06_monotonicity_property():
    rng = random.Random(0xBEEF)
    with budget(10) as b:
        for _ in range(1000):
            design, activity = _rand_design(rng)
            pr1 = rng.uniform(0.001, 0.01)
            params = PowerParams(pr1_watts_per_bit=pr1)
            base = dynamic_power(design, activity, None, params).mean_watts
            target = rng.choice(list(design.functions))
            f = design.functions[target]
            off2 = f.dyn_off_watts * rng.uniform(0.2, 1.0)
            on2 = rng.uniform(off2, f.dyn_on_watts)
            lib = {f"{target}'": FunctionSpec(
                f"{target}'", f.input_bits, f.output_bits, f.n_inputs,
                f.n_outputs, on2, off2, rng.randint(1, f.state_count),
                variant_of=target)}
            cheaper = substitute_optimized(design, lib)
            capped = cap_activity(activity, cheaper)
            new = dynamic_power(cheaper, capped, None, params).mean_watts
            assert new <= base + 1e-9
    report(f"criterion 06 PASS: 1000 randomized cheaper-variant substitutions, "
           f"dynamic estimate never increased [{b.elapsed:.2f}s]")


def test_criterion_07_cosimulation_equivalence(program_space):
    programs, raw = program_space
    widths = {"x": 4, "y": 4}
    checks = 0
    with budget(300) as b:
        for idx, g in enumerate(programs):
            machine = translate(g)
            flat = flatten(machine, widths)
            slots = flat.slot_names
            xi = slots.index("x") if "x" in slots else None
            yi = slots.index("y") if "y" in slots else None
            for (x, y) in ALL_VALUATIONS:
                ev = evaluate(g, {"x": x, "y": y}, fuel=50_000)
                values = [0] * len(slots)
                if xi is not None:
                    values[xi] = x
                if yi is not None:
                    values[yi] = y
                status, _, _, _, out = kernel.run_flat(flat, values, 50_000, 0, False)
                assert status == kernel.STATUS_DONE, "machine did not settle"
                final = dict(zip(slots, out))
                assert final.get("x", ev.values["x"]) == ev.values["x"], (idx, x, y)
                assert final.get("y", ev.values["y"]) == ev.values["y"], (idx, x, y)
                checks += 1
            if idx % 97 == 0:  # tie the public run_fsm route on a sample
                for (x, y) in ALL_VALUATIONS[:: 64]:
                    res = run_fsm(machine, {"x": x, "y": y}, fuel=50_000,
                                  widths=widths, record=False)
                    ev = evaluate(g, {"x": x, "y": y}, fuel=50_000)
                    assert res.values["x"] == ev.values["x"]
                    assert res.values["y"] == ev.values["y"]
    report(f"criterion 07 PASS: {len(programs)} programs (deduped from {raw}, "
           f"depth <= 3, 4-bit storage) x {len(ALL_VALUATIONS)} valuations = "
           f"{checks} co-simulations agree [{b.elapsed:.1f}s, "
           f"{kernel.kernel_name()} kernel]")


def test_criterion_08_injectivity_witness(program_space):
    programs, raw = program_space
    with budget(300) as b:
        digests: dict[str, int] = {}
        for idx, g in enumerate(programs):
            h = canonical_hash(translate(g))
            if h in digests:
                other = digests[h]
                pytest.fail(f"hash collision between programs {other} and {idx}")
            digests[h] = idx
    report(f"criterion 08 PASS: {len(digests)} pairwise-distinct machine hashes "
           f"over the normalized program space [{b.elapsed:.1f}s]")


def test_criterion_09_noise_scaling():
    with budget(1) as b:
        cal = calibrate_routing(5.895, 5.227, 288, PowerParams(sigma=0.1))
    assert cal.noise_std == 0.1 / 288  # exact float equality
    report(f"criterion 09 PASS: post-calibration std {cal.noise_std!r} "
           f"== 0.1/288 exactly [{b.elapsed:.3f}s]")


def test_criterion_10_fixture_constants_not_recomputed():
    with budget(5) as b:
        chaser_m = translate(parse(fixtures.source_text("chaser_mainloop")),
                             fixtures.stub_counts("chaser"))
        grabber_m = translate(parse(fixtures.source_text("grabber_mainloop")),
                              fixtures.stub_counts("grabber"))
        c, g = state_count(chaser_m), state_count(grabber_m)
        assert c == 139
        assert g == 33
        table = fixtures.resources_table()
        assert table["chaser"] == {"logic_slices": 38087, "flip_flops": 5122}
        assert table["chaser'"] == {"logic_slices": 37661, "flip_flops": 4813}
        assert table["grabber"] == {"logic_slices": 9036, "flip_flops": 3294}
        assert table["grabber'"] == {"logic_slices": 8587, "flip_flops": 2752}
    report(f"criterion 10 PASS: fixture stub totals {c}/{g} match the declared "
           f"139/33; synthesis resource constants consumed as-is "
           f"[{b.elapsed:.3f}s]")


def teardown_module(module):
    print()
    for line in _REPORTED:
        print(line)
