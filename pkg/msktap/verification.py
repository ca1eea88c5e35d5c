"""
Self-checks run by `msktap verify`: kernel normalization, agreement with the brute-force oracle, mass
conservation, consistency with the spatially homogeneous system and decoupling of the two scales.

Each suite returns CheckResult rows. VerificationHooks lets tests inject faults (an unnormalized tabulated
kernel, a tampered operator) to confirm that the checks can fail.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Iterator
import logging
import time

import numpy as np

from msktap.config import SystemConfig, validate_config
from msktap.core import DeterministicRandomCore
from msktap.geometry import WEIGHTINGS, SensitivityDomain, SensitivityTable
from msktap.integrator import Trajectory, run, run_homogeneous
from msktap.kernels import (
    GAIN_FORMS,
    LOSS_FORMS,
    NORMALIZATION_TOLERANCE,
    KernelSet,
    ProliferationKernel,
    RateKernel,
    TransitionKernel,
    normalization_defect,
    normalize_transition,
)
from msktap.operators import (
    Geometries,
    fs_fs_conservative,
    fs_proliferative,
    fs_sfs_conservative,
    sfs_fs_conservative,
    sfs_proliferative,
    sfs_sfs_conservative,
)
from msktap.oracle import OPERATOR_KINDS, oracle_terms
from msktap.scenarios import strip_sfs
from msktap.state import ActivityGrid, DistributionField, PhaseGrid, SpaceGrid, VelocityGrid, total_mass
from msktap.utils import relative_error

logger = logging.getLogger(__name__)

SCALES = ("tiny",)
SUITES = ("normalization", "oracle", "conservation", "homogeneous", "decoupling")
ORACLE_INSTANCES = 20
ORACLE_TOLERANCE = 1e-12
CONSERVATION_TOLERANCE = 1e-10
CONSISTENCY_TOLERANCE = 1e-8

Tamper = Callable[[str, np.ndarray], np.ndarray]

OPERATORS: dict[str, Callable[[DistributionField, DistributionField, KernelSet, Geometries], np.ndarray]] = {
    "fs_fs_conservative": lambda f, phi, kernels, geoms: fs_fs_conservative(f, kernels, geoms),
    "fs_sfs_conservative": lambda f, phi, kernels, geoms: fs_sfs_conservative(f, phi, kernels, geoms),
    "sfs_sfs_conservative": lambda f, phi, kernels, geoms: sfs_sfs_conservative(phi, kernels, geoms, f=f),
    "sfs_fs_conservative": lambda f, phi, kernels, geoms: sfs_fs_conservative(phi, f, kernels, geoms),
    "fs_proliferative": lambda f, phi, kernels, geoms: fs_proliferative(f, kernels, geoms),
    "sfs_proliferative": lambda f, phi, kernels, geoms: sfs_proliferative(phi, f, kernels, geoms),
}

# transition forms drawn for random instances, per scope
_RANDOM_TRANSITIONS = {
    "A": ("identity", "activity-consensus", "velocity-alignment", "tabulated", "crowd-decision"),
    "B": ("identity", "activity-consensus", "tabulated", "signal-avoidance"),
    "C": ("identity", "activity-consensus", "velocity-alignment", "tabulated"),
    "D": ("identity", "activity-consensus", "tabulated", "density-excitation"),
}
_RANDOM_RATES = ("constant", "density-modulated", "activity-weighted")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


@dataclass
class VerificationHooks:
    """Fault injection for negative controls; the defaults inject nothing."""

    extra_transitions: list[TransitionKernel] = field(default_factory=list)
    tamper: Tamper | None = None


# Normalization


def _normalization_grids() -> Iterator[PhaseGrid]:
    space = SpaceGrid(1.0, 1.0, 1, 1, "periodic")
    for directions, speeds in ((1, 1), (2, 1), (4, 1), (4, 2), (8, 1)):
        velocity = VelocityGrid.polar(directions, speeds, 1.0)
        for size in (1, 3, 8):
            yield PhaseGrid(space, velocity, ActivityGrid(size))


def _normalization_cases(rng: DeterministicRandomCore) -> Iterator[TransitionKernel]:
    for grid in _normalization_grids():
        yield TransitionKernel("A", (0, 0), "identity", {}, grid, grid)
        for mu in (0.0, 0.3, 1.0):
            yield TransitionKernel("A", (0, 0), "activity-consensus", {"mu": mu}, grid, grid)
        for strength in (0.0, 0.5, 1.0):
            params = {"lambda": strength, "lambda_activity": 0.3}
            yield TransitionKernel("A", (0, 0), "velocity-alignment", params, grid, grid)
        shape = (grid.velocity.size, grid.activity.size) * 3
        raw = TransitionKernel("A", (0, 0), "tabulated", {"path": "<random>"}, grid, grid, rng.uniform(shape, 0.1, 1.0))
        yield normalize_transition(raw)


def check_normalization(hooks: VerificationHooks | None = None) -> list[CheckResult]:
    """Every built-in transition form integrates to 1 over its outputs for every conditioning tuple."""
    hooks = hooks or VerificationHooks()
    worst: dict[str, float] = {}
    counts: dict[str, int] = {}
    for kernel in _normalization_cases(DeterministicRandomCore("normalization")):
        defect = normalization_defect(kernel)
        worst[kernel.form] = max(worst.get(kernel.form, 0.0), defect)
        counts[kernel.form] = counts.get(kernel.form, 0) + 1
    results = [
        CheckResult(
            "normalization",
            form,
            defect <= NORMALIZATION_TOLERANCE,
            f"max defect {defect:.2e} over {counts[form]} grids",
        )
        for form, defect in worst.items()
    ]
    for kernel in hooks.extra_transitions:
        defect = normalization_defect(kernel)
        results.append(
            CheckResult("normalization", kernel.kernel_id, defect <= NORMALIZATION_TOLERANCE, f"defect {defect:.2e}")
        )
    return results


# Oracle equivalence


@dataclass(frozen=True, eq=False)
class TinyInstance:
    kernels: KernelSet
    f: DistributionField
    phi: DistributionField
    fs_domain: SensitivityDomain
    sfs_domain: SensitivityDomain

    @property
    def geometries(self) -> Geometries:
        space = self.f.grid.space
        return Geometries(
            SensitivityTable.build(self.fs_domain, space, self.f.grid.velocity),
            SensitivityTable.build(self.sfs_domain, space, self.phi.grid.velocity),
        )


def _pick(rng: DeterministicRandomCore, options: tuple | list) -> Any:
    return options[rng.get_random_int(0, len(options) - 1)]


def _random_domain(rng: DeterministicRandomCore) -> SensitivityDomain:
    return SensitivityDomain.from_degrees(
        _pick(rng, (45.0, 90.0, 180.0)), _pick(rng, (0.8, 1.5, 3.0)), _pick(rng, WEIGHTINGS)
    )


def _random_transition(
    rng: DeterministicRandomCore, scope: str, pair: tuple[int, int], candidate: PhaseGrid, field_grid: PhaseGrid
) -> TransitionKernel:
    form = _pick(rng, _RANDOM_TRANSITIONS[scope])
    mu = float(rng.uniform((), 0.1, 0.9))
    params: dict[str, Any] = {
        "identity": {},
        "activity-consensus": {"mu": mu},
        "velocity-alignment": {"lambda": mu, "lambda_activity": 0.3},
        "tabulated": {"path": "<random>"},
        "crowd-decision": {
            "lambda0": 0.2,
            "lambda_activity": 0.6,
            "exit_weight": 1.0,
            "avoid_weight": 0.5,
            "rho_ref": 1.0,
            "rho_max": 0.0,
        },
        "signal-avoidance": {"lambda_signal": mu, "mu": 0.3},
        "density-excitation": {"mu": mu, "rho_ref": 1.0},
    }[form]
    if form != "tabulated":
        return TransitionKernel(scope, pair, form, params, candidate, field_grid)
    shape = (candidate.velocity.size, candidate.activity.size, field_grid.velocity.size, field_grid.activity.size)
    shape += (candidate.velocity.size, candidate.activity.size)
    table = rng.uniform(shape, 0.1, 1.0)
    return normalize_transition(TransitionKernel(scope, pair, form, params, candidate, field_grid, table))


def _random_proliferation(
    rng: DeterministicRandomCore, scope: str, pair: tuple[int, int], candidate: PhaseGrid, field_grid: PhaseGrid
) -> ProliferationKernel:
    gain_form = _pick(rng, sorted(GAIN_FORMS))
    loss_form = _pick(rng, sorted(LOSS_FORMS))
    strength = float(rng.uniform((), 0.2, 1.0))
    gain_params = {key: strength if key == "p" else 0.5 for key in GAIN_FORMS[gain_form]}
    loss_params = {key: strength for key in LOSS_FORMS[loss_form]}
    return ProliferationKernel(scope, pair, gain_form, gain_params, candidate, field_grid, loss_form, loss_params)


def random_instance(rng: DeterministicRandomCore) -> TinyInstance:
    """
    A random system with every operator populated: at most 2 subsystems per scale, 4 cells, 3 velocity nodes
    and 4 activity nodes.

    Args:
        rng (DeterministicRandomCore): Source of randomness

    Returns:
        TinyInstance: Kernels, fields and sensitivity domains
    """
    nx, ny = rng.get_random_int(1, 2), rng.get_random_int(1, 2)
    space = SpaceGrid(float(nx), float(ny), nx, ny, _pick(rng, ("periodic", "absorbing")))
    fs_grid = PhaseGrid(
        space, VelocityGrid.polar(rng.get_random_int(1, 3), 1, 1.0), ActivityGrid(rng.get_random_int(1, 4))
    )
    sfs_grid = PhaseGrid(
        space, VelocityGrid.polar(rng.get_random_int(1, 3), 1, 1.0), ActivityGrid(rng.get_random_int(1, 4))
    )
    n, m = rng.get_random_int(1, 2), rng.get_random_int(1, 2)
    grids = {"fs": fs_grid, "sfs": sfs_grid}
    counts = {"fs": n, "sfs": m}

    rates: dict = {}
    transitions: dict = {}
    proliferations: dict = {}
    for scope, rate_scope, cand_scale, field_scale, conservative in OPERATOR_KINDS.values():
        candidate, field_grid = grids[cand_scale], grids[field_scale]
        for i in range(counts[cand_scale]):
            for h in range(counts[field_scale]):
                pair = (i, h)
                if (rate_scope, pair) not in rates:
                    form = _pick(rng, _RANDOM_RATES)
                    params = {"alpha0": float(rng.uniform((), 0.5, 1.5))}
                    if form != "constant":
                        params["kappa"] = 0.5
                    rates[(rate_scope, pair)] = RateKernel(rate_scope, pair, form, params, candidate, field_grid)
                if conservative:
                    transitions[(scope, pair)] = _random_transition(rng, scope, pair, candidate, field_grid)
                else:
                    proliferations[(scope, pair)] = _random_proliferation(rng, scope, pair, candidate, field_grid)
    kernels = KernelSet(fs_grid, sfs_grid, n, m, rates, transitions, proliferations)
    kernels.validate()

    f = DistributionField(fs_grid, rng.uniform((n, *fs_grid.shape)))
    phi = DistributionField(sfs_grid, rng.uniform((m, *sfs_grid.shape)))
    return TinyInstance(kernels, f, phi, _random_domain(rng), _random_domain(rng))


def operator_error(actual: np.ndarray, gains: np.ndarray, losses: np.ndarray) -> float:
    """Largest deviation from the oracle, relative to the magnitude of the gain and loss terms."""
    difference = float(np.max(np.abs(actual - (gains - losses)))) if actual.size else 0.0
    scale = float(np.max(np.abs(gains) + np.abs(losses))) if actual.size else 0.0
    return difference / scale if scale > 0.0 else difference


def check_oracle(hooks: VerificationHooks | None = None, instances: int = ORACLE_INSTANCES) -> list[CheckResult]:
    """All six operators agree with the brute-force oracle on random tiny instances."""
    hooks = hooks or VerificationHooks()
    rng = DeterministicRandomCore("oracle-equivalence")
    worst = {kind: 0.0 for kind in OPERATOR_KINDS}
    for index in range(instances):
        instance = random_instance(rng)
        geoms = instance.geometries
        for kind, operator in OPERATORS.items():
            actual = operator(instance.f, instance.phi, instance.kernels, geoms)
            if hooks.tamper is not None:
                actual = hooks.tamper(kind, actual)
            gains, losses = oracle_terms(
                kind, instance.f, instance.phi, instance.kernels, instance.fs_domain, instance.sfs_domain
            )
            error = operator_error(actual, gains, losses)
            worst[kind] = max(worst[kind], error)
            logger.debug("instance %d, %s: error %.3e", index, kind, error)
    return [
        CheckResult("oracle", kind, error <= ORACLE_TOLERANCE, f"max error {error:.2e} over {instances} instances")
        for kind, error in worst.items()
    ]


# Conservation, homogeneous consistency, decoupling


def conservation_document(cells: int = 4, steps: int = 100) -> dict[str, Any]:
    """
    A periodic two-scale system with conservative interactions only (n = 2, m = 1, four directions, four
    activity nodes per scale).
    """
    dt = 0.1
    return {
        "system": {"name": "conservation", "n": 2, "m": 1, "seed": "conservation"},
        "space": {"lx": float(cells), "ly": float(cells), "nx": cells, "ny": cells, "boundary": "periodic"},
        "velocity": {"directions": 4, "speeds": 1, "v_max": 1.0},
        "activity": {"fs": {"size": 4}, "sfs": {"size": 4}},
        "sensitivity": {
            "fs": {"half_angle_deg": 90.0, "radius": 2.0},
            "sfs": {"half_angle_deg": 180.0, "radius": 1.5, "weighting": "indicator"},
        },
        "integrator": {"dt": dt, "t_end": steps * dt, "stepper": "heun", "output_stride": steps},
        "kernels": [
            {"scope": "alpha", "pair": [0, 0], "form": "constant", "params": {"alpha0": 0.5}},
            {"scope": "A", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.3}},
            {"scope": "alpha", "pair": [0, 1], "form": "constant", "params": {"alpha0": 0.5}},
            {"scope": "A", "pair": [0, 1], "form": "velocity-alignment", "params": {"lambda": 0.5}},
            {"scope": "alpha", "pair": [1, 0], "form": "activity-weighted", "params": {"alpha0": 0.3, "kappa": 1.0}},
            {"scope": "A", "pair": [1, 0], "form": "activity-consensus", "params": {"mu": 0.5}},
            {"scope": "alpha", "pair": [1, 1], "form": "constant", "params": {"alpha0": 0.4}},
            {"scope": "A", "pair": [1, 1], "form": "identity"},
            {"scope": "gamma_fs_sfs", "pair": [0, 0], "form": "constant", "params": {"alpha0": 0.3}},
            {"scope": "B", "pair": [0, 0], "form": "signal-avoidance", "params": {"lambda_signal": 0.5}},
            {"scope": "gamma_fs_sfs", "pair": [1, 0], "form": "constant", "params": {"alpha0": 0.3}},
            {"scope": "B", "pair": [1, 0], "form": "activity-consensus", "params": {"mu": 0.2}},
            {"scope": "beta", "pair": [0, 0], "form": "density-modulated", "params": {"alpha0": 0.4, "kappa": 0.5}},
            {"scope": "C", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.3}},
            {"scope": "gamma_sfs_fs", "pair": [0, 0], "form": "constant", "params": {"alpha0": 0.3}},
            {"scope": "D", "pair": [0, 0], "form": "density-excitation", "params": {"mu": 0.5}},
            {"scope": "gamma_sfs_fs", "pair": [0, 1], "form": "constant", "params": {"alpha0": 0.3}},
            {"scope": "D", "pair": [0, 1], "form": "velocity-alignment", "params": {"lambda": 0.4}},
        ],
        "initial": {
            "fs": [
                {"kind": "random", "density": 1.0, "activity_mean": 0.3},
                {"kind": "random", "density": 0.5, "activity_mean": 0.7},
            ],
            "sfs": [{"kind": "random", "density": 0.2, "activity_mean": 0.5}],
        },
    }


def consistency_document(steps: int = 200) -> dict[str, Any]:
    """
    A spatially uniform periodic system whose sensitivity domains cover the whole grid and whose kernels do not
    depend on space or velocity, so that every cell follows the homogeneous system.
    """
    dt = 0.05
    uniform = {"kind": "uniform", "activity_spread": 0.25}
    return {
        "system": {"name": "consistency", "n": 2, "m": 1, "seed": "consistency"},
        "space": {"lx": 4.0, "ly": 4.0, "nx": 4, "ny": 4, "boundary": "periodic"},
        "velocity": {"directions": 4, "speeds": 1, "v_max": 1.0},
        "activity": {"fs": {"size": 4}, "sfs": {"size": 3}},
        "sensitivity": {"fs": {"radius": 10.0}, "sfs": {"radius": 10.0}},
        "integrator": {"dt": dt, "t_end": steps * dt, "stepper": "heun", "output_stride": 10},
        "kernels": [
            {"scope": "alpha", "pair": [0, 0], "form": "constant", "params": {"alpha0": 0.6}},
            {"scope": "A", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.3}},
            {"scope": "alpha", "pair": [1, 0], "form": "density-modulated", "params": {"alpha0": 0.5, "kappa": 0.5}},
            {"scope": "A", "pair": [1, 0], "form": "identity"},
            {"scope": "E", "pair": [1, 0], "loss": {"form": "activity-gated", "params": {"l": 0.8}}},
            {"scope": "alpha", "pair": [1, 1], "form": "constant", "params": {"alpha0": 0.4}},
            {"scope": "A", "pair": [1, 1], "form": "activity-consensus", "params": {"mu": 0.2}},
            {"scope": "E", "pair": [1, 1], "gain": {"form": "density-saturated", "params": {"p": 0.5, "sigma": 1.0}}},
            {"scope": "gamma_fs_sfs", "pair": [0, 0], "form": "constant", "params": {"alpha0": 0.4}},
            {"scope": "B", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.4}},
            {"scope": "beta", "pair": [0, 0], "form": "constant", "params": {"alpha0": 0.2}},
            {"scope": "C", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.3}},
            {"scope": "gamma_sfs_fs", "pair": [0, 1], "form": "constant", "params": {"alpha0": 0.5}},
            {"scope": "D", "pair": [0, 1], "form": "density-excitation", "params": {"mu": 0.5}},
            {
                "scope": "F",
                "pair": [0, 1],
                "gain": {"form": "activity-gated", "params": {"p": 0.6}},
                "loss": {"form": "constant", "params": {"l": 0.3}},
            },
        ],
        "initial": {
            "fs": [{**uniform, "density": 1.0, "activity_mean": 0.6}, {**uniform, "density": 0.5}],
            "sfs": [{**uniform, "density": 0.2, "activity_mean": 0.3}],
        },
    }


def decoupling_document(steps: int = 20) -> dict[str, Any]:
    """The conservation system with FS proliferation added and every cross-scale rate set to zero."""
    document = conservation_document(cells=3, steps=steps)
    for block in document["kernels"]:
        if block["scope"] in ("gamma_fs_sfs", "gamma_sfs_fs"):
            block["params"]["alpha0"] = 0.0
    document["kernels"].append({"scope": "E", "pair": [0, 0], "loss": {"form": "constant", "params": {"l": 0.2}}})
    return document


def _mass_drift(config: SystemConfig, trajectory: Trajectory) -> float:
    f0, phi0 = config.initial_fields()
    final = trajectory.final
    if final is None:
        raise RuntimeError("the run returned no final state")
    drifts = []
    for start, end in ((f0, final.f), (phi0, final.phi)):
        if start is None or end is None:
            continue
        for index in range(start.subsystem_count):
            before = total_mass(start, index)
            drifts.append(abs(total_mass(end, index) - before) / before)
    return max(drifts)


def check_conservation(cells: int = 4, steps: int = 100) -> list[CheckResult]:
    """A conservative-only run keeps every subsystem's total mass."""
    config = validate_config(conservation_document(cells, steps))
    drift = _mass_drift(config, run(config))
    return [
        CheckResult(
            "conservation",
            f"{cells}x{cells} periodic, {steps} steps",
            drift <= CONSERVATION_TOLERANCE,
            f"max relative mass drift {drift:.2e}",
        )
    ]


def consistency_error(spatial: Trajectory, homogeneous: Trajectory, label: str) -> float:
    """Worst deviation of any cell's density or mean activity from the homogeneous trajectory."""
    cells = len(spatial.series(label, "t")) // len(homogeneous.series(label, "t"))
    rho = spatial.series(label, "rho").reshape(-1, cells)
    u_mean = spatial.series(label, "u_mean").reshape(-1, cells)
    mass = homogeneous.series(label, "mass")[:, None]
    u_reference = homogeneous.series(label, "u_mean")[:, None]
    return max(
        relative_error(rho, np.broadcast_to(mass, rho.shape)),
        float(np.max(np.abs(u_mean - u_reference))),
    )


def check_homogeneous(steps: int = 200) -> list[CheckResult]:
    """Uniform data under full-coverage sensitivity evolves exactly like the homogeneous system."""
    config = validate_config(consistency_document(steps))
    spatial = run(config)
    homogeneous = run_homogeneous(config.to_homogeneous())
    labels = [f"fs{i}" for i in range(config.n)] + [f"sfs{j}" for j in range(config.m)]
    return [
        CheckResult(
            "homogeneous",
            label,
            error <= CONSISTENCY_TOLERANCE,
            f"max deviation {error:.2e} over {steps} steps",
        )
        for label, error in ((label, consistency_error(spatial, homogeneous, label)) for label in labels)
    ]


def check_decoupling(steps: int = 20) -> list[CheckResult]:
    """With zero cross-scale rates the FS trajectory is bit-identical to the FS-only system."""
    document = decoupling_document(steps)
    coupled = run(validate_config(document))
    alone = run(validate_config(strip_sfs(document)))
    coupled_rows = [row for row in coupled.rows if str(row[1]).startswith("fs")]
    identical = coupled_rows == alone.rows
    if coupled.final is not None and alone.final is not None:
        identical = identical and np.array_equal(coupled.final.f.values, alone.final.f.values)
    return [CheckResult("decoupling", "zero cross-scale rates", identical, f"{len(alone.rows)} rows compared")]


def run_verification(scale: str = "tiny", hooks: VerificationHooks | None = None) -> list[CheckResult]:
    """
    Run every verification suite.

    Args:
        scale (str): Instance scale; only "tiny" is defined
        hooks (VerificationHooks | None): Fault injection for negative controls

    Returns:
        list[CheckResult]: One row per check, in suite order
    """
    if scale not in SCALES:
        raise ValueError(f"unknown scale '{scale}'. Valid scales: {list(SCALES)}")
    hooks = hooks or VerificationHooks()
    suites: list[tuple[str, Callable[[], list[CheckResult]]]] = [
        ("normalization", lambda: check_normalization(hooks)),
        ("oracle", lambda: check_oracle(hooks)),
        ("conservation", check_conservation),
        ("homogeneous", check_homogeneous),
        ("decoupling", check_decoupling),
    ]
    results: list[CheckResult] = []
    for name, suite in suites:
        start = time.perf_counter()
        results.extend(suite())
        logger.info("%s suite finished in %.2fs", name, time.perf_counter() - start)
    return results


def format_results(results: list[CheckResult]) -> list[str]:
    """Pass/fail table lines."""
    width = max([len(f"{result.suite}/{result.name}") for result in results] + [5])
    lines = [f"{'check'.ljust(width)}  result  detail"]
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        lines.append(f"{f'{result.suite}/{result.name}'.ljust(width)}  {status:<6}  {result.detail}")
    passed = sum(result.passed for result in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return lines


NEGATIVE_CONTROLS = ("unnormalized", "tamper")


def unnormalized_kernel() -> TransitionKernel:
    """A tabulated kernel whose slices integrate to 2, as a faulty kernel file would."""
    grid = PhaseGrid(SpaceGrid(1.0, 1.0, 1, 1, "periodic"), VelocityGrid.polar(2, 1, 1.0), ActivityGrid(3))
    normalized = normalize_transition(
        TransitionKernel("A", (0, 0), "tabulated", {"path": "<injected>"}, grid, grid, np.ones((2, 3) * 3))
    )
    table = 2.0 * np.asarray(normalized.table)
    return TransitionKernel("A", (0, 0), "tabulated", {"path": "<injected>"}, grid, grid, table)


def negative_control_hooks(name: str) -> VerificationHooks:
    """Hooks that must make verification fail: an unnormalized kernel, or a perturbed FS-FS operator."""
    if name == "unnormalized":
        return VerificationHooks(extra_transitions=[unnormalized_kernel()])
    if name == "tamper":
        return VerificationHooks(tamper=lambda kind, values: values + 1e-6 if kind == "fs_fs_conservative" else values)
    raise ValueError(f"unknown negative control '{name}'. Valid controls: {list(NEGATIVE_CONTROLS)}")
