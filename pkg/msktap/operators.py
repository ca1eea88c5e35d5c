"""
Collision operators of the multiscale system.

Every conservative operator shares one bilinear term: for each candidate state (x, v_c, u_c) the field subsystem
is integrated over the candidate's sensitivity domain, multiplied by the rate and the candidate weight, and the
resulting mass Q is removed from the candidate node (loss) and redistributed by the transition kernel (gain).
Because gain and loss are built from the same Q, every conservative output integrates to zero per cell.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging

import numpy as np

from msktap.core import ConfigurationError
from msktap.geometry import SensitivityTable
from msktap.kernels import (
    KernelSet,
    LocalContext,
    ProliferationKernel,
    RateKernel,
    TransitionKernel,
    check_normalized,
    net_proliferation_table,
    rate_table,
    transition_targets,
)
from msktap.state import DistributionField, PhaseGrid

logger = logging.getLogger(__name__)

# values shaped (subsystem, cell, velocity node, activity node), in density per unit time
OperatorOutput = np.ndarray


@dataclass(frozen=True, eq=False)
class Geometries:
    """Precomputed sensitivity weights of each scale; sfs is None when the system has no SFS."""

    fs: SensitivityTable
    sfs: SensitivityTable | None = None

    @classmethod
    def homogeneous(cls) -> "Geometries":
        return cls(SensitivityTable.homogeneous(), SensitivityTable.homogeneous())


def _perceived(table: SensitivityTable, field_values: np.ndarray) -> np.ndarray:
    # S[x, d, v*, u*]: field distribution seen from cell x by a particle heading along node d
    return np.einsum("dxy,yab->xdab", table.weights, field_values)


def _conservative_term(
    rate: RateKernel,
    transition: TransitionKernel,
    table: SensitivityTable,
    cand_values: np.ndarray,
    field_values: np.ndarray,
    context: LocalContext | None,
) -> np.ndarray:
    cand_grid: PhaseGrid = rate.candidate
    wc = cand_grid.weights
    wf = rate.field_grid.weights
    n_cells, n_vel, n_act = cand_values.shape

    mass = (
        rate_table(rate, context)
        * (cand_values * wc)[:, :, :, None, None]
        * _perceived(table, field_values)[:, :, None, :, :]
        * wf
    )
    loss = mass.sum(axis=(3, 4)) / wc

    if transition.table is not None:
        check_normalized(transition)
        gain = np.einsum("xabcd,abcdvu->xvu", mass, transition.table)
    else:
        n_out = n_vel * n_act
        targets = np.broadcast_to(transition_targets(transition, context), mass.shape)
        offsets = (np.arange(n_cells) * n_out)[:, None, None, None, None]
        flat = np.bincount((targets + offsets).ravel(), weights=mass.ravel(), minlength=n_cells * n_out)
        gain = flat.reshape(n_cells, n_vel, n_act) / wc
    return gain - loss


def _proliferative_term(
    rate: RateKernel,
    kernel: ProliferationKernel,
    table: SensitivityTable,
    test_values: np.ndarray,
    field_values: np.ndarray,
    context: LocalContext | None,
) -> np.ndarray:
    coupling = (
        rate_table(rate, context)
        * net_proliferation_table(kernel, context)
        * _perceived(table, field_values)[:, :, None, :, :]
        * rate.field_grid.weights
    )
    return coupling.sum(axis=(3, 4)) * test_values


def _context_for(
    kernels: KernelSet, f: DistributionField | None, phi: DistributionField | None, context: LocalContext | None
) -> LocalContext | None:
    if context is not None:
        return context
    if any(kernel.needs_context for kernel in kernels.all_kernels()):
        return LocalContext.build(f, phi, kernels.n)
    return None


def _conservative(
    scope: str,
    rate_scope: str,
    cand: DistributionField,
    field_dist: DistributionField,
    kernels: KernelSet,
    table: SensitivityTable,
    context: LocalContext | None,
) -> OperatorOutput:
    output = np.zeros(cand.values.shape)
    for i in range(cand.subsystem_count):
        for h in range(field_dist.subsystem_count):
            rate = kernels.rate(rate_scope, (i, h))
            if rate is None or rate.is_zero:
                continue
            transition = kernels.transition(scope, (i, h))
            if transition is None:
                raise ConfigurationError(f"rate {rate.kernel_id} is nonzero but {scope}[{i},{h}] is missing", "kernels")
            output[i] += _conservative_term(rate, transition, table, cand.values[i], field_dist.values[h], context)
    return output


def _proliferative(
    scope: str,
    rate_scope: str,
    test: DistributionField,
    field_dist: DistributionField,
    kernels: KernelSet,
    table: SensitivityTable,
    context: LocalContext | None,
) -> OperatorOutput:
    output = np.zeros(test.values.shape)
    for i in range(test.subsystem_count):
        for h in range(field_dist.subsystem_count):
            rate = kernels.rate(rate_scope, (i, h))
            kernel = kernels.proliferation(scope, (i, h))
            if rate is None or rate.is_zero or kernel is None:
                continue
            output[i] += _proliferative_term(rate, kernel, table, test.values[i], field_dist.values[h], context)
    return output


def _require_sfs(geoms: Geometries) -> SensitivityTable:
    if geoms.sfs is None:
        raise ConfigurationError("the SFS sensitivity domain is not configured", "sensitivity.sfs")
    return geoms.sfs


def fs_fs_conservative(
    f: DistributionField, kernels: KernelSet, geoms: Geometries, context: LocalContext | None = None
) -> OperatorOutput:
    """
    FS-FS conservative operator A_i: candidates and field particles both from the FSs, rates alpha, kernels A.

    Args:
        f (DistributionField): FS distribution
        kernels (KernelSet): Kernel set
        geoms (Geometries): Sensitivity weights
        context (LocalContext | None): Precomputed local context; built from f when a kernel needs it

    Returns:
        OperatorOutput: Values shaped like f
    """
    context = _context_for(kernels, f, None, context)
    return _conservative("A", "alpha", f, f, kernels, geoms.fs, context)


def fs_sfs_conservative(
    f: DistributionField,
    phi: DistributionField,
    kernels: KernelSet,
    geoms: Geometries,
    context: LocalContext | None = None,
) -> OperatorOutput:
    """FS candidates interacting with SFS field particles (rates gamma_fs_sfs, kernels B)."""
    context = _context_for(kernels, f, phi, context)
    return _conservative("B", "gamma_fs_sfs", f, phi, kernels, geoms.fs, context)


def sfs_sfs_conservative(
    phi: DistributionField,
    kernels: KernelSet,
    geoms: Geometries,
    context: LocalContext | None = None,
    f: DistributionField | None = None,
) -> OperatorOutput:
    """SFS-SFS conservative operator C_j. f only feeds the local context; without it the FSs count as empty."""
    context = _context_for(kernels, f, phi, context)
    return _conservative("C", "beta", phi, phi, kernels, _require_sfs(geoms), context)


def sfs_fs_conservative(
    phi: DistributionField,
    f: DistributionField,
    kernels: KernelSet,
    geoms: Geometries,
    context: LocalContext | None = None,
) -> OperatorOutput:
    """SFS candidates interacting with FS field particles (rates gamma_sfs_fs, kernels D)."""
    context = _context_for(kernels, f, phi, context)
    return _conservative("D", "gamma_sfs_fs", phi, f, kernels, _require_sfs(geoms), context)


def fs_proliferative(
    f: DistributionField, kernels: KernelSet, geoms: Geometries, context: LocalContext | None = None
) -> OperatorOutput:
    """
    Proliferative/destructive operator E_i. The test particle keeps its own state; its distribution multiplies
    the net gain P - L integrated over the field.

    Args:
        f (DistributionField): FS distribution
        kernels (KernelSet): Kernel set
        geoms (Geometries): Sensitivity weights
        context (LocalContext | None): Local context

    Returns:
        OperatorOutput: Values shaped like f
    """
    context = _context_for(kernels, f, None, context)
    return _proliferative("E", "alpha", f, f, kernels, geoms.fs, context)


def sfs_proliferative(
    phi: DistributionField,
    f: DistributionField,
    kernels: KernelSet,
    geoms: Geometries,
    context: LocalContext | None = None,
) -> OperatorOutput:
    """Proliferative/destructive operator F_j: FS particles source or remove SFS particles."""
    context = _context_for(kernels, f, phi, context)
    return _proliferative("F", "gamma_sfs_fs", phi, f, kernels, _require_sfs(geoms), context)


def full_rhs(
    f: DistributionField,
    phi: DistributionField | None,
    kernels: KernelSet,
    geoms: Geometries,
    threads: int = 1,
) -> tuple[OperatorOutput, OperatorOutput | None]:
    """
    Collision right-hand sides (A + B + E for the FSs, C + D + F for the SFSs).

    Args:
        f (DistributionField): FS distribution
        phi (DistributionField | None): SFS distribution, None when the system has no SFS
        kernels (KernelSet): Kernel set
        geoms (Geometries): Sensitivity weights
        threads (int): Worker count; the result does not depend on it

    Returns:
        tuple[OperatorOutput, OperatorOutput | None]: FS and SFS right-hand sides
    """
    context = _context_for(kernels, f, phi, None)
    tasks = {"A": lambda: fs_fs_conservative(f, kernels, geoms, context)}
    tasks["E"] = lambda: fs_proliferative(f, kernels, geoms, context)
    if phi is not None:
        tasks["B"] = lambda: fs_sfs_conservative(f, phi, kernels, geoms, context)
        tasks["C"] = lambda: sfs_sfs_conservative(phi, kernels, geoms, context)
        tasks["D"] = lambda: sfs_fs_conservative(phi, f, kernels, geoms, context)
        tasks["F"] = lambda: sfs_proliferative(phi, f, kernels, geoms, context)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {name: pool.submit(task) for name, task in tasks.items()}
            results = {name: future.result() for name, future in futures.items()}
    else:
        results = {name: task() for name, task in tasks.items()}

    # fixed summation order keeps the result independent of scheduling
    fs_rhs = results["A"] + results["B"] + results["E"] if phi is not None else results["A"] + results["E"]
    sfs_rhs = results["C"] + results["D"] + results["F"] if phi is not None else None
    return fs_rhs, sfs_rhs


def homogeneous_rhs(
    f: np.ndarray, phi: np.ndarray | None, kernels: KernelSet
) -> tuple[np.ndarray, np.ndarray | None]:
    """
    Right-hand sides of the spatially homogeneous system, where distributions depend on activity only.

    Args:
        f (np.ndarray): FS activity distributions, shape (n, Nu)
        phi (np.ndarray | None): SFS activity distributions, shape (m, Nw)
        kernels (KernelSet): Kernel set built on homogeneous grids

    Returns:
        tuple[np.ndarray, np.ndarray | None]: Right-hand sides shaped like the inputs
    """
    if not kernels.fs_grid.is_homogeneous or (kernels.sfs_grid is not None and not kernels.sfs_grid.is_homogeneous):
        raise ConfigurationError("homogeneous_rhs needs kernels built on homogeneous grids", "kernels")
    violations = kernels.homogeneous_violations()
    if violations:
        raise ConfigurationError(f"kernels depend on space or velocity: {violations}", "kernels")
    f_field = DistributionField(kernels.fs_grid, np.asarray(f, dtype=float)[:, None, None, :])
    phi_field = None
    if phi is not None and kernels.sfs_grid is not None:
        phi_field = DistributionField(kernels.sfs_grid, np.asarray(phi, dtype=float)[:, None, None, :])
    fs_rhs, sfs_rhs = full_rhs(f_field, phi_field, kernels, Geometries.homogeneous())
    return fs_rhs[:, 0, 0, :], None if sfs_rhs is None else sfs_rhs[:, 0, 0, :]
