"""
Overlapping decomposition of cascade systems into chained subsystems.

A grouping lists consecutive cascade blocks per subsystem. Neighbouring groups
either share their boundary block (the shared states are repeated, expanding
the total dimension) or are merely adjacent. Upstream states a subsystem reads
but does not own become exogenous "missing" states of its local model.
"""

import logging
from typing import Optional, Sequence

import sympy as sp
from pydantic import BaseModel, ConfigDict

from src.dynamics.model import CascadeStructure, SystemModel
from src.errors import CouplingError, GroupingError
from src.grid.box import Box, project_box

logger = logging.getLogger(__name__)


class Subsystem(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    index: int
    model: SystemModel
    blocks: tuple[int, ...]
    owned: tuple[int, ...]
    overlap_in: tuple[int, ...] = ()
    missing: tuple[int, ...] = ()
    input_indices: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return len(self.owned)

    def local_position(self, global_index: int) -> int:
        return self.owned.index(global_index)


class OverlapMap(BaseModel):
    """Index correspondence between subsystem `downstream` and its upstream neighbour."""

    model_config = ConfigDict(frozen=True)

    upstream: int
    downstream: int
    shared: tuple[int, ...]
    upstream_positions: tuple[int, ...]
    downstream_positions: tuple[int, ...]
    missing: tuple[int, ...]
    missing_positions: tuple[int, ...]


class Decomposition(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: SystemModel
    structure: CascadeStructure
    grouping: tuple[tuple[int, ...], ...]
    subsystems: tuple[Subsystem, ...]
    overlaps: tuple[OverlapMap, ...]

    @property
    def expanded_dim(self) -> int:
        return sum(s.n for s in self.subsystems)

    @property
    def overlap_count(self) -> int:
        return sum(len(o.shared) for o in self.overlaps)

    def overlap_into(self, i: int) -> Optional[OverlapMap]:
        """Overlap map between subsystem i and subsystem i - 1 (None for the head)."""
        return self.overlaps[i - 1] if i > 0 else None


def _state_dependencies(model: SystemModel, rows: Sequence[int]) -> set[int]:
    position = {s: k for k, s in enumerate(model.states)}
    found = set()
    for r in rows:
        found |= {position[s] for s in model.equations[r].free_symbols if s in position}
    return found


def check_cascade(model: SystemModel, structure: CascadeStructure) -> None:
    """Every block reads only itself and the couplings declared toward its upstream block."""
    for b, block in enumerate(structure.blocks):
        allowed = set(block) | set(structure.couplings[b])
        extra = _state_dependencies(model, block) - allowed
        if extra:
            raise CouplingError(
                f"Block {b + 1} of {model.name} reads states {sorted(i + 1 for i in extra)} "
                f"outside itself and its immediate upstream coupling"
            )


def _check_grouping(grouping: Sequence[Sequence[int]], structure: CascadeStructure) -> tuple[tuple[int, ...], ...]:
    groups = tuple(tuple(int(b) for b in g) for g in grouping)
    last_block = len(structure.blocks) - 1
    if not groups or any(not g for g in groups):
        raise GroupingError("Every group must contain at least one block")
    for g in groups:
        if list(g) != list(range(g[0], g[-1] + 1)) or g[0] < 0 or g[-1] > last_block:
            raise GroupingError(f"Group {[b + 1 for b in g]} is not a run of consecutive blocks of the cascade")
    if groups[0][0] != 0 or groups[-1][-1] != last_block:
        raise GroupingError(f"Grouping must start at block 1 and end at block {last_block + 1}")
    for prev, nxt in zip(groups, groups[1:]):
        if nxt[0] not in (prev[-1], prev[-1] + 1) or nxt[-1] <= prev[-1]:
            raise GroupingError(
                f"Groups {[b + 1 for b in prev]} and {[b + 1 for b in nxt]} neither share the boundary block "
                f"nor are adjacent"
            )
    return groups


def decompose(
    model: SystemModel,
    structure: Optional[CascadeStructure] = None,
    grouping: Optional[Sequence[Sequence[int]]] = None,
) -> Decomposition:
    """
    Split a cascade model into chained subsystems.

    Each subsystem copies the global equations of the states it owns. Upstream
    states those equations read are exposed as exogenous symbols, bounded by the
    projection of X. State and input boxes are projections of X and U.

    Args:
        structure: cascade blocks (default: the model's own structure)
        grouping: block indices per subsystem, 0-based (default: all blocks in one group)
    """
    structure = structure or model.structure or CascadeStructure.single(model.n)
    grouping = grouping or [list(range(len(structure.blocks)))]
    check_cascade(model, structure)
    groups = _check_grouping(grouping, structure)

    subsystems: list[Subsystem] = []
    overlaps: list[OverlapMap] = []
    for i, group in enumerate(groups):
        owned = tuple(sorted(k for b in group for k in structure.blocks[b]))
        missing = tuple(sorted(_state_dependencies(model, owned) - set(owned)))
        if missing:
            upstream_block = set(structure.blocks[group[0] - 1]) if group[0] > 0 else set()
            if not set(missing) <= upstream_block:
                raise CouplingError(
                    f"Subsystem {i + 1} reads states {[k + 1 for k in missing]} beyond the block "
                    f"immediately upstream of its first block"
                )

        used_inputs = set().union(*(model.equations[k].free_symbols for k in owned)) & set(model.inputs)
        input_indices = tuple(k for k, u in enumerate(model.inputs) if u in used_inputs)
        local_blocks = [tuple(owned.index(k) for k in structure.blocks[b]) for b in group]
        local = SystemModel(
            name=model.name if len(groups) == 1 else f"{model.name}/S{i + 1}",
            states=tuple(model.states[k] for k in owned),
            inputs=tuple(model.inputs[k] for k in input_indices),
            exogenous=tuple(model.states[k] for k in missing),
            equations=tuple(model.equations[k] for k in owned),
            state_box=project_box(model.state_box, owned),
            input_box=project_box(model.input_box, input_indices),
            exogenous_box=project_box(model.state_box, missing),
            structure=CascadeStructure(blocks=local_blocks),
        )

        overlap_in: tuple[int, ...] = ()
        if i > 0:
            prev = subsystems[-1]
            overlap_in = tuple(k for k in owned if k in prev.owned)
            if not set(missing) <= set(prev.owned):
                raise GroupingError(
                    f"Subsystem {i + 1} needs states {[k + 1 for k in missing]} that subsystem {i} does not own"
                )
            overlaps.append(
                OverlapMap(
                    upstream=i - 1,
                    downstream=i,
                    shared=overlap_in,
                    upstream_positions=tuple(prev.owned.index(k) for k in overlap_in),
                    downstream_positions=tuple(owned.index(k) for k in overlap_in),
                    missing=missing,
                    missing_positions=tuple(prev.owned.index(k) for k in missing),
                )
            )
        subsystems.append(
            Subsystem(
                index=i,
                model=local,
                blocks=group,
                owned=owned,
                overlap_in=overlap_in,
                missing=missing,
                input_indices=input_indices,
            )
        )

    decomposition = Decomposition(
        model=model,
        structure=structure,
        grouping=groups,
        subsystems=tuple(subsystems),
        overlaps=tuple(overlaps),
    )
    logger.info(
        f"Decomposed {model.name} (n={model.n}) into {len(subsystems)} subsystems, "
        f"owned {[len(s.owned) for s in subsystems]}, expanded dimension {decomposition.expanded_dim}"
    )
    return decomposition
