"""Deterministic simulation of cells with join-order leader election.

Each cell owns a block of IP addresses. The first node to join an empty
cell becomes its leader; every join is handed the lowest free address and
bumps the cell's routing-table version by one, and the updated table is
sent to the joiner. When the leader leaves, the most recent joiner still
present takes over. Leaves return the address to the back of the free list
and do not change the version.
"""
import ipaddress
import logging
from enum import Enum
from typing import Annotated, Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, StringConstraints, ValidationError

from src.config import config

from .coverage import IpAllocation, cell_block
from .errors import (
    CsvFormatError,
    DuplicateJoinError,
    InvalidInputError,
    InvariantViolation,
    NodeSenseError,
    NotAMemberError,
    PoolExhaustedError,
    ScriptError,
)

logger = logging.getLogger("node_sense.cell_network")

NodeId = Annotated[str, StringConstraints(min_length=1)]
Address = ipaddress.IPv4Address


class EventOp(str, Enum):
    JOIN = "join"
    LEAVE = "leave"


class Event(BaseModel):
    model_config = ConfigDict(frozen=True)

    time: int
    op: EventOp
    cell: int = Field(..., ge=0)
    node: NodeId


class RoutingTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    version: int = Field(0, ge=0)
    entries: Dict[str, Address] = Field(default_factory=dict)


class CellState(BaseModel):
    """One cell: its original address block, free pool, members in join order and table."""
    model_config = ConfigDict(frozen=True)

    cell_id: int
    block: Tuple[Address, ...]
    ip_pool: Tuple[Address, ...]
    members: Tuple[str, ...] = ()
    leader: Optional[str] = None
    table: RoutingTable = Field(default_factory=RoutingTable)

    @classmethod
    def empty(cls, cell_id: int, block: Sequence[Address]) -> "CellState":
        return cls(cell_id=cell_id, block=tuple(block), ip_pool=tuple(block))


class LogEntry(BaseModel):
    """State delta produced by one event.

    For joins ``table`` is the snapshot sent to the joining node.
    """
    model_config = ConfigDict(frozen=True)

    time: int
    op: EventOp
    cell: int
    node: str
    result: str
    leader: Optional[str]
    version: int
    ip: Optional[Address] = None
    table: Optional[Dict[str, Address]] = None


class SimulationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    states: Tuple[CellState, ...]
    log: Tuple[LogEntry, ...]


def join(state: CellState, node: str, time: int = 0) -> Tuple[CellState, LogEntry]:
    if node in state.members:
        raise DuplicateJoinError(f"node {node!r} is already a member of cell {state.cell_id}")
    if not state.ip_pool:
        raise PoolExhaustedError(f"cell {state.cell_id} has no free address for {node!r}")

    ip, pool = state.ip_pool[0], state.ip_pool[1:]
    first = not state.members
    leader = node if first else state.leader
    entries = {**state.table.entries, node: ip}
    table = RoutingTable(version=state.table.version + 1, entries=entries)

    new_state = state.model_copy(update={
        "ip_pool": pool,
        "members": state.members + (node,),
        "leader": leader,
        "table": table,
    })
    entry = LogEntry(
        time=time,
        op=EventOp.JOIN,
        cell=state.cell_id,
        node=node,
        result="leader" if first else "joined",
        leader=leader,
        version=table.version,
        ip=ip,
        table=dict(entries),
    )
    return new_state, entry


def leave(state: CellState, node: str, time: int = 0) -> Tuple[CellState, LogEntry]:
    if node not in state.members:
        raise NotAMemberError(f"node {node!r} is not a member of cell {state.cell_id}")

    members = tuple(m for m in state.members if m != node)
    entries = {k: v for k, v in state.table.entries.items() if k != node}
    ip = state.table.entries[node]

    if not members:
        leader, result = None, "emptied"
    elif node == state.leader:
        leader, result = members[-1], "handoff"
        logger.info(f"Cell {state.cell_id}: leader {node} left, {leader} takes over")
    else:
        leader, result = state.leader, "left"

    new_state = state.model_copy(update={
        "ip_pool": state.ip_pool + (ip,),
        "members": members,
        "leader": leader,
        "table": RoutingTable(version=state.table.version, entries=entries),
    })
    entry = LogEntry(
        time=time,
        op=EventOp.LEAVE,
        cell=state.cell_id,
        node=node,
        result=result,
        leader=leader,
        version=state.table.version,
        ip=ip,
    )
    return new_state, entry


def check_cell_invariants(state: CellState):
    """Raise InvariantViolation unless leader, membership and addresses are consistent."""
    problems = []
    if bool(state.members) != (state.leader is not None):
        problems.append("leader must be present exactly when the cell has members")
    if state.leader is not None and state.leader not in state.members:
        problems.append(f"leader {state.leader!r} is not a member")
    if len(set(state.members)) != len(state.members):
        problems.append("duplicate members")
    if set(state.table.entries) != set(state.members):
        problems.append("routing table entries do not match members")

    assigned = list(state.table.entries.values())
    free = list(state.ip_pool)
    if len(set(assigned)) != len(assigned):
        problems.append("an address is assigned twice")
    if len(set(free)) != len(free):
        problems.append("an address is listed twice in the free pool")
    if set(assigned) & set(free):
        problems.append("an address is both assigned and free")
    if sorted(assigned + free) != sorted(state.block):
        problems.append("assigned and free addresses do not make up the original block")

    if problems:
        raise InvariantViolation(f"cell {state.cell_id}: " + "; ".join(problems))


class CellSimulator:
    """Applies join/leave events to a fixed set of cells, in order."""

    def __init__(self, allocation: IpAllocation, cells: Optional[int] = None,
                 check_invariants: Optional[bool] = None):
        cells = allocation.cells if cells is None else cells
        if not 0 <= cells <= allocation.cells:
            raise InvalidInputError(f"{cells} cells requested but the allocation covers {allocation.cells}")
        self.check_invariants = (config.simulation.check_invariants
                                 if check_invariants is None else check_invariants)
        self.states: List[CellState] = [CellState.empty(i, cell_block(allocation, i))
                                        for i in range(cells)]
        self.log: List[LogEntry] = []
        self._joins = [0] * cells
        self._last_time: Optional[int] = None

    def _cell_of(self, node: str) -> Optional[int]:
        for state in self.states:
            if node in state.members:
                return state.cell_id
        return None

    def apply(self, event: Event) -> LogEntry:
        if self._last_time is not None and event.time <= self._last_time:
            raise InvalidInputError(f"time {event.time} does not follow {self._last_time}")
        if event.cell >= len(self.states):
            raise InvalidInputError(f"cell {event.cell} out of range 0..{len(self.states) - 1}")

        state = self.states[event.cell]
        if event.op is EventOp.JOIN:
            current = self._cell_of(event.node)
            if current is not None and current != event.cell:
                raise DuplicateJoinError(f"node {event.node!r} is already a member of cell {current}")
            new_state, entry = join(state, event.node, event.time)
            self._joins[event.cell] += 1
        else:
            new_state, entry = leave(state, event.node, event.time)

        if self.check_invariants:
            check_cell_invariants(new_state)
            if new_state.table.version != self._joins[event.cell]:
                raise InvariantViolation(
                    f"cell {event.cell}: version {new_state.table.version} "
                    f"!= {self._joins[event.cell]} joins"
                )

        self.states[event.cell] = new_state
        self._last_time = event.time
        self.log.append(entry)
        return entry

    def run(self, events: Iterable[Event]) -> SimulationResult:
        for index, event in enumerate(events):
            try:
                self.apply(event)
            except NodeSenseError as e:
                raise ScriptError(index, e) from e
        logger.debug(f"Applied {len(self.log)} events to {len(self.states)} cells")
        return SimulationResult(states=tuple(self.states), log=tuple(self.log))


def run_script(events: Sequence[Event], allocation: IpAllocation, cells: int,
               check_invariants: Optional[bool] = None) -> SimulationResult:
    """Fold the events over initially empty cells; identical inputs give identical logs."""
    return CellSimulator(allocation, cells, check_invariants).run(events)


def events_from_rows(rows: Iterable[Tuple[int, Mapping[str, str]]]) -> List[Event]:
    """Build events from (line number, row) pairs with keys time, op, cell, node."""
    events = []
    for line, row in rows:
        try:
            events.append(Event(
                time=int(row["time"]),
                op=EventOp(row["op"].strip().lower()),
                cell=int(row["cell"]),
                node=row["node"].strip(),
            ))
        except (KeyError, ValueError, ValidationError) as e:
            raise CsvFormatError(f"bad event row {dict(row)}: {e}", line=line) from e
    return events


def state_summary(state: CellState) -> Dict[str, Any]:
    return {
        "cell": state.cell_id,
        "leader": state.leader,
        "members": list(state.members),
        "version": state.table.version,
        "table": {node: str(ip) for node, ip in state.table.entries.items()},
        "ip_pool": [str(ip) for ip in state.ip_pool],
    }


LOG_COLUMNS = ("time", "op", "cell", "node", "result", "leader", "version", "ip")


def log_row(entry: LogEntry) -> Dict[str, Any]:
    return {
        "time": entry.time,
        "op": entry.op.value,
        "cell": entry.cell,
        "node": entry.node,
        "result": entry.result,
        "leader": entry.leader or "",
        "version": entry.version,
        "ip": "" if entry.ip is None else str(entry.ip),
    }
