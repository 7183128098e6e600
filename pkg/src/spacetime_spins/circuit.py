"""Circuit intermediate representation and the line-oriented text format.

Time convention: operations before the first ``TICK`` happen at ``t = 0``
and every ``TICK`` advances ``t`` by one, so a program with ``T`` ticks has
timesteps ``0..T`` and error layers ``0..T-1`` (``tau = layer + 0.5``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .pauli import SpacetimePauli

__all__ = [
    "CircuitError",
    "OverlappingSupport",
    "UnknownGate",
    "BadCoordinate",
    "OddDuration",
    "InvalidObservable",
    "UnknownBuiltin",
    "BadParams",
    "Operation",
    "ObservableDecl",
    "Circuit",
    "parse",
    "render",
    "validate",
    "builtin",
    "conjugate_local",
    "UNITARIES",
]


class CircuitError(ValueError):
    pass


class OverlappingSupport(CircuitError):
    pass


class UnknownGate(CircuitError):
    pass


class BadCoordinate(CircuitError):
    pass


class OddDuration(CircuitError):
    pass


class InvalidObservable(CircuitError):
    pass


class UnknownBuiltin(CircuitError):
    pass


class BadParams(CircuitError):
    pass


# number of qubits each unitary acts on
UNITARIES = {"I": 1, "H": 1, "S": 1, "CX": 2, "CZ": 2, "SWAP": 2}


@dataclass(frozen=True, order=True)
class Operation:
    """One circuit action at integer time ``t``.

    ``kind`` is ``"R"`` (reset), ``"M"`` (measurement) or ``"U"`` (unitary).
    ``name`` holds the basis for resets/measurements (``"Z"``, ``"X"``,
    ``"ZZ"``, ``"XX"``) and the gate name for unitaries.
    """

    t: int
    qubits: tuple[int, ...]
    kind: str
    name: str

    def text(self) -> str:
        q = " ".join(map(str, self.qubits))
        if self.kind == "U":
            return f"{self.name} {q}"
        return f"{self.kind} {self.name} {q}"


@dataclass(frozen=True)
class ObservableDecl:
    name: str
    representative: SpacetimePauli

    def text(self) -> str:
        return f"OBS {self.name} {self.representative.render()}"


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    duration: int
    ops: tuple[Operation, ...]
    observables: tuple[ObservableDecl, ...] = ()
    # builtin family that produced the circuit, not part of structural equality
    family: str | None = field(default=None, compare=False)

    @property
    def N(self) -> int:
        return self.num_qubits

    @property
    def T(self) -> int:
        return self.duration

    def at(self, t: int) -> list[Operation]:
        return [op for op in self.ops if op.t == t]

    def by_time(self) -> list[list[Operation]]:
        out: list[list[Operation]] = [[] for _ in range(self.duration + 1)]
        for op in self.ops:
            out[op.t].append(op)
        return out

    def observable(self, name: str) -> ObservableDecl:
        for obs in self.observables:
            if obs.name == name:
                return obs
        raise KeyError(name)

    def pauli(self, text: str) -> SpacetimePauli:
        """Parse ``P q@tau`` tokens on this circuit's grid."""
        return SpacetimePauli.parse(self.num_qubits, self.duration, text)


# -- Clifford action ----------------------------------------------------------

def conjugate_local(name: str, bits: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Phase-free conjugation ``U P U^dagger`` on the gate's qubits.

    ``bits`` holds one ``(x, z)`` pair per gate qubit, in gate order (control
    first for ``CX``).
    """
    if name == "I":
        return list(bits)
    if name == "H":
        (x, z), = bits
        return [(z, x)]
    if name == "S":
        (x, z), = bits
        return [(x, z ^ x)]
    (xc, zc), (xt, zt) = bits
    if name == "CX":
        return [(xc, zc ^ zt), (xt ^ xc, zt)]
    if name == "CZ":
        return [(xc, zc ^ xt), (xt, zt ^ xc)]
    if name == "SWAP":
        return [(xt, zt), (xc, zc)]
    raise UnknownGate(name)


# -- text format --------------------------------------------------------------

def _expand(tokens: list[str], lineno: int) -> tuple[str, str, list[tuple[int, ...]]]:
    head = tokens[0].upper()
    if head in ("R", "M"):
        if len(tokens) < 3:
            raise UnknownGate(f"line {lineno}: missing basis or qubit")
        basis = tokens[1].upper()
        qs = _ints(tokens[2:], lineno)
        if head == "R" and basis in ("X", "Z"):
            return "R", basis, [(q,) for q in qs]
        if head == "M" and basis in ("X", "Z"):
            return "M", basis, [(q,) for q in qs]
        if head == "M" and basis in ("XX", "ZZ"):
            if len(qs) % 2:
                raise BadCoordinate(f"line {lineno}: odd number of qubits for M {basis}")
            return "M", basis, [tuple(qs[i:i + 2]) for i in range(0, len(qs), 2)]
        raise UnknownGate(f"line {lineno}: unsupported basis {tokens[1]!r} for {head}")
    if head in UNITARIES:
        arity = UNITARIES[head]
        qs = _ints(tokens[1:], lineno)
        if not qs or len(qs) % arity:
            raise BadCoordinate(f"line {lineno}: {head} needs qubits in groups of {arity}")
        return "U", head, [tuple(qs[i:i + arity]) for i in range(0, len(qs), arity)]
    raise UnknownGate(f"line {lineno}: unknown instruction {tokens[0]!r}")


def _ints(tokens: Iterable[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError as exc:
        raise BadCoordinate(f"line {lineno}: {exc}") from None


def parse(text: str, require_even_duration: bool = False) -> Circuit:
    """Parse the text format into a validated :class:`Circuit`.

    Untouched qubits receive explicit ``I`` operations. ``require_even_duration``
    enforces an even ``T`` whenever observables are declared.
    """
    n = None
    t = 0
    raw: list[Operation] = []
    obs_lines: list[tuple[int, list[str]]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0].upper()
        if head == "QUBITS":
            if n is not None or len(tokens) != 2:
                raise CircuitError(f"line {lineno}: malformed QUBITS header")
            n = _ints(tokens[1:], lineno)[0]
            continue
        if n is None:
            raise CircuitError(f"line {lineno}: QUBITS header must come first")
        if head == "TICK":
            t += 1
            continue
        if head == "OBS":
            obs_lines.append((lineno, tokens[1:]))
            continue
        kind, name, groups = _expand(tokens, lineno)
        for qs in groups:
            raw.append(Operation(t, qs, kind, name))
    if n is None:
        raise CircuitError("missing QUBITS header")
    observables = []
    for lineno, toks in obs_lines:
        if not toks:
            raise CircuitError(f"line {lineno}: OBS needs a name")
        try:
            rep = SpacetimePauli.parse(n, t, " ".join(toks[1:]))
        except ValueError as exc:
            raise BadCoordinate(f"line {lineno}: {exc}") from None
        observables.append(ObservableDecl(toks[0], rep))
    circ = make_circuit(n, t, raw, observables)
    if require_even_duration and circ.observables and circ.duration % 2:
        raise OddDuration(f"observables declared with odd T={circ.duration}")
    return circ


def make_circuit(
    num_qubits: int,
    duration: int,
    ops: Iterable[Operation],
    observables: Iterable[ObservableDecl] = (),
    family: str | None = None,
) -> Circuit:
    """Check support and coordinates, insert idles, and freeze a circuit."""
    busy: dict[tuple[int, int], Operation] = {}
    out = []
    for op in ops:
        if op.kind == "U" and op.name == "I":
            continue
        if not 0 <= op.t <= duration:
            raise BadCoordinate(f"{op.text()} at t={op.t} outside [0, {duration}]")
        if len(set(op.qubits)) != len(op.qubits):
            raise OverlappingSupport(f"{op.text()} at t={op.t} repeats a qubit")
        for q in op.qubits:
            if not 0 <= q < num_qubits:
                raise BadCoordinate(f"{op.text()} at t={op.t}: qubit {q} outside [0, {num_qubits})")
            if (op.t, q) in busy:
                raise OverlappingSupport(
                    f"t={op.t}: {op.text()} and {busy[op.t, q].text()} share qubit {q}")
            busy[op.t, q] = op
        out.append(op)
    for t in range(duration + 1):
        for q in range(num_qubits):
            if (t, q) not in busy:
                out.append(Operation(t, (q,), "U", "I"))
    out.sort()
    return Circuit(num_qubits, duration, tuple(out), tuple(observables), family)


def render(circuit: Circuit) -> str:
    """Canonical text: ops sorted by qubit inside each TICK block, idles omitted."""
    lines = [f"QUBITS {circuit.num_qubits}"]
    for t, ops in enumerate(circuit.by_time()):
        if t:
            lines.append("TICK")
        lines.extend(op.text() for op in ops if not (op.kind == "U" and op.name == "I"))
    lines.extend(obs.text() for obs in circuit.observables)
    return "\n".join(lines) + "\n"


def validate(circuit: Circuit) -> list[str]:
    """Return every invariant violation as a message; an empty list means ok."""
    problems = []
    seen: dict[tuple[int, int], Operation] = {}
    for op in circuit.ops:
        if not 0 <= op.t <= circuit.duration:
            problems.append(f"{op.text()}: t={op.t} outside [0, {circuit.duration}]")
        if op.kind == "M" and op.name not in ("X", "Z", "XX", "ZZ"):
            problems.append(f"{op.text()}: unsupported measurement basis")
        if op.kind == "R" and op.name not in ("X", "Z"):
            problems.append(f"{op.text()}: unsupported reset basis")
        if op.kind == "U" and op.name not in UNITARIES:
            problems.append(f"{op.text()}: unknown gate")
        for q in op.qubits:
            if not 0 <= q < circuit.num_qubits:
                problems.append(f"{op.text()} at t={op.t}: qubit {q} out of range")
            elif (op.t, q) in seen:
                problems.append(f"t={op.t}: {op.text()} overlaps {seen[op.t, q].text()} on qubit {q}")
            else:
                seen[op.t, q] = op
    for t in range(circuit.duration + 1):
        for q in range(circuit.num_qubits):
            if (t, q) not in seen:
                problems.append(f"t={t}: qubit {q} has no action")
    for obs in circuit.observables:
        rep = obs.representative
        if (rep.num_qubits, rep.num_layers) != (circuit.num_qubits, circuit.duration):
            problems.append(f"observable {obs.name}: wrong grid")
    if problems or not circuit.observables:
        return problems
    from .spacetime import observable_problems

    return observable_problems(circuit)


def builtin(name: str, **params) -> Circuit:
    """Generate one of the built-in circuit families (see :mod:`.builtins`)."""
    from . import builtins

    try:
        factory = builtins.FAMILIES[name]
    except KeyError:
        raise UnknownBuiltin(f"{name!r}; known: {', '.join(sorted(builtins.FAMILIES))}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise BadParams(str(exc)) from None

