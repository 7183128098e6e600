"""Built-in circuit families: repetition-code experiments and toric-code cycles.

Every generator returns a frozen :class:`~.circuit.Circuit` with declared
observables. Layout conventions are documented per family.
"""

from __future__ import annotations

from .circuit import BadParams, Circuit, ObservableDecl, Operation, make_circuit
from .pauli import SpacetimePauli


def _check_d(d: int, minimum: int = 2) -> None:
    if not isinstance(d, int) or d < minimum:
        raise BadParams(f"distance must be an integer >= {minimum}, got {d!r}")


def _x_string(n: int, t: int, qubits, layer: int) -> SpacetimePauli:
    return SpacetimePauli.from_sites(n, t, [("X", q, layer) for q in qubits])


def _brickwork_pairs(d: int, t: int) -> list[tuple[int, int]]:
    start = 0 if t % 2 else 1
    return [(q, q + 1) for q in range(start, d - 1, 2)]


def rep_memory(d: int, T: int | None = None) -> Circuit:
    """Measurement-only repetition memory: ``R_Z``, brickwork ``M_ZZ``, ``M_Z``.

    Odd timesteps measure pairs (0,1),(2,3),... and even ones (1,2),(3,4),...
    Unpaired boundary qubits idle. The logical ``XL`` is X on every qubit at
    the middle layer.
    """
    _check_d(d)
    T = 2 * d + 1 if T is None else T
    if T < 2:
        raise BadParams("rep_memory needs T >= 2")
    ops = [Operation(0, (q,), "R", "Z") for q in range(d)]
    for t in range(1, T):
        ops += [Operation(t, pair, "M", "ZZ") for pair in _brickwork_pairs(d, t)]
    ops += [Operation(T, (q,), "M", "Z") for q in range(d)]
    obs = [ObservableDecl("XL", _x_string(d, T, range(d), T // 2))]
    return make_circuit(d, T, ops, obs, "rep_memory")


def rep_stability(d: int, T: int | None = None) -> Circuit:
    """Measurement-only stability experiment with ``R_X``/``M_X`` time boundaries.

    The brickwork matches :func:`rep_memory` but unpaired boundary qubits are
    measured with ``M_Z``. The logical ``XT`` is a timelike X string on qubit 0
    covering every layer.
    """
    _check_d(d)
    T = 2 * d + 1 if T is None else T
    if T < 3:
        # a single round of checks leaves no timelike logical to protect
        raise BadParams("rep_stability needs T >= 3")
    ops = [Operation(0, (q,), "R", "X") for q in range(d)]
    for t in range(1, T):
        pairs = _brickwork_pairs(d, t)
        used = {q for p in pairs for q in p}
        ops += [Operation(t, pair, "M", "ZZ") for pair in pairs]
        ops += [Operation(t, (q,), "M", "Z") for q in range(d) if q not in used]
    ops += [Operation(T, (q,), "M", "X") for q in range(d)]
    rep = SpacetimePauli.from_sites(d, T, [("X", 0, layer) for layer in range(T)])
    return make_circuit(d, T, ops, [ObservableDecl("XT", rep)], "rep_stability")


def _standard_rounds(data, anc, offset, T, ops, cnots_at=None):
    """Append ancilla-based ZZ rounds for one patch.

    ``data`` lists data qubits left to right and ``anc[k]`` sits between
    ``data[k]`` and ``data[k+1]``. Round r uses timesteps 4r+1..4r+4.
    """
    rounds = (T + 1) // 4
    for r in range(rounds):
        t0 = 4 * r + offset
        ops += [Operation(t0 + 1, (data[k], a), "U", "CX") for k, a in enumerate(anc)]
        ops += [Operation(t0 + 2, (data[k + 1], a), "U", "CX") for k, a in enumerate(anc)]
        ops += [Operation(t0 + 3, (a,), "M", "Z") for a in anc]
        if t0 + 4 < T:
            ops += [Operation(t0 + 4, (a,), "R", "Z") for a in anc]


def rep_standard(d: int, T: int | None = None) -> Circuit:
    """Ancilla-based repetition memory, ``N = 2d-1``, default ``T = 4d-1``.

    Data sit at even positions, ancillas at odd ones. Each round copies the
    left then the right neighbour onto the ancilla with CX, measures it and
    resets it. The logical ``XL`` is X on every data qubit between the middle
    round's measurement and reset.
    """
    _check_d(d)
    T = 4 * d - 1 if T is None else T
    if T < 3 or (T + 1) % 4:
        raise BadParams("rep_standard needs T = 4k-1 with k >= 1")
    n = 2 * d - 1
    data, anc = list(range(0, n, 2)), list(range(1, n, 2))
    ops = [Operation(0, (q,), "R", "Z") for q in range(n)]
    _standard_rounds(data, anc, 0, T, ops)
    ops += [Operation(T, (q,), "M", "Z") for q in data]
    mid = (T + 1) // 4 // 2
    layer = 4 * mid + 3 if 4 * mid + 3 < T else 4 * mid + 2
    obs = [ObservableDecl("XL", _x_string(n, T, data, layer))]
    return make_circuit(n, T, ops, obs, "rep_standard")


def _wiggle_data(d: int, r: int) -> list[int]:
    """Data positions after ``r`` completed wiggling rounds."""
    if r % 2 == 0:
        return list(range(0, 2 * d - 1, 2))
    return [0] + list(range(1, 2 * d - 2, 2))


def rep_wiggling(d: int, T: int | None = None) -> Circuit:
    """Repetition memory whose data and ancilla roles swap every round.

    Even rounds apply CX(2k -> 2k+1), CX(2k+1 -> 2k+2), then measure and reset
    positions 2, 4, ..., 2d-2; odd rounds run the mirror image, CX(2k+1 -> 2k+2),
    CX(2k -> 2k+1), and measure positions 1, 3, ..., 2d-3. Qubit 0 stays data.
    """
    _check_d(d)
    T = 4 * d - 1 if T is None else T
    if T < 3 or (T + 1) % 4:
        raise BadParams("rep_wiggling needs T = 4k-1 with k >= 1")
    n = 2 * d - 1
    ops = [Operation(0, (q,), "R", "Z") for q in range(n)]
    first = [(2 * k, 2 * k + 1) for k in range(d - 1)]
    second = [(2 * k + 1, 2 * k + 2) for k in range(d - 1)]
    rounds = (T + 1) // 4
    for r in range(rounds):
        t0 = 4 * r
        if r % 2 == 0:
            layers, measured = (first, second), list(range(2, n, 2))
        else:
            layers, measured = (second, first), list(range(1, n - 1, 2))
        for step, pairs in enumerate(layers, 1):
            ops += [Operation(t0 + step, p, "U", "CX") for p in pairs]
        ops += [Operation(t0 + 3, (q,), "M", "Z") for q in measured]
        if t0 + 4 < T:
            ops += [Operation(t0 + 4, (q,), "R", "Z") for q in measured]
    final = _wiggle_data(d, rounds)
    ops += [Operation(T, (q,), "M", "Z") for q in final]
    mid = rounds // 2
    layer = 4 * mid + 3 if 4 * mid + 3 < T else 4 * mid + 2
    obs = [ObservableDecl("XL", _x_string(n, T, _wiggle_data(d, mid + 1), layer))]
    return make_circuit(n, T, ops, obs, "rep_wiggling")


def rep_cnot(d: int, T: int | None = None, cnot_schedule: str = "midpoint") -> Circuit:
    """Two standard repetition patches joined by transversal CNOTs.

    Patch A uses qubits ``0..2d-2`` and patch B ``2d-1..4d-3``. The CNOTs act
    data(A) -> data(B) on the ancilla-measurement timestep, either once in the
    middle round (``midpoint``) or in every round but the last (``every_cell``).
    Observables ``XA`` and ``XB`` are X strings on each patch's data in the
    first measurement-reset gap.
    """
    _check_d(d)
    if cnot_schedule not in ("midpoint", "every_cell"):
        raise BadParams(f"cnot_schedule must be 'midpoint' or 'every_cell', got {cnot_schedule!r}")
    T = 4 * d - 1 if T is None else T
    if T < 7 or (T + 1) % 4:
        raise BadParams("rep_cnot needs T = 4k-1 with k >= 2")
    m = 2 * d - 1
    n = 2 * m
    data_a, anc_a = list(range(0, m, 2)), list(range(1, m, 2))
    data_b, anc_b = [q + m for q in data_a], [q + m for q in anc_a]
    ops = [Operation(0, (q,), "R", "Z") for q in range(n)]
    _standard_rounds(data_a, anc_a, 0, T, ops)
    _standard_rounds(data_b, anc_b, 0, T, ops)
    rounds = (T + 1) // 4
    when = [rounds // 2] if cnot_schedule == "midpoint" else list(range(rounds - 1))
    for r in when:
        ops += [Operation(4 * r + 3, (a, b), "U", "CX") for a, b in zip(data_a, data_b)]
    ops += [Operation(T, (q,), "M", "Z") for q in data_a + data_b]
    obs = [
        ObservableDecl("XA", _x_string(n, T, data_a, 3)),
        ObservableDecl("XB", _x_string(n, T, data_b, 3)),
    ]
    return make_circuit(n, T, ops, obs, f"rep_cnot_{cnot_schedule}")




# -- toric code ---------------------------------------------------------------------

def _toric_cells(d: int):
    """Qubit numbering for the rotated toric code on a d x d data torus.

    Plaquette (i, j) has corners (i, j), (i+1, j), (i, j+1), (i+1, j+1) mod d and
    is an X check when i + j is even, a Z check otherwise. Each X plaquette
    (i, j) anchors one unit cell holding, in order, the Z ancilla of plaquette
    (i+1, j), data A = (i, j), the X ancilla of plaquette (i, j) and data
    B = (i+1, j). Cells are numbered row-major over (j, i).
    """
    data, xanc, zanc = {}, {}, {}
    base = 0
    for j in range(d):
        for i in range(d):
            if (i + j) % 2:
                continue
            zanc[(i + 1) % d, j] = base
            data[i, j] = base + 1
            xanc[i, j] = base + 2
            data[(i + 1) % d, j] = base + 3
            base += 4
    return data, xanc, zanc


def _corners(d: int, i: int, j: int) -> list[tuple[int, int]]:
    """Corners in the order (i, j), (i+1, j), (i, j+1), (i+1, j+1)."""
    return [(i, j), ((i + 1) % d, j), (i, (j + 1) % d), ((i + 1) % d, (j + 1) % d)]


# CNOT corner orders: X checks sweep corners 0,1,2,3, Z checks 0,2,1,3
X_ORDER = (0, 1, 2, 3)
Z_ORDER = (0, 2, 1, 3)
TORIC_PERIOD = 6


def _toric_layers(d, data, xanc, zanc, reverse_last=False):
    """Four CNOT layers of one syndrome half-cycle, as lists of (control, target)."""
    layers = []
    for step in range(4):
        flip = reverse_last and step == 3
        layer = []
        for (i, j), a in sorted(xanc.items()):
            q = data[_corners(d, i, j)[X_ORDER[step]]]
            layer.append((q, a) if flip else (a, q))
        for (i, j), a in sorted(zanc.items()):
            q = data[_corners(d, i, j)[Z_ORDER[step]]]
            layer.append((a, q) if flip else (q, a))
        layers.append(layer)
    return layers


def _toric_observables(d, n, T, data, layer):
    row = [data[i, 0] for i in range(d)]
    col = [data[0, j] for j in range(d)]
    return [ObservableDecl("X1", _x_string(n, T, row, layer)),
            ObservableDecl("X2", _x_string(n, T, col, layer))]


def _check_toric(d, T, period):
    _check_d(d)
    if d % 2:
        raise BadParams("toric builders need an even distance")
    if T % period or T < period:
        raise BadParams(f"T must be a positive multiple of {period}")


def toric_standard(d: int, T: int | None = None) -> Circuit:
    """Ancilla-based rotated toric code memory, ``N = 2 d^2``, default ``T = 12 d``.

    Round r occupies timesteps 6r+1..6r+6: four CNOT layers (X ancillas
    control their corners in order 0,1,2,3; Z ancillas are targeted by corners
    0,2,1,3), ancilla measurement, then ancilla reset. Data start in ``R_Z``
    and end in ``M_Z``. Observables ``X1``/``X2`` are X strings along a data
    row and column right after the middle round's measurement.
    """
    T = 12 * d if T is None else T
    _check_toric(d, T, TORIC_PERIOD)
    data, xanc, zanc = _toric_cells(d)
    n = 2 * d * d
    ops = [Operation(0, (q,), "R", "Z") for q in data.values()]
    ops += [Operation(0, (a,), "R", "X") for a in xanc.values()]
    ops += [Operation(0, (a,), "R", "Z") for a in zanc.values()]
    layers = _toric_layers(d, data, xanc, zanc)
    rounds = T // TORIC_PERIOD
    for r in range(rounds):
        t0 = TORIC_PERIOD * r
        for step, layer in enumerate(layers, 1):
            ops += [Operation(t0 + step, pair, "U", "CX") for pair in layer]
        ops += [Operation(t0 + 5, (a,), "M", "X") for a in xanc.values()]
        ops += [Operation(t0 + 5, (a,), "M", "Z") for a in zanc.values()]
        if t0 + 6 < T:
            ops += [Operation(t0 + 6, (a,), "R", "X") for a in xanc.values()]
            ops += [Operation(t0 + 6, (a,), "R", "Z") for a in zanc.values()]
    ops += [Operation(T, (q,), "M", "Z") for q in data.values()]
    obs = _toric_observables(d, n, T, data, TORIC_PERIOD * (rounds // 2) + 5)
    return make_circuit(n, T, ops, obs, "toric_standard")


def toric_wiggling(d: int, T: int | None = None) -> Circuit:
    """Rotated toric code memory whose data and ancilla qubits swap each round.

    Even rounds run the first three standard CNOT layers and then the fourth
    with every CNOT reversed, which leaves each check's parity on its corner-3
    data qubit; those qubits are measured (X checks in X, Z checks in Z) and
    reset, and the former ancillas now hold the code. Odd rounds apply the
    same four layers in reverse order and measure the original ancillas, so
    the detector cell spans 12 timesteps and its second half mirrors the first.
    """
    period = 2 * TORIC_PERIOD
    T = 12 * d if T is None else T
    _check_toric(d, T, period)
    data, xanc, zanc = _toric_cells(d)
    n = 2 * d * d
    # qubit that carries each check's parity after the reversed fourth layer
    xmeas = {p: data[_corners(d, *p)[X_ORDER[3]]] for p in xanc}
    zmeas = {p: data[_corners(d, *p)[Z_ORDER[3]]] for p in zanc}
    ops = [Operation(0, (q,), "R", "Z") for q in data.values()]
    ops += [Operation(0, (a,), "R", "X") for a in xanc.values()]
    ops += [Operation(0, (a,), "R", "Z") for a in zanc.values()]
    layers = _toric_layers(d, data, xanc, zanc, reverse_last=True)
    rounds = T // TORIC_PERIOD
    for r in range(rounds):
        t0 = TORIC_PERIOD * r
        seq = layers if r % 2 == 0 else layers[::-1]
        for step, layer in enumerate(seq, 1):
            ops += [Operation(t0 + step, pair, "U", "CX") for pair in layer]
        mx, mz = (xmeas, zmeas) if r % 2 == 0 else (xanc, zanc)
        ops += [Operation(t0 + 5, (q,), "M", "X") for q in mx.values()]
        ops += [Operation(t0 + 5, (q,), "M", "Z") for q in mz.values()]
        if t0 + 6 < T:
            ops += [Operation(t0 + 6, (q,), "R", "X") for q in mx.values()]
            ops += [Operation(t0 + 6, (q,), "R", "Z") for q in mz.values()]
    ops += [Operation(T, (q,), "M", "Z") for q in data.values()]
    # after an odd round the code is back on the original data qubits
    mid = rounds // 2 - 1 if (rounds // 2) % 2 == 0 else rounds // 2
    obs = _toric_observables(d, n, T, data, TORIC_PERIOD * mid + 5)
    return make_circuit(n, T, ops, obs, "toric_wiggling")


FAMILIES = {
    "rep_memory": rep_memory,
    "rep_stability": rep_stability,
    "rep_standard": rep_standard,
    "rep_wiggling": rep_wiggling,
    "rep_cnot": rep_cnot,
    "toric_standard": toric_standard,
    "toric_wiggling": toric_wiggling,
}
