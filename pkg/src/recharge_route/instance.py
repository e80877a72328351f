"""TSPLIB ingestion and construction of metric multi-depot instances.

Node numbering: a :class:`RawInstance` keeps the 1-based TSPLIB ids; an
:class:`Instance` addresses nodes by 0-based index ``i`` whose TSPLIB id is
``labels[i]`` (always ``i + 1`` after normalization).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import TsplibParseError, ValidationError


class EdgeWeightType(str, enum.Enum):
    EUC_2D_ROUNDED = "EUC_2D_ROUNDED"
    EUC_2D_EXACT = "EUC_2D_EXACT"
    EXPLICIT_MATRIX = "EXPLICIT_MATRIX"


class WeightMode(str, enum.Enum):
    INTEGER = "int"
    REAL = "real"

    @classmethod
    def parse(cls, value) -> "WeightMode":
        if isinstance(value, WeightMode):
            return value
        key = str(value).strip().lower()
        aliases = {"int": cls.INTEGER, "integer": cls.INTEGER, "rounded": cls.INTEGER,
                   "real": cls.REAL, "exact": cls.REAL, "float": cls.REAL}
        if key not in aliases:
            raise ValueError(f"unknown weight mode {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class RawInstance:
    name: str
    node_coords: tuple  # ((id, x, y), ...)
    declared_dimension: int
    edge_weight_type: EdgeWeightType
    matrix: Optional[tuple] = None  # full symmetric matrix for EXPLICIT_MATRIX
    comment: str = ""

    @property
    def n(self) -> int:
        return self.declared_dimension

    def coordinates(self) -> Optional[np.ndarray]:
        if not self.node_coords:
            return None
        return np.array([(x, y) for _, x, y in self.node_coords], dtype=float)

    def base_weights(self, weight_mode: WeightMode) -> np.ndarray:
        """Pairwise weights before metric completion."""
        if self.edge_weight_type is EdgeWeightType.EXPLICIT_MATRIX:
            return np.array(self.matrix, dtype=float)
        pts = self.coordinates()
        w = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        if weight_mode is WeightMode.INTEGER:
            # TSPLIB nint(): round half up
            w = np.floor(w + 0.5)
        return w


_SECTIONS = {
    "NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION", "DISPLAY_DATA_SECTION",
    "DEMAND_SECTION", "DEPOT_SECTION", "FIXED_EDGES_SECTION", "TOUR_SECTION",
}
_MATRIX_FORMATS = {
    "FULL_MATRIX", "UPPER_ROW", "LOWER_ROW", "UPPER_DIAG_ROW", "LOWER_DIAG_ROW",
}


def _number(tok: str) -> float:
    v = float(tok)
    return int(v) if v.is_integer() else v


def _expand_matrix(values: list, n: int, fmt: str) -> list:
    full = [[0.0] * n for _ in range(n)]
    it = iter(values)
    try:
        if fmt == "FULL_MATRIX":
            for i in range(n):
                for j in range(n):
                    full[i][j] = next(it)
        else:
            diag = "DIAG" in fmt
            upper = fmt.startswith("UPPER")
            for i in range(n):
                if upper:
                    cols = range(i if diag else i + 1, n)
                else:
                    cols = range(0, i + 1 if diag else i)
                for j in cols:
                    full[i][j] = full[j][i] = next(it)
    except StopIteration:
        raise ValidationError(f"EDGE_WEIGHT_SECTION too short for {fmt} with dimension {n}")
    if next(it, None) is not None:
        raise ValidationError(f"EDGE_WEIGHT_SECTION too long for {fmt} with dimension {n}")
    return full


def parse_tsplib(file_contents: str) -> RawInstance:
    """Parse TSPLIB95 text (TSP or CVRP flavour; demand/depot sections ignored)."""
    header: dict = {}
    coords: list = []
    display: list = []
    weights: list = []
    lines = file_contents.splitlines()
    section = None
    for lineno, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line:
            continue
        head = line.split(":", 1)[0].strip().upper() if ":" in line else line.split()[0].upper()
        if head == "EOF":
            break
        if head in _SECTIONS:
            section = head
            continue
        if ":" in line and not _looks_numeric(line.split(":", 1)[0]):
            key, value = line.split(":", 1)
            header[key.strip().upper()] = (value.strip(), lineno, raw_line)
            section = None
            continue
        if section is None:
            raise TsplibParseError("unrecognised header line", lineno, raw_line)
        toks = line.split()
        try:
            if section in ("NODE_COORD_SECTION", "DISPLAY_DATA_SECTION"):
                if len(toks) != 3:
                    raise TsplibParseError("expected 'id x y'", lineno, raw_line)
                row = (int(toks[0]), _number(toks[1]), _number(toks[2]))
                (coords if section == "NODE_COORD_SECTION" else display).append(row)
            elif section == "EDGE_WEIGHT_SECTION":
                weights.extend(_number(t) for t in toks)
            # remaining sections carry CVRP data not used here
        except ValueError as exc:
            if isinstance(exc, TsplibParseError):
                raise
            raise TsplibParseError(f"non-numeric value ({exc})", lineno, raw_line) from None

    for key in ("NAME", "DIMENSION", "EDGE_WEIGHT_TYPE"):
        if key not in header:
            raise TsplibParseError(f"missing {key} keyword")
    value, lineno, raw_line = header["DIMENSION"]
    try:
        dim = int(value)
    except ValueError:
        raise TsplibParseError("DIMENSION is not an integer", lineno, raw_line) from None
    if dim < 1:
        raise TsplibParseError("DIMENSION must be positive", lineno, raw_line)
    ewt, lineno, raw_line = header["EDGE_WEIGHT_TYPE"]
    ewt = ewt.upper()
    name = header["NAME"][0]
    comment = header.get("COMMENT", ("",))[0]

    if ewt == "EUC_2D":
        if not coords:
            raise TsplibParseError("EUC_2D instance without NODE_COORD_SECTION")
        rows = _normalize(coords, dim)
        return RawInstance(name, rows, dim, EdgeWeightType.EUC_2D_ROUNDED, None, comment)
    if ewt == "EXPLICIT":
        fmt = header.get("EDGE_WEIGHT_FORMAT", ("FULL_MATRIX",))[0].upper()
        if fmt not in _MATRIX_FORMATS:
            raise TsplibParseError(f"unsupported EDGE_WEIGHT_FORMAT {fmt}")
        full = _expand_matrix(weights, dim, fmt)
        for i in range(dim):
            if full[i][i] != 0:
                raise ValidationError(f"explicit matrix has nonzero diagonal at node {i + 1}")
            for j in range(i):
                if full[i][j] != full[j][i]:
                    raise ValidationError(f"explicit matrix is not symmetric at ({i + 1},{j + 1})")
        rows = _normalize(display, dim) if display else ()
        matrix = tuple(tuple(r) for r in full)
        return RawInstance(name, rows, dim, EdgeWeightType.EXPLICIT_MATRIX, matrix, comment)
    raise TsplibParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt}", lineno, raw_line)


def _looks_numeric(tok: str) -> bool:
    try:
        float(tok.split()[0])
    except (ValueError, IndexError):
        return False
    return True


def _normalize(rows: list, dim: int) -> tuple:
    ids = [r[0] for r in rows]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ValidationError(f"duplicate node id {dup}")
    if len(rows) != dim:
        raise ValidationError(f"DIMENSION is {dim} but {len(rows)} coordinate rows were given")
    ordered = sorted(rows)
    return tuple((k + 1, x, y) for k, (_, x, y) in enumerate(ordered))


def serialize_tsplib(raw: RawInstance) -> str:
    def fmt(v):
        return str(int(v)) if float(v).is_integer() else repr(float(v))

    out = [f"NAME : {raw.name}"]
    if raw.comment:
        out.append(f"COMMENT : {raw.comment}")
    out.append("TYPE : TSP")
    out.append(f"DIMENSION : {raw.declared_dimension}")
    if raw.edge_weight_type is EdgeWeightType.EXPLICIT_MATRIX:
        out += ["EDGE_WEIGHT_TYPE : EXPLICIT", "EDGE_WEIGHT_FORMAT : FULL_MATRIX",
                "EDGE_WEIGHT_SECTION"]
        out += [" ".join(fmt(v) for v in row) for row in raw.matrix]
        if raw.node_coords:
            out.append("DISPLAY_DATA_SECTION")
            out += [f"{i} {fmt(x)} {fmt(y)}" for i, x, y in raw.node_coords]
    else:
        # EUC_2D_EXACT has no TSPLIB keyword; rounding is chosen at build time anyway
        out += ["EDGE_WEIGHT_TYPE : EUC_2D", "NODE_COORD_SECTION"]
        out += [f"{i} {fmt(x)} {fmt(y)}" for i, x, y in raw.node_coords]
    out.append("EOF")
    return "\n".join(out) + "\n"


def read_tsplib(path) -> RawInstance:
    return parse_tsplib(Path(path).read_text(encoding="utf-8", errors="replace"))


def raw_from_points(points: Sequence, name: str = "points", exact: bool = True) -> RawInstance:
    rows = tuple((i + 1, float(x), float(y)) for i, (x, y) in enumerate(points))
    ewt = EdgeWeightType.EUC_2D_EXACT if exact else EdgeWeightType.EUC_2D_ROUNDED
    return RawInstance(name, rows, len(rows), ewt)


def raw_from_matrix(matrix, name: str = "matrix") -> RawInstance:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("distance matrix must be square")
    if not np.allclose(m, m.T) or np.any(np.diag(m) != 0):
        raise ValidationError("distance matrix must be symmetric with zero diagonal")
    rows = tuple(tuple(float(v) for v in r) for r in m)
    return RawInstance(name, (), m.shape[0], EdgeWeightType.EXPLICIT_MATRIX, rows)


# -- depot selection -------------------------------------------------------

@dataclass(frozen=True)
class DepotSelection:
    """How the depot set Q is drawn from the n locations.

    ``strategy`` is one of ``explicit`` (TSPLIB ids in ``ids``), ``first_m``
    (ids 1..m) or ``farthest_point`` (greedy max-min seeding from node 1).
    """

    strategy: str = "first_m"
    m: Optional[int] = None
    ids: tuple = ()
    seed: int = 0

    @classmethod
    def parse(cls, spec: str, seed: int = 0) -> "DepotSelection":
        """Parse ``first:m``, ``farthest:m`` or ``explicit:3,7``."""
        kind, _, arg = spec.partition(":")
        kind = kind.strip().lower()
        if kind in ("first", "first_m"):
            return cls("first_m", m=int(arg), seed=seed)
        if kind in ("farthest", "farthest_point"):
            return cls("farthest_point", m=int(arg), seed=seed)
        if kind == "explicit":
            ids = tuple(int(t) for t in arg.replace(" ", "").split(",") if t)
            return cls("explicit", ids=ids, seed=seed)
        raise ValueError(f"unknown depot strategy {spec!r}")

    def describe(self) -> str:
        if self.strategy == "explicit":
            return "explicit:" + ",".join(map(str, self.ids))
        return f"{'first' if self.strategy == 'first_m' else 'farthest'}:{self.m}"

    def resolve(self, raw: RawInstance, weights: Optional[np.ndarray] = None) -> tuple:
        n = raw.declared_dimension
        if self.strategy == "explicit":
            ids = tuple(self.ids)
            if not ids:
                raise ValidationError("explicit depot list is empty")
            if len(set(ids)) != len(ids):
                raise ValidationError("explicit depot list has duplicates")
            for q in ids:
                if not 1 <= q <= n:
                    raise ValidationError(f"depot id {q} is not a node of {raw.name}")
            return ids
        m = self.m
        if m is None or m < 1:
            raise ValidationError("depot count m must be >= 1")
        if m > n:
            raise ValidationError(f"m={m} exceeds the {n} available nodes")
        if self.strategy == "first_m":
            return tuple(range(1, m + 1))
        if self.strategy == "farthest_point":
            w = raw.base_weights(WeightMode.REAL) if weights is None else weights
            chosen = [0]
            mind = w[0].copy()
            while len(chosen) < m:
                mind[chosen] = -1.0
                nxt = int(np.argmax(mind))  # first maximum -> lowest id on ties
                chosen.append(nxt)
                mind = np.minimum(mind, w[nxt])
            return tuple(sorted(i + 1 for i in chosen))
        raise ValueError(f"unknown depot strategy {self.strategy!r}")


# -- instance --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Instance:
    """Metric multi-depot instance with recharge time folded into the weights."""

    name: str
    dist: np.ndarray
    depot_ids: tuple
    task_ids: tuple
    D: float
    T: float = 0.0
    weight_mode: WeightMode = WeightMode.REAL
    coords: Optional[np.ndarray] = None
    labels: tuple = ()
    # pre-transformation view, used to replay walks with explicit recharge stops
    base_dist: Optional[np.ndarray] = field(default=None, repr=False)
    D_original: float = 0.0
    T_original: float = 0.0

    @property
    def n_vertices(self) -> int:
        return len(self.task_ids)

    @property
    def n_nodes(self) -> int:
        return self.dist.shape[0]

    @cached_property
    def d(self) -> list:
        """Distance matrix as nested lists (fast scalar access in loops)."""
        return self.dist.tolist()

    @cached_property
    def is_depot(self) -> list:
        flags = [False] * self.n_nodes
        for q in self.depot_ids:
            flags[q] = True
        return flags

    @cached_property
    def tol(self) -> float:
        """Absolute slack for length comparisons against D."""
        return 1e-9 * max(1.0, self.D)

    def leq(self, a: float, b: float) -> bool:
        return a <= b + self.tol


def metric_completion(w: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths (Floyd-Warshall)."""
    d = np.array(w, dtype=float, copy=True)
    for k in range(d.shape[0]):
        np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :], out=d)
    return d


def build_instance(raw: RawInstance, depot_selection=None, D: float = 0.0, T: float = 0.0,
                   weight_mode=WeightMode.REAL) -> Instance:
    """Materialize weights, metric-complete them and fold recharge time T into them."""
    weight_mode = WeightMode.parse(weight_mode)
    if depot_selection is None:
        depot_selection = DepotSelection("first_m", m=1)
    elif isinstance(depot_selection, str):
        depot_selection = DepotSelection.parse(depot_selection)
    if not D > 0:
        raise ValidationError(f"discharge time D must be positive, got {D}")
    if T < 0:
        raise ValidationError(f"recharge time T must be nonnegative, got {T}")

    w = raw.base_weights(weight_mode)
    if np.any(w < 0):
        raise ValidationError("negative edge weight")
    base = metric_completion(w)
    depot_labels = depot_selection.resolve(raw, base)
    depots = tuple(sorted(q - 1 for q in depot_labels))
    n = raw.declared_dimension
    dep_set = set(depots)
    tasks = tuple(i for i in range(n) if i not in dep_set)

    dist = base.copy()
    if T > 0:
        mask = np.zeros(n, dtype=bool)
        mask[list(depots)] = True
        dist = dist + (T / 2.0) * (mask[:, None].astype(float) + mask[None, :].astype(float))
        np.fill_diagonal(dist, 0.0)
    dist.setflags(write=False)
    base.setflags(write=False)
    coords = raw.coordinates()
    return Instance(
        name=raw.name, dist=dist, depot_ids=depots, task_ids=tasks,
        D=float(D) + float(T), T=0.0, weight_mode=weight_mode, coords=coords,
        labels=tuple(range(1, n + 1)), base_dist=base,
        D_original=float(D), T_original=float(T),
    )


def instance_from_points(points, depots: Sequence[int], D: float, T: float = 0.0,
                         weight_mode=WeightMode.REAL, name: str = "points") -> Instance:
    """Convenience constructor; ``depots`` are 0-based indices into ``points``."""
    raw = raw_from_points(points, name=name)
    sel = DepotSelection("explicit", ids=tuple(q + 1 for q in depots))
    return build_instance(raw, sel, D, T, weight_mode)


def instance_from_matrix(matrix, depots: Sequence[int], D: float, T: float = 0.0,
                         weight_mode=WeightMode.REAL, name: str = "matrix") -> Instance:
    raw = raw_from_matrix(matrix, name=name)
    sel = DepotSelection("explicit", ids=tuple(q + 1 for q in depots))
    return build_instance(raw, sel, D, T, weight_mode)


# -- synthesis config ------------------------------------------------------

@dataclass
class InstanceConfig:
    source_file: str
    D: float
    depot_strategy: str = "first_m"
    depot_list: tuple = ()
    m: Optional[int] = None
    T: float = 0.0
    weight_mode: str = "real"
    seed: int = 0

    def selection(self) -> DepotSelection:
        strategy = {"first": "first_m", "farthest": "farthest_point"}.get(
            self.depot_strategy, self.depot_strategy)
        return DepotSelection(strategy, m=self.m, ids=tuple(self.depot_list), seed=self.seed)

    def build(self, base_dir=None) -> Instance:
        path = Path(self.source_file)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return build_instance(read_tsplib(path), self.selection(), self.D, self.T,
                              self.weight_mode)


def load_config(text: str) -> InstanceConfig:
    """Read an instance-synthesis config from JSON or ``key=value`` lines."""
    stripped = text.strip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
            k, v = line.split("=", 1)
            data[k.strip()] = v.strip()
    if "source_file" not in data or "D" not in data:
        raise ValueError("config requires source_file and D")
    depot_list = data.get("depot_list", ())
    if isinstance(depot_list, str):
        depot_list = tuple(int(t) for t in depot_list.replace(" ", "").split(",") if t)
    m = data.get("m")
    return InstanceConfig(
        source_file=str(data["source_file"]),
        D=float(data["D"]),
        depot_strategy=str(data.get("depot_strategy", "first_m")),
        depot_list=tuple(int(q) for q in depot_list),
        m=None if m in (None, "") else int(m),
        T=float(data.get("T", 0.0)),
        weight_mode=str(data.get("weight_mode", "real")),
        seed=int(data.get("seed", 0)),
    )


def ceil_log2(x: float) -> int:
    """ceil(log2(x)) clamped at 0, robust to float noise at exact powers of two."""
    if x <= 1.0:
        return 0
    k = math.ceil(math.log2(x))
    if 2.0 ** (k - 1) >= x * (1 - 1e-12):
        k -= 1
    return max(k, 0)
