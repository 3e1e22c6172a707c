"""Data ingestion, run configuration, and result serialization.

CSV and JSON schemas are documented in ``docs/formats.md``.  Every file
this module writes starts with a reproducibility stamp carrying the tool
version, the seed, and a hash of the active configuration.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, fields

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DataError
from .models import ModelVariant

SCHEMA_VERSION = 1

_RETURN_COLUMNS = ("return", "returns", "y", "logret", "log_return")
_PRICE_COLUMNS = ("price", "prices", "close", "p", "adj_close")
_LABEL_COLUMNS = ("date", "time", "label")


@dataclass(frozen=True)
class ReturnSeries:
    """A log-return series with optional opaque row labels.

    Attributes
    ----------
    y : ndarray
        Log returns; finite, length >= 1.
    labels : tuple of str or None
        Per-observation labels (dates are never parsed).
    source : str
        Provenance note, normally the originating file path.
    """

    y: np.ndarray
    labels: tuple | None = None
    source: str = ""

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "y", y)
        if y.ndim != 1 or y.size < 1:
            raise DataError("return series must be 1-d with length >= 1")
        if not np.all(np.isfinite(y)):
            raise DataError("return series contains non-finite values")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != y.size:
                raise DataError(
                    f"{len(labels)} labels for {y.size} observations")

    def __len__(self) -> int:
        return int(self.y.size)


def _pick_column(header, candidates, explicit, what: str) -> int:
    lowered = [c.strip().lower() for c in header]
    if explicit is not None:
        key = explicit.strip().lower()
        if key not in lowered:
            raise DataError(f"column {explicit!r} not found in header {header}")
        return lowered.index(key)
    for cand in candidates:
        if cand in lowered:
            return lowered.index(cand)
    if len(header) == 1:
        return 0
    raise DataError(
        f"no {what} column found in header {header}; pass a column name")


def load_returns(path, mode: str = "returns", column: str | None = None,
                 label_column: str | None = None) -> ReturnSeries:
    """Load a return series from a headered CSV file.

    Parameters
    ----------
    path : str or path-like
        CSV file; lines starting with ``#`` are ignored.
    mode : {"returns", "prices"}
        In prices mode the column must be strictly positive and returns
        are computed as ``ln(P_t / P_{t-1})``.
    column : str, optional
        Data column name; defaults to the first recognized name
        ("return", "y", ... or "price", "close", ...), or the only
        column of a single-column file.
    label_column : str, optional
        Label column name; defaults to "date"/"time"/"label" if present.

    Returns
    -------
    ReturnSeries

    Raises
    ------
    DataError
        On malformed rows (with 1-based line numbers), missing columns,
        non-positive prices, or an empty series.
    """
    if mode not in ("returns", "prices"):
        raise DataError(f"mode must be 'returns' or 'prices', got {mode!r}")
    candidates = _RETURN_COLUMNS if mode == "returns" else _PRICE_COLUMNS

    header = None
    col = lab_col = None
    values, labels, bad_lines = [], [], []
    try:
        fh = open(path, "r", newline="")
    except OSError as e:
        raise DataError(f"cannot open {path}: {e}") from e
    with fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or (row[0].lstrip().startswith("#")):
                continue
            if header is None:
                header = row
                col = _pick_column(header, candidates, column,
                                   "return" if mode == "returns" else "price")
                lowered = [c.strip().lower() for c in header]
                if label_column is not None:
                    lab_col = _pick_column(header, (), label_column, "label")
                else:
                    for cand in _LABEL_COLUMNS:
                        if cand in lowered and lowered.index(cand) != col:
                            lab_col = lowered.index(cand)
                            break
                continue
            if col >= len(row) or not row[col].strip():
                bad_lines.append(line_no)
                continue
            try:
                x = float(row[col])
            except ValueError:
                bad_lines.append(line_no)
                continue
            if not math.isfinite(x):
                bad_lines.append(line_no)
                continue
            values.append(x)
            if lab_col is not None and lab_col < len(row):
                labels.append(row[lab_col])
    if header is None:
        raise DataError(f"{path}: no header row found")
    if bad_lines:
        shown = ", ".join(str(n) for n in bad_lines[:10])
        more = "" if len(bad_lines) <= 10 else f" (+{len(bad_lines) - 10} more)"
        raise DataError(
            f"{path}: missing or malformed values at line(s) {shown}{more}")
    if not values:
        raise DataError(f"{path}: no data rows")

    data = np.asarray(values, dtype=np.float64)
    if mode == "prices":
        if np.any(data <= 0.0):
            bad = int(np.argmax(data <= 0.0))
            raise DataError(
                f"{path}: non-positive price {data[bad]} at data row {bad + 1}")
        if data.size < 2:
            raise DataError(f"{path}: need >= 2 prices to form returns")
        data = np.diff(np.log(data))
        labels = labels[1:] if labels else labels
    return ReturnSeries(y=data,
                        labels=tuple(labels) if labels else None,
                        source=str(path))


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration shared by the command-line entry points.

    Attributes mirror the TOML keys one-to-one.  ``extras`` collects
    command-specific options that have no dedicated field.
    """

    variant: str = "sv"
    n_v: int = 0
    n_lam: int = 0
    n_j: int = -1
    r_max: int = -1
    n_particles: int = 0
    seed: int = 0
    h: float = 1.0 / 252.0
    data: str = ""
    mode: str = "returns"
    column: str = ""
    out: str = ""
    engine: str = "dnf"
    threads: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant.lower() not in ("sv", "svyj", "svcj", "svcjsi"):
            raise DataError(f"unknown variant {self.variant!r}")
        if self.mode not in ("returns", "prices"):
            raise DataError(f"unknown mode {self.mode!r}")
        if self.engine not in ("dnf", "sir"):
            raise DataError(f"unknown engine {self.engine!r}")
        if not (self.h > 0.0):
            raise DataError("h must be positive")
        for name in ("n_v", "n_lam", "n_particles", "seed", "threads"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be nonnegative")

    @property
    def model_variant(self) -> ModelVariant:
        return ModelVariant[self.variant.upper()]


def load_config(path) -> RunConfig:
    """Read a flat TOML config file into a :class:`RunConfig`.

    Unknown keys are preserved in ``extras``.  Referenced input files
    must exist.
    """
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise DataError(f"{path}: invalid config: {e}") from e
    known = {f.name for f in fields(RunConfig)} - {"extras"}
    kw = {k: raw[k] for k in list(raw) if k in known}
    extras = {k: raw[k] for k in raw if k not in known}
    cfg = RunConfig(extras=extras, **kw)
    if cfg.data:
        try:
            open(cfg.data, "rb").close()
        except OSError as e:
            raise DataError(f"config references missing data file: {e}") from e
    return cfg


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return json.dumps(str(v))


def save_config(cfg: RunConfig, path) -> None:
    """Write a :class:`RunConfig` as flat TOML; round-trips through
    :func:`load_config`."""
    lines = []
    for f in fields(RunConfig):
        if f.name == "extras":
            continue
        lines.append(f"{f.name} = {_toml_value(getattr(cfg, f.name))}")
    for k, v in cfg.extras.items():
        lines.append(f"{k} = {_toml_value(v)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def config_hash(cfg: RunConfig | None) -> str:
    """Short stable hash of a configuration for output stamping."""
    if cfg is None:
        return "none"
    payload = {f.name: getattr(cfg, f.name) for f in fields(RunConfig)
               if f.name != "extras"}
    payload.update(cfg.extras)
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def stamp_line(seed, cfg: RunConfig | None = None) -> str:
    """Reproducibility stamp placed at the top of every output file."""
    from . import __version__
    return (f"# svjfilt={__version__} seed={seed} "
            f"config=sha256:{config_hash(cfg)}")


def _stamp_fields(seed, cfg: RunConfig | None) -> dict:
    from . import __version__
    return {"schema_version": SCHEMA_VERSION, "tool_version": __version__,
            "seed": seed, "config_hash": f"sha256:{config_hash(cfg)}"}


def write_csv(path, rows, columns, seed=0, cfg: RunConfig | None = None):
    """Write dict rows to CSV under a reproducibility stamp header."""
    with open(path, "w", newline="") as fh:
        fh.write(stamp_line(seed, cfg) + "\n")
        writer = csv.DictWriter(fh, fieldnames=list(columns),
                                extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_cell(row.get(k)) for k in columns})


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def write_json(path, payload: dict, seed=0, cfg: RunConfig | None = None):
    """Write a JSON result file with stamp fields merged in."""
    doc = dict(_stamp_fields(seed, cfg))
    doc.update(payload)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, ModelVariant):
        return v.name.lower()
    raise TypeError(f"not JSON-serializable: {type(v)}")


def write_path_csv(path, sim, seed=0, cfg: RunConfig | None = None):
    """Serialize a simulated path: one row per observation."""
    rows = [{"t": t + 1, "y": sim.y[t], "v": sim.v[t + 1],
             "lam": sim.lam[t + 1], "n": int(sim.n[t]),
             "j_y": sim.j_y[t], "j_v": sim.j_v[t]}
            for t in range(sim.y.size)]
    write_csv(path, rows, ("t", "y", "v", "lam", "n", "j_y", "j_v"),
              seed=seed, cfg=cfg)


def write_filter_csv(path, out, seed=0, cfg: RunConfig | None = None):
    """Serialize filter output: one row per observation."""
    t_len = out.loglik_contribs.size
    rows = [{"t": t + 1, "loglik": out.loglik_contribs[t],
             "filtered_v": out.filtered_v[t],
             "filtered_lam": out.filtered_lam[t],
             "jump_prob": out.filtered_jump_prob[t],
             "filtered_j_y": out.filtered_j_y[t],
             "filtered_j_v": out.filtered_j_v[t]}
            for t in range(t_len)]
    write_csv(path, rows, ("t", "loglik", "filtered_v", "filtered_lam",
                           "jump_prob", "filtered_j_y", "filtered_j_v"),
              seed=seed, cfg=cfg)


def estimation_payload(res) -> dict:
    """JSON-ready view of an estimation result."""
    active = res.params.active_names()
    return {
        "variant": res.params.variant.name.lower(),
        "params_hat": {k: res.params.as_dict()[k] for k in active},
        "loglik": res.loglik,
        "std_errors": res.std_errors,
        "convergence": {"converged": res.converged, "n_evals": res.n_evals,
                        "message": res.message},
        "h": res.params.h,
    }
