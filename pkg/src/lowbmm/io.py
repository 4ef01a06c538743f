"""File formats: ranking CSVs, ground truth, draw logs, JSON documents and tables.

Every JSON document written here is validated against a schema shipped in
``lowbmm/schemas`` before it touches the disk.
"""
from __future__ import annotations

import csv
import io
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .datagen import GroundTruth, RankingDataset
from .perms import rank_vector, rows_are_permutations
from .postprocess import PosteriorSummary
from .sampler import PosteriorSamples

DRAWS_MAGIC = "# lowbmm-draws v1"


class InputError(ValueError):
    """Malformed or inconsistent input file."""


# --------------------------------------------------------------------------
# schemas


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("lowbmm").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc, name: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match the schema."""
    jsonschema.validate(doc, load_schema(name))


def validate_rows(rows: list[dict], name: str, limit: int | None = 5000) -> None:
    """Validate table rows against a row schema.

    Rows of one table come from a single code path, so for long tables an
    evenly spaced sample of ``limit`` rows (first and last included) is
    checked; ``limit=None`` checks every row.
    """
    validator = jsonschema.Draft202012Validator(load_schema(name))
    if limit is not None and len(rows) > limit:
        rows = [rows[i] for i in np.unique(np.linspace(0, len(rows) - 1, limit).astype(int))]
    for row in rows:
        validator.validate(row)


def _clean(obj):
    """JSON-ready copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    return obj


def dumps(doc) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def write_json(path, doc, schema: str | None = None) -> None:
    doc = _clean(doc)
    if schema is not None:
        validate(doc, schema)
    Path(path).write_text(dumps(doc))


def read_json(path, schema: str | None = None):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    if schema is not None:
        try:
            validate(doc, schema)
        except jsonschema.ValidationError as exc:
            raise InputError(f"{path}: {exc.message}") from exc
    return doc


# --------------------------------------------------------------------------
# ranking datasets


def write_dataset(path, ds: RankingDataset) -> None:
    """Header of item ids, then one row of ranks per assessor."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ds.item_ids)
    w.writerows(ds.rows.tolist())
    Path(path).write_text(buf.getvalue())


def read_dataset(path, from_scores: bool = False) -> RankingDataset:
    """Read a ranking CSV.

    With ``from_scores`` the cells may be arbitrary numbers and each row is
    converted to ranks, the largest value getting rank 1 (ties broken by
    column order).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        ids = [h.strip() for h in header]
        if len(set(ids)) != len(ids) or any(not h for h in ids):
            raise InputError(f"{path}: item identifiers in the header must be unique and non-empty")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(ids):
                raise InputError(f"{path}: line {lineno} has {len(rec)} fields, expected {len(ids)}")
            try:
                vals = [float(c) for c in rec] if from_scores else [int(c) for c in rec]
            except ValueError:
                kind = "numbers" if from_scores else "integer ranks"
                raise InputError(f"{path}: line {lineno} does not contain {kind}") from None
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no rankings")
    if from_scores:
        scores = np.asarray(rows, dtype=float)
        if not np.all(np.isfinite(scores)):
            raise InputError(f"{path}: scores must be finite")
        R = np.vstack([rank_vector(-row) for row in scores])
    else:
        R = np.asarray(rows, dtype=np.int64)
        bad = np.flatnonzero(~rows_are_permutations(R))
        if bad.size:
            raise InputError(f"{path}: ranking {bad[0] + 1} (line {bad[0] + 2}) is not a "
                             f"permutation of 1..{R.shape[1]}")
    return RankingDataset(R, ids, {"source": str(path), "from_scores": from_scores})


# --------------------------------------------------------------------------
# ground truth


def truth_document(truth: GroundTruth, ds: RankingDataset) -> dict:
    order = truth.ordering()
    return {
        "n": ds.n,
        "n_star": truth.n_star,
        "item_ids": list(ds.item_ids),
        "true_items": [ds.item_ids[i] for i in order],
        "provenance": ds.provenance,
    }


def write_truth(path, truth: GroundTruth, ds: RankingDataset) -> None:
    write_json(path, truth_document(truth, ds), "truth")


def _indices(ids, lookup: dict, path) -> np.ndarray:
    try:
        return np.array([lookup[i] for i in ids], dtype=np.int64)
    except KeyError as exc:
        raise InputError(f"{path}: unknown item id {exc.args[0]!r}") from None


def read_truth(path) -> tuple[GroundTruth, list[str]]:
    """Ground truth (item positions as in the dataset) and the dataset's item ids."""
    doc = read_json(path, "truth")
    ids = doc["item_ids"]
    if len(ids) != doc["n"] or len(set(ids)) != len(ids):
        raise InputError(f"{path}: item_ids must be {doc['n']} unique identifiers")
    order = _indices(doc["true_items"], {k: i for i, k in enumerate(ids)}, path)
    if len(order) != doc["n_star"]:
        raise InputError(f"{path}: true_items must list n_star items")
    return _from_ordering(order), ids


def _from_ordering(order: np.ndarray) -> GroundTruth:
    idx = np.argsort(order)
    return GroundTruth(order[idx], (idx + 1).astype(np.int64))


# --------------------------------------------------------------------------
# draw logs


def write_draws(path, samples: PosteriorSamples, item_ids) -> None:
    """Stored draws as CSV, or as compressed ``.npz`` when the path says so.

    The CSV starts with ``#`` header lines (format tag, config hash, config,
    acceptance rates, item ids); each record is ``chain, iteration`` followed
    by the item id holding rank 1, 2, ..., n*.
    """
    path = Path(path)
    meta = {"config": samples.config, "n": samples.n, "acceptance_rho": samples.acceptance_rho,
            "acceptance_aset": samples.acceptance_aset}
    if path.suffix == ".npz":
        with open(path, "wb") as fh:
            np.savez_compressed(fh, orders=samples.orders, iterations=samples.iterations,
                                chain=samples.chain, item_ids=np.array(item_ids),
                                meta=np.array(dumps(meta)))
        return
    ids = np.asarray(item_ids, dtype=object)
    buf = io.StringIO()
    buf.write(DRAWS_MAGIC + "\n")
    buf.write(f"# config_hash: {samples.config.get('hash', '')}\n")
    buf.write("# meta: " + json.dumps(_clean(meta), sort_keys=True) + "\n")
    buf.write("# items: " + json.dumps(list(item_ids)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chain", "iteration"] + [f"rank_{k}" for k in range(1, samples.n_star + 1)])
    for c, it, order in zip(samples.chain.tolist(), samples.iterations.tolist(), ids[samples.orders]):
        w.writerow([c, it, *order])
    path.write_text(buf.getvalue())


def read_draws(path) -> tuple[PosteriorSamples, list[str]]:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            ids = [str(x) for x in z["item_ids"]]
            return PosteriorSamples(z["orders"], z["iterations"], meta["n"], meta["acceptance_rho"],
                                    meta["acceptance_aset"], meta["config"], z["chain"]), ids
    with open(path, newline="") as fh:
        if fh.readline().rstrip("\n") != DRAWS_MAGIC:
            raise InputError(f"{path}: not a lowbmm draw log")
        meta, ids = None, None
        while True:
            line = fh.readline()
            if not line.startswith("#"):
                break
            key, _, value = line[2:].partition(": ")
            if key == "meta":
                meta = json.loads(value)
            elif key == "items":
                ids = json.loads(value)
        if meta is None or ids is None:
            raise InputError(f"{path}: draw log header is incomplete")
        header = next(csv.reader([line]))
        n_star = len(header) - 2
        lookup = {k: i for i, k in enumerate(ids)}
        chain, iters, orders = [], [], []
        for lineno, rec in enumerate(csv.reader(fh), start=6):
            if len(rec) != n_star + 2:
                raise InputError(f"{path}: line {lineno} has {len(rec)} fields, expected {n_star + 2}")
            chain.append(int(rec[0]))
            iters.append(int(rec[1]))
            orders.append(_indices(rec[2:], lookup, path))
    orders = np.array(orders, dtype=np.int64).reshape(-1, n_star)
    samples = PosteriorSamples(orders, np.array(iters, dtype=np.int64), meta["n"], meta["acceptance_rho"],
                               meta["acceptance_aset"], meta["config"], np.array(chain, dtype=np.int64))
    return samples, ids


# --------------------------------------------------------------------------
# summaries


def summary_document(summary: PosteriorSummary, samples: PosteriorSamples, item_ids,
                     w_bar: np.ndarray, top: dict | None = None) -> dict:
    ids = list(item_ids)
    doc = {
        "n": samples.n,
        "n_star": samples.n_star,
        "draws": len(samples),
        "selected": [ids[i] for i in summary.ordering()],
        "hps": [{"item_id": ids[i], "w_bar": float(w_bar[i]), "x_bar": float(x)}
                for i, x in zip(summary.hps, summary.x_bar)],
        "w_bar": {ids[i]: float(w_bar[i]) for i in np.flatnonzero(w_bar > 0)},
        "acceptance": {"rho": samples.acceptance_rho, "aset": samples.acceptance_aset},
        "config": samples.config,
    }
    if top is not None:
        doc["top_selection"] = top
    return doc


def read_summary(path, item_ids=None) -> tuple[PosteriorSummary, dict]:
    """A summary JSON back as a :class:`PosteriorSummary`.

    Without ``item_ids``, item positions follow the order of the ``w_bar``
    keys; pass the dataset ids to evaluate against a truth file.
    """
    doc = read_json(path, "summary")
    if item_ids is None:
        item_ids = sorted(set(doc["w_bar"]) | {h["item_id"] for h in doc["hps"]})
    lookup = {k: i for i, k in enumerate(item_ids)}
    order = _indices(doc["selected"], lookup, path)
    hps = _indices([h["item_id"] for h in doc["hps"]], lookup, path)
    x = np.array([h["x_bar"] for h in doc["hps"]], dtype=float)
    a_hat = np.sort(order)
    rho_hat = (np.argsort(order) + 1).astype(np.int64)
    return PosteriorSummary(hps=hps, a_hat=a_hat, rho_hat=rho_hat, x_bar=x), doc


# --------------------------------------------------------------------------
# tables


def write_table(path, rows: list[dict], columns: list[str] | None = None) -> None:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: "" if row.get(k) is None else _cell(row.get(k)) for k in columns})
    Path(path).write_text(buf.getvalue())


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
