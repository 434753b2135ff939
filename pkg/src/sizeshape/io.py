"""Readers and writers for the on-disk formats.

Configuration CSV
    Header ``object_id,landmark_id,coord_1,...,coord_p`` optionally followed
    by covariate columns ``z_1,...,z_d`` (constant within an object).  Rows of
    one object are contiguous or not; landmarks are sorted by ``landmark_id``.

Matrix CSV
    A plain ``k x p`` table of numbers, with an optional non-numeric header.

Chain CSV
    One row per stored draw: ``draw``, the identified coefficients
    ``B{h}[{j},{l}]``, the lower triangle ``Sigma[{a},{b}]`` and ``loglik``.

Priors JSON
    ``{"nu": .., "psi": [[..]], "m": [[..] x p], "v": [[[..]]] x p}``.  The
    abbreviated form ``{"m_scalar": 0, "v_scale": 1e6}`` expands to
    ``M_l = m_scalar``, ``V_l = v_scale I``; missing ``nu`` and ``psi`` default
    to ``k + 1`` and ``I_k``.  ``Sigma ~ IW(nu, psi)`` has mean
    ``psi / (nu - k - 1)``.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import beta_names, flatten_params, sigma_names
from .exceptions import DataFormatError
from .model import ParamState, Priors


def _fmt(x: float) -> str:
    return repr(float(x))


def write_configurations(path, coords, z=None) -> None:
    """Write ``(n, m, p)`` landmark arrays (and optional ``(n, d)`` covariates)."""
    coords = np.asarray(coords, dtype=float)
    n, m, p = coords.shape
    header = ["object_id", "landmark_id"] + [f"coord_{c + 1}" for c in range(p)]
    if z is not None:
        z = np.asarray(z, dtype=float).reshape(n, -1)
        header += [f"z_{h + 1}" for h in range(z.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(n):
            extra = [] if z is None else [_fmt(v) for v in z[i]]
            for j in range(m):
                w.writerow([i + 1, j + 1] + [_fmt(v) for v in coords[i, j]] + extra)


def read_configurations(path):
    """Return ``(coords, z, object_ids)``; ``z`` is None when the file has no covariate columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["object_id", "landmark_id"]:
        raise DataFormatError(f"{path}: row 1: expected header starting object_id,landmark_id")
    coord_cols = [i for i, h in enumerate(header) if h.startswith("coord_")]
    z_cols = [i for i, h in enumerate(header) if h.startswith("z_")]
    p = len(coord_cols)
    if p not in (2, 3):
        raise DataFormatError(f"{path}: row 1: need 2 or 3 coord columns, found {p}")
    objects: dict[str, dict[int, np.ndarray]] = {}
    covariates: dict[str, np.ndarray] = {}
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}: row {r}: expected {len(header)} fields, got {len(row)}")
        try:
            obj = row[0].strip()
            lm = int(row[1])
            xyz = np.array([float(row[c]) for c in coord_cols])
            zz = np.array([float(row[c]) for c in z_cols])
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {r}: {exc}") from None
        if not (np.all(np.isfinite(xyz)) and np.all(np.isfinite(zz))):
            raise DataFormatError(f"{path}: row {r}: non-finite value")
        lms = objects.setdefault(obj, {})
        if lm in lms:
            raise DataFormatError(f"{path}: row {r}: duplicate landmark {lm} for object {obj}")
        lms[lm] = xyz
        if z_cols:
            if obj in covariates and not np.array_equal(covariates[obj], zz):
                raise DataFormatError(f"{path}: row {r}: covariates vary within object {obj}")
            covariates[obj] = zz
    if not objects:
        raise DataFormatError(f"{path}: no data rows")
    ids = list(objects)
    ref = sorted(objects[ids[0]])
    for obj in ids:
        if sorted(objects[obj]) != ref:
            raise DataFormatError(f"{path}: object {obj} has landmarks {sorted(objects[obj])}, expected {ref}")
    coords = np.stack([np.stack([objects[obj][lm] for lm in ref]) for obj in ids])
    z = np.stack([covariates[obj] for obj in ids]) if z_cols else None
    return coords, z, ids


def write_matrix(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in a:
            w.writerow([_fmt(v) for v in row])


def read_matrix(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for r, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                if r == 1 and not rows:
                    continue  # header
                raise DataFormatError(f"{path}: row {r}: {exc}") from None
    if not rows or len({len(x) for x in rows}) != 1:
        raise DataFormatError(f"{path}: expected a non-empty rectangular table")
    return np.array(rows)


@dataclass
class ChainTable:
    """Draws read back from a chain CSV."""

    beta: np.ndarray
    sigma: np.ndarray
    loglik: np.ndarray

    def __len__(self) -> int:
        return self.beta.shape[0]


def write_chain(path, chain) -> None:
    """Write identified draws (``beta``, ``sigma``, ``loglik``) one row per draw."""
    flat = flatten_params(chain.beta, chain.sigma)
    names = list(flat)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["draw"] + names + ["loglik"])
        for s in range(len(chain.loglik)):
            w.writerow([s] + [_fmt(flat[nm][s]) for nm in names] + [_fmt(chain.loglik[s])])


def _parse_name(name: str):
    base, idx = name.rstrip("]").split("[")
    return base, [int(v) for v in idx.split(",")]


def read_chain(path) -> ChainTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataFormatError(f"{path}: chain has no draws")
    header = rows[0]
    if header[0] != "draw" or header[-1] != "loglik":
        raise DataFormatError(f"{path}: row 1: expected columns draw,...,loglik")
    try:
        data = np.array([[float(c) for c in row] for row in rows[1:] if row])
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    names = header[1:-1]
    try:
        b_idx = [(int(base[1:]), *idx) for base, idx in map(_parse_name, names) if base != "Sigma"]
        d, k, p = (max(i[c] for i in b_idx) for c in range(3))
    except ValueError:
        raise DataFormatError(f"{path}: row 1: unexpected parameter columns") from None
    if names != beta_names(p, k, d) + sigma_names(k):
        raise DataFormatError(f"{path}: row 1: unexpected parameter columns")
    nb = p * k * d
    beta = data[:, 1:1 + nb].reshape(-1, p, k * d)
    sigma = np.zeros((len(data), k, k))
    rows_, cols_ = np.tril_indices(k)
    sigma[:, rows_, cols_] = data[:, 1 + nb:-1]
    sigma[:, cols_, rows_] = data[:, 1 + nb:-1]
    return ChainTable(beta, sigma, data[:, -1])


def priors_from_dict(doc: dict, k: int, p: int, d: int = 1) -> Priors:
    """Build priors from a JSON document, expanding the abbreviated form."""
    try:
        nu = float(doc.get("nu", k + 1))
        psi = np.asarray(doc.get("psi", np.eye(k)), dtype=float)
        if "m" in doc or "v" in doc:
            m = np.asarray(doc["m"], dtype=float)
            v = np.asarray(doc["v"], dtype=float)
        else:
            m = np.full((p, k * d), float(doc.get("m_scalar", 0.0)))
            v = np.broadcast_to(float(doc.get("v_scale", 1e6)) * np.eye(k * d), (p, k * d, k * d)).copy()
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"priors: {exc}") from None
    if m.shape != (p, k * d):
        raise DataFormatError(f"priors: m must have shape {(p, k * d)}, got {m.shape}")
    return Priors(m=m, v=v, nu=nu, psi=psi)


def read_priors(path, k: int, p: int, d: int = 1) -> Priors:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    return priors_from_dict(doc, k, p, d)


def state_to_dict(state: ParamState) -> dict:
    return {
        "beta": state.beta.tolist(),
        "sigma": state.sigma.tolist(),
    }


def state_from_dict(doc: dict) -> ParamState:
    beta = np.asarray(doc["beta"], dtype=float)
    sigma = np.asarray(doc["sigma"], dtype=float)
    rot = np.asarray(doc.get("rotations", np.zeros((0,) + (beta.shape[0],) * 2)), dtype=float)
    return ParamState(beta, sigma, rot)


def read_truth(path) -> ParamState:
    """Read a truth JSON (as written by ``simulate``); returns the raw true state."""
    try:
        doc = json.loads(Path(path).read_text())
        return state_from_dict(doc["raw"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
