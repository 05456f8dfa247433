# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Artifact files: nodal arrays, Cauchy data, histories, summaries, manifests.

Array files are plain text, a '#' header with the grid then one CSV row per
array row. A spatial field has one row per x2 node, Cauchy data one row per
time level. Floats are written with repr(), the shortest string that reads
back to the same double, so artifacts round-trip bit for bit and their
checksums are platform independent.

    # qrmwave array
    # what = phantom
    # x1_min = 0.0
    ...
    0.0,0.30901699437494745,...
"""

import configparser
import dataclasses
import hashlib
import logging
import os
import typing as t

import numpy as np

from . import grid as grid_

log = logging.getLogger(__name__)

MAGIC = "# qrmwave array"
MANIFEST = 'MANIFEST.sha256'

_GRID_FIELDS = [_.name for _ in dataclasses.fields(grid_.SpaceTimeGrid)]


class ParseError(grid_.DataError):
    def __init__(self, path, line, message):
        super().__init__("{}:{}: {}".format(path, line, message))
        self.path = path
        self.line = line


def _number(value) -> str:
    return repr(float(value))


def _makedirs(path):
    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)


###############################################################################
# Nodal arrays

def write_array(path, values, grid: grid_.SpaceTimeGrid, what=""):
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise grid_.DataError("only 2D arrays can be written, got shape {}".format(values.shape))
    _makedirs(path)
    log.debug("Writing %s to %s", what or "array", path)
    with open(path, 'w', encoding='utf-8', newline='\n') as fp:
        fp.write(MAGIC + '\n')
        fp.write("# what = {}\n".format(what))
        for name in _GRID_FIELDS:
            value = getattr(grid, name)
            fp.write("# {} = {}\n".format(name, value if isinstance(value, int) else _number(value)))
        fp.write("# shape = {}, {}\n".format(*values.shape))
        for row in values:
            fp.write(",".join(_number(_) for _ in row) + '\n')


def read_array(path) -> t.Tuple[grid_.SpaceTimeGrid, np.ndarray, str]:
    """Return grid, values and the <what> label of an array file."""
    header: t.Dict[str, str] = {}
    rows = []
    try:
        with open(path, encoding='utf-8') as fp:
            lines = fp.read().splitlines()
    except OSError as e:
        raise grid_.DataError("cannot read {}: {}".format(path, e.strerror or e))

    if not lines or lines[0] != MAGIC:
        raise ParseError(path, 1, "not a qrmwave array file")
    for lineno, line in enumerate(lines[1:], 2):
        if line.startswith('#'):
            key, sep, value = line[1:].partition('=')
            if not sep:
                raise ParseError(path, lineno, "malformed header line")
            header[key.strip()] = value.strip()
            continue
        try:
            rows.append((lineno, [float(_) for _ in line.split(',')]))
        except ValueError as e:
            raise ParseError(path, lineno, str(e))

    try:
        grid = grid_.SpaceTimeGrid(**{
            name: (int if name in ('nx', 'ny', 'nt') else float)(header[name])
            for name in _GRID_FIELDS
        })
        shape = tuple(int(_) for _ in header['shape'].split(','))
    except KeyError as e:
        raise ParseError(path, 1, "missing header key {}".format(e))
    except ValueError as e:
        raise ParseError(path, 1, "bad header value: {}".format(e))

    for lineno, row in rows:
        if len(row) != shape[1]:
            raise ParseError(path, lineno, "expected {} values, got {}".format(shape[1], len(row)))
    if len(rows) != shape[0]:
        raise ParseError(path, len(lines), "expected {} rows, got {}".format(shape[0], len(rows)))
    values = np.array([_[1] for _ in rows], dtype=float).reshape(shape)
    return grid, values, header.get('what', "")


def write_field(path, values, grid: grid_.SpaceTimeGrid, what=""):
    grid_.check_shape(values, grid.spatial_shape, what or "field")
    write_array(path, values, grid, what)


def read_field(path) -> t.Tuple[grid_.SpaceTimeGrid, np.ndarray]:
    grid, values, what = read_array(path)
    if values.shape != grid.spatial_shape:
        raise grid_.GridMismatch("{}: shape {} does not match grid {}".format(
            path, values.shape, grid.describe()))
    return grid, values


###############################################################################
# Cauchy data

def cauchy_path(dirname, segment: grid_.SEGMENT, name):
    return os.path.join(dirname, "{}_{}.csv".format(segment.name, name))


def write_cauchy(dirname, data: grid_.CauchyData):
    for seg, name, values in data.items():
        write_array(cauchy_path(dirname, seg, name), values, data.grid,
                    "{} on {}".format(name, seg.name))


def read_cauchy(dirname) -> grid_.CauchyData:
    grids = set()
    f, g = {}, {}
    for seg in grid_.SEGMENT:
        for name, store in (('f', f), ('g', g)):
            path = cauchy_path(dirname, seg, name)
            if not os.path.exists(path):
                raise grid_.DataError("missing Cauchy data file {}".format(path))
            grid, store[seg], _ = read_array(path)
            grids.add(grid)
    if len(grids) != 1:
        raise grid_.GridMismatch("Cauchy data files in {} disagree on the grid".format(dirname))
    return grid_.CauchyData(grids.pop(), f, g)


###############################################################################
# Tables and summaries

def write_csv(path, columns, rows):
    _makedirs(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as fp:
        fp.write(",".join(columns) + '\n')
        for row in rows:
            fp.write(",".join(_number(_) if isinstance(_, float) else str(_) for _ in row) + '\n')


def write_history(path, history):
    write_csv(path, history.columns, history.rows())


def write_summary(path, items: t.Dict[str, t.Any], section='summary'):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep case
    cp[section] = {k: _number(v) if isinstance(v, float) else str(v) for k, v in items.items()}
    _makedirs(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as fp:
        cp.write(fp)


def read_summary(path) -> t.Dict[str, t.Dict[str, str]]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        if not cp.read(path, encoding='utf-8'):
            raise grid_.DataError("missing summary file {}".format(path))
    except configparser.Error as e:
        raise ParseError(path, getattr(e, 'lineno', 0), e.message)
    return {section: dict(cp[section]) for section in cp.sections()}


###############################################################################
# Manifest

def sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as fp:
        for block in iter(lambda: fp.read(65536), b''):
            digest.update(block)
    return digest.hexdigest()


def _artifacts(root):
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for filename in filenames:
            path = os.path.join(dirpath, filename)
            rel = os.path.relpath(path, root).replace(os.sep, '/')
            if rel != MANIFEST:
                yield rel


def write_manifest(root) -> str:
    """List every file under <root> with its checksum, sorted by path."""
    path = os.path.join(root, MANIFEST)
    with open(path, 'w', encoding='utf-8', newline='\n') as fp:
        for rel in sorted(_artifacts(root)):
            fp.write("{}  {}\n".format(sha256(os.path.join(root, rel)), rel))
    log.debug("Manifest written to %s", path)
    return path


def verify_manifest(root) -> t.List[str]:
    """Paths under <root> whose checksum does not match the manifest."""
    path = os.path.join(root, MANIFEST)
    bad = []
    try:
        with open(path, encoding='utf-8') as fp:
            lines = fp.read().splitlines()
    except OSError as e:
        raise grid_.DataError("cannot read manifest {}: {}".format(path, e.strerror or e))
    for lineno, line in enumerate(lines, 1):
        digest, sep, rel = line.partition('  ')
        if not sep:
            raise ParseError(path, lineno, "malformed manifest line")
        artifact = os.path.join(root, rel)
        if not os.path.exists(artifact) or sha256(artifact) != digest:
            log.warning("Checksum mismatch: %s", rel)
            bad.append(rel)
    return bad
