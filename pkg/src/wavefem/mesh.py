"""Simplicial meshes in one, two and three dimensions.

A mesh is topological (vertex-index based); per-cell corner coordinates are
kept in a separate array so that periodic interval meshes, whose wrap-around
cell has no single consistent set of global coordinates, can be assembled
like any other cell.

File I/O covers the Triangle (.node/.ele/.edge/.poly) and TetGen
(.node/.ele/.face) ASCII formats, both reading and writing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

__all__ = [
    "Mesh",
    "BcSpec",
    "MeshFormatError",
    "extract_edges",
    "generate_interval_mesh",
    "generate_square_mesh",
    "generate_cube_mesh",
    "read_triangle_mesh",
    "read_tetgen_mesh",
    "write_triangle_mesh",
    "write_tetgen_mesh",
]


class MeshFormatError(ValueError):
    """A mesh file could not be parsed."""


# Local edges of a d-simplex (pairs of local corner indices, lexicographic).
CELL_EDGES = {
    1: ((0, 1),),
    2: ((0, 1), (0, 2), (1, 2)),
    3: ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
}

# Local facets of a d-simplex; entry j is the facet opposite corner j.
CELL_FACETS = {
    1: ((1,), (0,)),
    2: ((1, 2), (0, 2), (0, 1)),
    3: ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)),
}


def _signed_measures(cell_coords: np.ndarray) -> np.ndarray:
    """Signed measure of each simplex from its corner coordinates."""
    dim = cell_coords.shape[2]
    if dim == 1:
        return cell_coords[:, 1, 0] - cell_coords[:, 0, 0]
    diffs = cell_coords[:, 1:, :] - cell_coords[:, :1, :]
    return np.linalg.det(diffs) / factorial(dim)


def _edge_table(cells: np.ndarray, dim: int) -> np.ndarray:
    """Unique vertex pairs (a, b) with a < b, sorted lexicographically."""
    pairs = []
    for a, b in CELL_EDGES[dim]:
        pairs.append(np.sort(cells[:, [a, b]], axis=1))
    table = np.unique(np.vstack(pairs), axis=0)
    return table


class Mesh:
    """Simplicial mesh with derived edge table and boundary facets.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    vertices : (V, dim) array
        Vertex coordinates.
    cells : (C, dim+1) array
        Vertex indices per cell. Cells are reoriented so every signed
        measure is positive; zero-measure cells are rejected.
    boundary_facets : (B, dim) array, optional
        Vertex indices of boundary facets. Derived (all facets incident to
        exactly one cell, marker 1) when omitted.
    boundary_markers : (B,) array, optional
        Integer marker per boundary facet; defaults to 1.
    cell_coords : (C, dim+1, dim) array, optional
        Per-cell corner coordinates, overriding ``vertices[cells]``. Used
        by the periodic interval generator for the wrap-around cell.
    """

    def __init__(self, dim, vertices, cells, boundary_facets=None,
                 boundary_markers=None, cell_coords=None):
        if dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
        self.dim = dim
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != dim:
            raise ValueError(
                f"vertices must have shape (V, {dim}), got {self.vertices.shape}")
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        if cells.ndim != 2 or cells.shape[1] != dim + 1:
            raise ValueError(
                f"cells must have shape (C, {dim + 1}), got {cells.shape}")
        if cells.size and (cells.min() < 0 or cells.max() >= len(self.vertices)):
            raise ValueError("cell vertex index out of range")

        if cell_coords is None:
            cell_coords = self.vertices[cells]
        else:
            cell_coords = np.ascontiguousarray(cell_coords, dtype=float)
            if cell_coords.shape != (len(cells), dim + 1, dim):
                raise ValueError("cell_coords shape mismatch")

        # Canonical orientation: swap the last two corners of inverted cells.
        measures = _signed_measures(cell_coords)
        scale = max(np.ptp(self.vertices, axis=0).max(), 1.0) if len(self.vertices) else 1.0
        degenerate = np.abs(measures) <= 1e-13 * scale ** dim
        if degenerate.any():
            raise ValueError(
                f"degenerate (zero-measure) cells: {np.nonzero(degenerate)[0].tolist()}")
        flip = measures < 0
        if flip.any():
            cells = cells.copy()
            cells[flip, -2], cells[flip, -1] = (
                cells[flip, -1].copy(), cells[flip, -2].copy())
            cell_coords = cell_coords.copy()
            cell_coords[flip, -2], cell_coords[flip, -1] = (
                cell_coords[flip, -1].copy(), cell_coords[flip, -2].copy())
            measures = np.abs(measures)
        self.cells = cells
        self.cell_coords = cell_coords
        self.cell_measures = measures

        self.edges = _edge_table(cells, dim)

        # Facet incidence: sorted vertex tuple -> list of (cell, local facet).
        incidence: dict[tuple, list] = {}
        for c in range(len(cells)):
            for lf, corners in enumerate(CELL_FACETS[dim]):
                key = tuple(sorted(cells[c, list(corners)]))
                incidence.setdefault(key, []).append((c, lf))
        self._facet_incidence = incidence

        if boundary_facets is None:
            keys = sorted(k for k, v in incidence.items() if len(v) == 1)
            boundary_facets = np.array(keys, dtype=np.int64).reshape(len(keys), dim)
            boundary_markers = np.ones(len(keys), dtype=np.int64)
        else:
            boundary_facets = np.ascontiguousarray(boundary_facets, dtype=np.int64)
            boundary_facets = boundary_facets.reshape(-1, dim)
            if boundary_markers is None:
                boundary_markers = np.ones(len(boundary_facets), dtype=np.int64)
            else:
                boundary_markers = np.ascontiguousarray(boundary_markers, dtype=np.int64)
            if len(boundary_markers) != len(boundary_facets):
                raise ValueError("one marker per boundary facet required")
            for f in boundary_facets:
                key = tuple(sorted(f))
                owners = incidence.get(key)
                if owners is None:
                    raise ValueError(f"boundary facet {tuple(f)} is not a cell face")
                if len(owners) != 1:
                    raise ValueError(
                        f"boundary facet {tuple(f)} is shared by {len(owners)} cells")
        self.boundary_facets = boundary_facets
        self.boundary_markers = boundary_markers

        for arr in (self.vertices, self.cells, self.cell_coords,
                    self.cell_measures, self.edges, self.boundary_facets,
                    self.boundary_markers):
            arr.setflags(write=False)

    # -- basic counts ------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __repr__(self):
        return (f"Mesh(dim={self.dim}, vertices={self.n_vertices}, "
                f"cells={self.n_cells}, edges={self.n_edges}, "
                f"boundary_facets={len(self.boundary_facets)})")

    # -- boundary geometry -------------------------------------------------

    def facet_owner(self, facet) -> tuple[int, int]:
        """Owning cell and local facet index of a boundary facet."""
        owners = self._facet_incidence[tuple(sorted(facet))]
        if len(owners) != 1:
            raise ValueError(f"facet {tuple(facet)} is not on the boundary")
        return owners[0]

    def boundary_facet_geometry(self, k: int):
        """Geometry of boundary facet ``k``.

        Returns ``(owner_cell, corner_coords, normal, measure)`` with the
        unit normal pointing out of the owning cell. Corner coordinates are
        taken from the owner's ``cell_coords`` row so they stay consistent
        with the cell geometry.
        """
        facet = self.boundary_facets[k]
        cell, lf = self.facet_owner(facet)
        local = CELL_FACETS[self.dim][lf]
        coords = self.cell_coords[cell][list(local)]
        opposite = self.cell_coords[cell][lf]
        if self.dim == 1:
            normal = np.array([1.0 if coords[0, 0] > opposite[0] else -1.0])
            measure = 1.0
        elif self.dim == 2:
            t = coords[1] - coords[0]
            normal = np.array([t[1], -t[0]])
            measure = float(np.linalg.norm(t))
        else:
            n = np.cross(coords[1] - coords[0], coords[2] - coords[0])
            normal = n
            measure = float(np.linalg.norm(n)) / 2.0
        if self.dim > 1:
            normal = normal / np.linalg.norm(normal)
            if np.dot(normal, coords.mean(axis=0) - opposite) < 0.0:
                normal = -normal
        return cell, coords, normal, measure


def extract_edges(mesh: Mesh) -> np.ndarray:
    """Derive the canonical edge table of a mesh from its cells.

    Each edge appears once, stored (a, b) with a < b, in lexicographic
    order; the result is independent of cell ordering.
    """
    return _edge_table(mesh.cells, mesh.dim)


# -- boundary conditions ---------------------------------------------------

def _zero(x):
    return 0.0


@dataclass(frozen=True)
class BcSpec:
    """Boundary-condition assignment by facet marker.

    Markers in ``dirichlet_markers`` prescribe the scalar field (datum
    ``g``); markers in ``neumann_markers`` prescribe its normal derivative
    (datum ``f``). The two sets must be disjoint and together must cover
    every marker present on the mesh boundary.
    """

    dirichlet_markers: frozenset = frozenset()
    neumann_markers: frozenset = frozenset()
    g: Callable = _zero
    f: Callable = _zero

    def __post_init__(self):
        object.__setattr__(self, "dirichlet_markers",
                           frozenset(self.dirichlet_markers))
        object.__setattr__(self, "neumann_markers",
                           frozenset(self.neumann_markers))
        overlap = self.dirichlet_markers & self.neumann_markers
        if overlap:
            raise ValueError(f"markers {sorted(overlap)} appear in both sets")

    @staticmethod
    def all_dirichlet(mesh: Mesh, g: Callable = _zero) -> "BcSpec":
        return BcSpec(frozenset(np.unique(mesh.boundary_markers).tolist()),
                      frozenset(), g=g)

    @staticmethod
    def all_neumann(mesh: Mesh, f: Callable = _zero) -> "BcSpec":
        return BcSpec(frozenset(),
                      frozenset(np.unique(mesh.boundary_markers).tolist()), f=f)


# -- structured generators -------------------------------------------------

def generate_interval_mesh(n_elements: int, length: float,
                           periodic: bool = False) -> Mesh:
    """Uniform 1D mesh of ``n_elements`` cells on [0, length].

    Non-periodic meshes carry two point boundary facets with markers 1
    (left) and 2 (right). With ``periodic=True`` the end vertices are
    identified: the mesh has ``n_elements`` vertices, no boundary facets,
    and the wrap-around cell's corner coordinates are (x_last, length).
    """
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    if length <= 0:
        raise ValueError("length must be positive")
    if not periodic:
        x = np.linspace(0.0, length, n_elements + 1).reshape(-1, 1)
        cells = np.column_stack([np.arange(n_elements),
                                 np.arange(1, n_elements + 1)])
        facets = np.array([[0], [n_elements]], dtype=np.int64)
        markers = np.array([1, 2], dtype=np.int64)
        return Mesh(1, x, cells, facets, markers)
    if n_elements < 2:
        raise ValueError("periodic interval needs at least 2 elements")
    x = np.linspace(0.0, length, n_elements, endpoint=False).reshape(-1, 1)
    cells = np.column_stack([np.arange(n_elements),
                             (np.arange(n_elements) + 1) % n_elements])
    coords = x[cells]
    coords[-1, 1, 0] = length  # wrap cell spans [x_last, length]
    return Mesh(1, x, cells,
                boundary_facets=np.zeros((0, 1), dtype=np.int64),
                boundary_markers=np.zeros(0, dtype=np.int64),
                cell_coords=coords)


def generate_square_mesh(n: int) -> Mesh:
    """Unit square split into n x n quads, each cut into two triangles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(s, s, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    cells = []
    for i in range(n):
        for j in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    return Mesh(2, verts, np.array(cells, dtype=np.int64))


# Kuhn decomposition of the unit cube: one tetrahedron per permutation,
# walking corner-to-corner one axis at a time.
_CUBE_TET_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def generate_cube_mesh(n: int) -> Mesh:
    """Unit cube split into n^3 subcubes of six tetrahedra each."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s = np.linspace(0.0, 1.0, n + 1)
    xx, yy, zz = np.meshgrid(s, s, s, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    cells = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for perm in _CUBE_TET_PERMS:
                    corner = np.array([i, j, k])
                    tet = [vid(*corner)]
                    for axis in perm:
                        corner = corner + np.eye(3, dtype=int)[axis]
                        tet.append(vid(*corner))
                    cells.append(tet)
    return Mesh(3, verts, np.array(cells, dtype=np.int64))


# -- Triangle / TetGen file I/O --------------------------------------------

def _data_rows(path):
    """Yield (line_number, tokens) for non-empty, non-comment lines."""
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _parse_ints(path, lineno, tokens, count):
    try:
        vals = [int(t) for t in tokens[:count]]
    except ValueError as exc:
        raise MeshFormatError(f"{path}:{lineno}: expected integers, got {tokens}") from exc
    if len(vals) < count:
        raise MeshFormatError(f"{path}:{lineno}: expected {count} fields")
    return vals


def _read_node_file(path, expected_dim):
    rows = _data_rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise MeshFormatError(f"{path}: empty node file") from None
    n, dim, _n_attr, _has_marker = _parse_ints(path, lineno, header, 4)
    if dim != expected_dim:
        raise MeshFormatError(
            f"{path}:{lineno}: dimension {dim}, expected {expected_dim}")
    coords = np.empty((n, dim))
    base = None
    seen = 0
    for lineno, tokens in rows:
        if len(tokens) < 1 + dim:
            raise MeshFormatError(f"{path}:{lineno}: short node row")
        idx = _parse_ints(path, lineno, tokens, 1)[0]
        if base is None:
            if idx not in (0, 1):
                raise MeshFormatError(
                    f"{path}:{lineno}: first node index must be 0 or 1, got {idx}")
            base = idx
        i = idx - base
        if not 0 <= i < n:
            raise MeshFormatError(f"{path}:{lineno}: node index {idx} out of range")
        try:
            coords[i] = [float(t) for t in tokens[1:1 + dim]]
        except ValueError as exc:
            raise MeshFormatError(f"{path}:{lineno}: bad coordinate") from exc
        seen += 1
    if seen != n:
        raise MeshFormatError(f"{path}: header promised {n} nodes, found {seen}")
    return coords, base


def _read_ele_file(path, nodes_per_cell, n_vertices, node_base):
    rows = _data_rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise MeshFormatError(f"{path}: empty element file") from None
    n, per, _n_attr = _parse_ints(path, lineno, header, 3)
    if per != nodes_per_cell:
        raise MeshFormatError(
            f"{path}:{lineno}: {per} nodes per element, expected {nodes_per_cell}")
    cells = np.empty((n, per), dtype=np.int64)
    base = None
    seen = 0
    for lineno, tokens in rows:
        vals = _parse_ints(path, lineno, tokens, 1 + per)
        if base is None:
            base = vals[0] if vals[0] in (0, 1) else node_base
        i = vals[0] - base
        if not 0 <= i < n:
            raise MeshFormatError(f"{path}:{lineno}: element index {vals[0]} out of range")
        conn = np.array(vals[1:], dtype=np.int64) - node_base
        if conn.min() < 0 or conn.max() >= n_vertices:
            raise MeshFormatError(f"{path}:{lineno}: vertex index out of range")
        cells[i] = conn
        seen += 1
    if seen != n:
        raise MeshFormatError(f"{path}: header promised {n} elements, found {seen}")
    return cells


def _read_facet_file(path, facet_size, n_vertices, node_base):
    """Read a Triangle .edge or TetGen .face file; keep boundary facets.

    When the file carries a marker column, rows with marker 0 (interior)
    are dropped; otherwise every row is kept with marker 1.
    """
    rows = _data_rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise MeshFormatError(f"{path}: empty facet file") from None
    n, has_marker = _parse_ints(path, lineno, header, 2)
    facets, markers = [], []
    seen = 0
    for lineno, tokens in rows:
        want = 1 + facet_size + (1 if has_marker else 0)
        vals = _parse_ints(path, lineno, tokens, want)
        conn = np.array(vals[1:1 + facet_size], dtype=np.int64) - node_base
        if conn.min() < 0 or conn.max() >= n_vertices:
            raise MeshFormatError(f"{path}:{lineno}: vertex index out of range")
        marker = vals[1 + facet_size] if has_marker else 1
        if marker != 0:
            facets.append(conn)
            markers.append(marker)
        seen += 1
    if seen != n:
        raise MeshFormatError(f"{path}: header promised {n} facets, found {seen}")
    if not facets:
        return None, None
    return np.array(facets), np.array(markers, dtype=np.int64)


def _read_poly_segments(path, n_vertices, node_base):
    """Boundary segments from a Triangle .poly file (node section skipped)."""
    rows = list(_data_rows(path))
    if not rows:
        raise MeshFormatError(f"{path}: empty poly file")
    lineno, header = rows[0]
    n_nodes = _parse_ints(path, lineno, header, 1)[0]
    pos = 1 + n_nodes  # node rows are listed inline when n_nodes > 0
    if pos >= len(rows):
        raise MeshFormatError(f"{path}: missing segment section")
    lineno, header = rows[pos]
    n_seg, has_marker = _parse_ints(path, lineno, header, 2)
    facets, markers = [], []
    for lineno, tokens in rows[pos + 1:pos + 1 + n_seg]:
        want = 3 + (1 if has_marker else 0)
        vals = _parse_ints(path, lineno, tokens, want)
        conn = np.array(vals[1:3], dtype=np.int64) - node_base
        if conn.min() < 0 or conn.max() >= n_vertices:
            raise MeshFormatError(f"{path}:{lineno}: vertex index out of range")
        facets.append(conn)
        markers.append(vals[3] if has_marker else 1)
    if len(facets) != n_seg:
        raise MeshFormatError(f"{path}: header promised {n_seg} segments")
    if not facets:
        return None, None
    return np.array(facets), np.array(markers, dtype=np.int64)


def read_triangle_mesh(node_path, ele_path, poly_or_edge_path=None) -> Mesh:
    """Read a 2D mesh in Triangle format.

    Boundary facets come from the optional .edge or .poly file (rows with
    nonzero marker); without one they are derived as the edges incident to
    exactly one triangle, with marker 1. Node indices may be 0- or 1-based,
    detected from the first node row.
    """
    coords, base = _read_node_file(node_path, expected_dim=2)
    cells = _read_ele_file(ele_path, 3, len(coords), base)
    facets = markers = None
    if poly_or_edge_path is not None:
        if str(poly_or_edge_path).endswith(".poly"):
            facets, markers = _read_poly_segments(poly_or_edge_path, len(coords), base)
        else:
            facets, markers = _read_facet_file(poly_or_edge_path, 2, len(coords), base)
    try:
        return Mesh(2, coords, cells, facets, markers)
    except ValueError as exc:
        raise MeshFormatError(f"{node_path}/{ele_path}: {exc}") from exc


def read_tetgen_mesh(node_path, ele_path, face_path=None) -> Mesh:
    """Read a 3D mesh in TetGen format (.node/.ele and optional .face)."""
    coords, base = _read_node_file(node_path, expected_dim=3)
    cells = _read_ele_file(ele_path, 4, len(coords), base)
    facets = markers = None
    if face_path is not None:
        facets, markers = _read_facet_file(face_path, 3, len(coords), base)
    try:
        return Mesh(3, coords, cells, facets, markers)
    except ValueError as exc:
        raise MeshFormatError(f"{node_path}/{ele_path}: {exc}") from exc


def _write_mesh_files(mesh, node_path, ele_path, facet_path):
    if (mesh.boundary_markers == 0).any():
        raise ValueError("marker 0 is reserved for interior facets")
    with open(node_path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.dim} 0 0\n")
        for i, v in enumerate(mesh.vertices, start=1):
            fh.write(f"{i} " + " ".join(repr(float(c)) for c in v) + "\n")
    with open(ele_path, "w") as fh:
        fh.write(f"{mesh.n_cells} {mesh.dim + 1} 0\n")
        for i, cell in enumerate(mesh.cells, start=1):
            fh.write(f"{i} " + " ".join(str(int(v) + 1) for v in cell) + "\n")
    if facet_path is not None:
        with open(facet_path, "w") as fh:
            fh.write(f"{len(mesh.boundary_facets)} 1\n")
            for i, (f, m) in enumerate(zip(mesh.boundary_facets,
                                           mesh.boundary_markers), start=1):
                fh.write(f"{i} " + " ".join(str(int(v) + 1) for v in f)
                         + f" {int(m)}\n")


def write_triangle_mesh(mesh: Mesh, node_path, ele_path, edge_path=None):
    """Write a 2D mesh in Triangle format with 1-based indices."""
    if mesh.dim != 2:
        raise ValueError("Triangle format is 2D only")
    _write_mesh_files(mesh, node_path, ele_path, edge_path)


def write_tetgen_mesh(mesh: Mesh, node_path, ele_path, face_path=None):
    """Write a 3D mesh in TetGen format with 1-based indices."""
    if mesh.dim != 3:
        raise ValueError("TetGen format is 3D only")
    _write_mesh_files(mesh, node_path, ele_path, face_path)
