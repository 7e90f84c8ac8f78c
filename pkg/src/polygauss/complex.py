"""The nerve of the facets and its face count (the holonomic rank)."""
from __future__ import annotations

from itertools import combinations

from .errors import NotGeneralPosition
from .geometry import FaceClass, GeneralPositionReport, HPolyhedron


def _order_key(J):
    return (len(J), J)


class SimplicialComplex:
    """Downward-closed family of sorted label tuples, always containing ().

    Faces are kept in basis order (by cardinality, then lexicographic), which
    fixes the layout of every state vector and coefficient matrix.
    """

    def __init__(self, faces, labels=None):
        fs = {tuple(sorted(J)) for J in faces}
        fs.add(())
        for J in fs:
            if len(set(J)) != len(J):
                raise ValueError(f"repeated label in face {J}")
            for sub in combinations(J, len(J) - 1) if J else ():
                if sub not in fs:
                    raise ValueError(f"not downward closed: {J} present but {sub} missing")
        self.faces: tuple[tuple[int, ...], ...] = tuple(sorted(fs, key=_order_key))
        verts = sorted({j for J in self.faces for j in J})
        self.labels: tuple[int, ...] = tuple(labels) if labels is not None else tuple(verts)
        missing = set(self.labels) - set(verts)
        if missing:
            raise ValueError(f"labels {sorted(missing)} are not vertices of the complex")
        self.index = {J: i for i, J in enumerate(self.faces)}

    @classmethod
    def generated_by(cls, maximal, labels=None) -> "SimplicialComplex":
        """Downward closure of the given faces."""
        faces = set()
        for F in maximal:
            F = tuple(sorted(F))
            for k in range(len(F) + 1):
                faces.update(combinations(F, k))
        return cls(faces, labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int:
        """Largest face cardinality."""
        return len(self.faces[-1])

    def __len__(self):
        return len(self.faces)

    def __contains__(self, J):
        return tuple(sorted(J)) in self.index

    def __iter__(self):
        return iter(self.faces)

    def __eq__(self, other):
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return set(self.faces) == set(other.faces)

    def __hash__(self):
        return hash(frozenset(self.faces))

    def __repr__(self):
        return f"SimplicialComplex({[list(J) for J in self.faces]})"

    def link(self, J) -> "SimplicialComplex":
        """{G disjoint from J : G ∪ J is a face}."""
        J = set(J)
        faces = [tuple(k for k in F if k not in J) for F in self.faces if J.issubset(F)]
        return SimplicialComplex(faces)

    def is_maximal(self, J) -> bool:
        J = tuple(sorted(J))
        return not any(len(F) > len(J) and set(J).issubset(F) for F in self.faces)


def nerve(p: HPolyhedron, gp: GeneralPositionReport) -> SimplicialComplex:
    """Index sets J ⊆ [n] with F_J nonempty, read off the homogenized report.

    ``gp`` must come from :func:`check_general_position` applied to
    ``homogenize(p)``; for J not containing 0 a full-dimensional cone F̂_J has
    a relative-interior point with x_0 > 0, i.e. a point of F_J.
    """
    if not gp.in_general_position:
        raise NotGeneralPosition(gp.witness)
    faces = [J for J, cls in gp.face_dims.items() if cls is FaceClass.FULL_DIM and 0 not in J]
    c = SimplicialComplex(faces, labels=range(1, p.n + 1))
    return c


def holonomic_rank(c: SimplicialComplex) -> int:
    return len(c)
