"""Image-method specular ray tracer.

Candidate reflectors are the exterior building walls and the ground plane.
Every path gets a real, positive amplitude

    sqrt(P_tx) * lambda / (4 pi d_total) * prod(10 ** (-loss_db / 20))

with isotropic unit-gain antennas; all phase is attributed to the delay and
applied later when the narrowband coefficient is formed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geo import LocalPoint
from .scene import EPS, Scene, segments_occluded

C0 = 299792458.0


@dataclass(frozen=True)
class TraceConfig:
    max_reflection_order: int = 2
    carrier_frequency_hz: float = 7e9
    tx_power_w: float = 1.0

    def __post_init__(self):
        if int(self.max_reflection_order) != self.max_reflection_order or self.max_reflection_order < 0:
            raise ValueError("max_reflection_order must be a non-negative integer")
        if not self.carrier_frequency_hz > 0:
            raise ValueError("carrier_frequency_hz must be > 0")
        if not self.tx_power_w > 0:
            raise ValueError("tx_power_w must be > 0")

    @property
    def wavelength(self) -> float:
        return C0 / self.carrier_frequency_hz


@dataclass(frozen=True)
class PropagationPath:
    gain: complex
    delay: float
    order: int
    vertices: tuple[tuple[float, float, float], ...]

    @property
    def length(self) -> float:
        return self.delay * C0

    def to_json(self) -> str:
        return json.dumps({
            "vertices": [list(v) for v in self.vertices],
            "gain_abs": abs(self.gain),
            "delay_ns": self.delay * 1e9,
            "order": self.order,
        })


@dataclass(frozen=True)
class Face:
    """A planar reflector: unit outward normal ``n`` and offset ``c`` (n.x = c)."""
    normal: tuple[float, float, float]
    offset: float
    loss_db: float
    kind: str  # "wall" or "ground"
    # wall extent: base segment p0 -> p1 and z range
    p0: tuple[float, float] = (0.0, 0.0)
    p1: tuple[float, float] = (0.0, 0.0)
    z_range: tuple[float, float] = (0.0, 0.0)


def scene_faces(scene: Scene) -> list[Face]:
    faces = []
    zt = scene.terrain_z
    for b in scene.buildings:
        loss = scene.materials[b.material]
        for (x0, y0), (x1, y1) in b.walls():
            ex, ey = x1 - x0, y1 - y0
            L = np.hypot(ex, ey)
            nx, ny = ey / L, -ex / L  # outward for CCW footprints
            faces.append(Face((nx, ny, 0.0), nx * x0 + ny * y0, loss, "wall",
                              (x0, y0), (x1, y1), (zt, zt + b.height)))
    if scene.terrain_material is not None:
        faces.append(Face((0.0, 0.0, 1.0), zt, scene.materials[scene.terrain_material], "ground"))
    return faces


def mirror_point(p, face: Face) -> np.ndarray:
    """Reflect point(s) ``p`` across the infinite plane containing ``face``."""
    p = np.asarray(p.as_tuple() if isinstance(p, LocalPoint) else p, dtype=float)
    n = np.asarray(face.normal)
    s = p[..., 0] * n[0] + p[..., 1] * n[1] + p[..., 2] * n[2] - face.offset
    return p - 2.0 * s[..., None] * n


class _FaceTable:
    """Array view of the face list for vectorised queries."""

    def __init__(self, faces: list[Face], bounds):
        self.faces = faces
        self.n = np.array([f.normal for f in faces], dtype=float).reshape(-1, 3)
        self.c = np.array([f.offset for f in faces], dtype=float)
        self.amp = np.array([10.0 ** (-f.loss_db / 20.0) for f in faces], dtype=float)
        self.is_ground = np.array([f.kind == "ground" for f in faces], dtype=bool)
        self.p0 = np.array([f.p0 for f in faces], dtype=float).reshape(-1, 2)
        self.p1 = np.array([f.p1 for f in faces], dtype=float).reshape(-1, 2)
        self.zr = np.array([f.z_range for f in faces], dtype=float).reshape(-1, 2)
        self.bounds = bounds

    def side(self, f, p):
        """Signed distance of points ``p`` (..., 3) to planes ``f``."""
        n = self.n[f]
        return p[..., 0] * n[..., 0] + p[..., 1] * n[..., 1] + p[..., 2] * n[..., 2] - self.c[f]

    def mirror(self, f, p):
        s = self.side(f, p)
        return p - 2.0 * s[..., None] * self.n[f]

    def contains(self, f, p):
        """Whether points ``p`` lying on planes ``f`` fall within the finite face."""
        f = np.asarray(f)
        out = np.zeros(f.shape, dtype=bool)
        g = self.is_ground[f]
        if g.any():
            x0, x1, y0, y1 = self.bounds
            q = p[g]
            out[g] = (q[:, 0] >= x0) & (q[:, 0] <= x1) & (q[:, 1] >= y0) & (q[:, 1] <= y1)
        w = ~g
        if w.any():
            fw, q = f[w], p[w]
            zr = self.zr[fw]
            ok = (q[:, 2] >= zr[:, 0]) & (q[:, 2] <= zr[:, 1])
            a = self.p0[fw]
            e = self.p1[fw] - a
            u = ((q[:, 0] - a[:, 0]) * e[:, 0] + (q[:, 1] - a[:, 1]) * e[:, 1]) / (e[:, 0] ** 2 + e[:, 1] ** 2)
            out[w] = ok & (u >= 0) & (u <= 1)
        return out

    def front_matrix(self) -> np.ndarray:
        """``M[a, b]``: some part of face ``b`` lies strictly in front of face ``a``.

        The ground extends under every wall, so it is treated as in front of
        every wall.
        """
        nf = len(self.c)
        corners = np.empty((nf, 4, 3))
        corners[:, 0, :2] = self.p0
        corners[:, 1, :2] = self.p0
        corners[:, 2, :2] = self.p1
        corners[:, 3, :2] = self.p1
        corners[:, 0::2, 2] = self.zr[:, :1]
        corners[:, 1::2, 2] = self.zr[:, 1:]
        n = self.n[:, None, None, :]
        s = (corners[None, :, :, 0] * n[..., 0] + corners[None, :, :, 1] * n[..., 1]
             + corners[None, :, :, 2] * n[..., 2]) - self.c[:, None, None]
        m = np.any(s > EPS, axis=2)
        m[:, self.is_ground] = True
        np.fill_diagonal(m, False)
        return m


def _chains(table: _FaceTable, front: np.ndarray, tx, order: int):
    """Face prefixes of length ``order - 1`` surviving receiver-independent
    pruning, with the image of tx across each prefix."""
    tx_front = table.side(np.arange(len(table.c)), np.broadcast_to(tx, (len(table.c), 3))) > EPS
    prefixes = [((), tx)]
    for _ in range(order - 1):
        nxt = []
        for pre, img in prefixes:
            for f in _followers(pre, front, tx_front):
                nxt.append((pre + (int(f),), table.mirror(np.array(f), img)))
        prefixes = nxt
    return prefixes, tx_front


def _followers(prefix, front, tx_front) -> np.ndarray:
    if not prefix:
        return np.flatnonzero(tx_front)
    last = prefix[-1]
    return np.flatnonzero(front[last] & front[:, last])


def trace_many(scene: Scene, tx, rxs, cfg: TraceConfig = TraceConfig()) -> list[list[PropagationPath]]:
    """Trace all paths from one transmitter to each receiver in ``rxs``.

    Result element ``k`` holds the paths for ``rxs[k]``, sorted by delay.
    Every receiver is processed independently of the others.
    """
    tx = np.asarray(tx.as_tuple() if isinstance(tx, LocalPoint) else tx, dtype=float)
    rxs = np.atleast_2d(np.asarray(rxs, dtype=float))
    R = len(rxs)
    amp0 = np.sqrt(cfg.tx_power_w) * cfg.wavelength / (4.0 * np.pi)

    faces = scene_faces(scene)
    table = _FaceTable(faces, scene.bounds)
    nf = len(faces)
    found: list[list[tuple]] = [[] for _ in range(R)]

    d = _dist(tx[None, :], rxs)
    ok = (d > 0) & ~segments_occluded(scene, np.broadcast_to(tx, rxs.shape), rxs)
    for r in np.flatnonzero(ok):
        found[r].append((d[r], 0, 1.0, (tuple(map(float, tx)), tuple(map(float, rxs[r])))))

    if nf and cfg.max_reflection_order > 0:
        front = table.front_matrix()
        # signed distance of every receiver to every face plane, (R, nf)
        s_rx = (rxs[:, 0:1] * table.n[None, :, 0] + rxs[:, 1:2] * table.n[None, :, 1]
                + rxs[:, 2:3] * table.n[None, :, 2]) - table.c[None, :]
        for order in range(1, cfg.max_reflection_order + 1):
            prefixes, tx_front = _chains(table, front, tx, order)
            for prefix, img in prefixes:
                flist = _followers(prefix, front, tx_front)
                if flist.size == 0:
                    continue
                imgs = table.mirror(flist, np.broadcast_to(img, (flist.size, 3)))
                s_im = table.side(flist, imgs)
                r_sel, f_sel = np.nonzero((s_rx[:, flist] > EPS) & (s_im < -EPS)[None, :])
                if r_sel.size == 0:
                    continue
                _extend(found, scene, table, tx, rxs, prefix, order,
                        r_sel, flist[f_sel], imgs[f_sel], s_im[f_sel], s_rx[r_sel, flist[f_sel]])

    out = []
    for paths in found:
        paths.sort(key=lambda p: (p[0], p[1], p[3]))
        out.append([
            PropagationPath(complex(amp0 * a / L, 0.0), float(L / C0), o, v) for L, o, a, v in paths
        ])
    return out


def _extend(found, scene, table, tx, rxs, prefix, order, rx_id, f_last, I, s_im, s_rx):
    X = rxs[rx_id]
    t = s_im / (s_im - s_rx)
    P = I + t[:, None] * (X - I)
    keep = table.contains(f_last, P)
    rx_id, P, f_last = rx_id[keep], P[keep], f_last[keep]
    pts = [P]
    fseq = [f_last]
    nxt = P
    images = [tx]
    for f in prefix:
        images.append(table.mirror(np.array(f), images[-1]))
    # walk back through the prefix: the bounce on prefix[j] lies on the
    # segment from the image across prefix[0..j] to the following vertex
    for j in range(len(prefix) - 1, -1, -1):
        if rx_id.size == 0:
            return
        fj = np.full(len(nxt), prefix[j])
        src = np.broadcast_to(images[j + 1], nxt.shape)
        s_n = table.side(fj, nxt)
        s_s = table.side(fj, src)
        good = (s_n > EPS) & (s_s < -EPS)
        with np.errstate(divide="ignore", invalid="ignore"):
            tt = s_s / (s_s - s_n)
            Q = src + tt[:, None] * (nxt - src)
        good &= table.contains(fj, Q)
        rx_id = rx_id[good]
        pts = [Q[good]] + [p[good] for p in pts]
        fseq = [fj[good]] + [q[good] for q in fseq]
        nxt = pts[0]
    if rx_id.size == 0:
        return
    chain = [np.broadcast_to(tx, pts[0].shape)] + pts + [rxs[rx_id]]
    blocked = np.zeros(len(rx_id), dtype=bool)
    length = np.zeros(len(rx_id))
    for u, v in zip(chain[:-1], chain[1:]):
        blocked |= segments_occluded(scene, u, v)
        length += _dist(u, v)
    amp = np.ones(len(rx_id))
    for q in fseq:
        amp *= table.amp[q]
    for k in np.flatnonzero(~blocked):
        verts = tuple(tuple(float(x) for x in c[k]) for c in chain)
        found[rx_id[k]].append((length[k], order, amp[k], verts))


def _dist(a, b):
    dx = a[..., 0] - b[..., 0]
    dy = a[..., 1] - b[..., 1]
    dz = a[..., 2] - b[..., 2]
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def trace_paths(scene: Scene, tx, rx, cfg: TraceConfig = TraceConfig()) -> list[PropagationPath]:
    txa = np.asarray(tx.as_tuple() if isinstance(tx, LocalPoint) else tx, dtype=float)
    rxa = np.asarray(rx.as_tuple() if isinstance(rx, LocalPoint) else rx, dtype=float)
    if np.array_equal(txa, rxa):
        raise ValueError("tx and rx coincide")
    return trace_many(scene, txa, rxa[None, :], cfg)[0]
