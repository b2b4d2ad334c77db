"""Conformer ingestion and deterministic frozen encoders.

Turns 3D conformers into attributed graphs: multi-frame XYZ parsing, a
distance-matrix structure, Gaussian RBF edge expansion, a SchNet-style
invariant message-passing encoder, a GAT-style 2D encoder, and a seeded
rigid-motion+noise perturbation generator. All weights are frozen and
derived deterministically from a seed; training is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import AttributedGraph

# Element symbols for Z = 1..118, standard ordering.
_SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co "
    "Ni Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb "
    "Te I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re "
    "Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es "
    "Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()
SYMBOL_TO_Z = {s: i + 1 for i, s in enumerate(_SYMBOLS)}
Z_TO_SYMBOL = {i + 1: s for i, s in enumerate(_SYMBOLS)}


@dataclass(frozen=True)
class Conformer:
    """Atomic numbers Z and Cartesian coordinates R (Angstrom)."""

    Z: tuple
    R: np.ndarray

    def __post_init__(self):
        Z = tuple(int(z) for z in self.Z)
        R = np.asarray(self.R, dtype=float)
        if len(Z) < 1:
            raise ValueError("conformer needs at least one atom")
        if any(z < 1 or z > 118 for z in Z):
            raise ValueError("atomic number out of range [1, 118]")
        if R.shape != (len(Z), 3) or not np.all(np.isfinite(R)):
            raise ValueError("coordinates must be a finite Nx3 array")
        R.setflags(write=False)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "R", R)

    @property
    def n(self) -> int:
        return len(self.Z)


@dataclass(frozen=True)
class Molecule2D:
    """Covalent-bond graph with per-atom descriptor features."""

    node_features: np.ndarray
    edges: tuple
    edge_features: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.node_features, dtype=float)
        if X.ndim != 2:
            raise ValueError("node_features must be 2-D")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < X.shape[0] and 0 <= j < X.shape[0]):
                raise ValueError(f"edge ({i},{j}) references invalid node")
        ef = self.edge_features
        if ef is not None:
            ef = np.asarray(ef, dtype=float)
            if ef.shape[0] != len(edges):
                raise ValueError("one edge feature vector per edge required")
            ef.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "node_features", X)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "edge_features", ef)

    @property
    def n(self) -> int:
        return self.node_features.shape[0]


def parse_xyz(text: str) -> list[Conformer]:
    """Parse multi-frame XYZ text into conformers sharing one atom sequence."""
    lines = text.splitlines()
    frames = []
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        try:
            count = int(lines[i].strip())
        except ValueError:
            raise ValueError(f"malformed atom count line: {lines[i]!r}")
        if count < 1:
            raise ValueError("malformed atom count")
        body = lines[i + 2 : i + 2 + count]
        if len(body) != count:
            raise ValueError("truncated XYZ frame")
        Z, R = [], []
        for line in body:
            parts = line.split()
            if len(parts) < 4:
                raise ValueError(f"malformed atom line: {line!r}")
            sym = parts[0]
            if sym not in SYMBOL_TO_Z:
                raise ValueError(f"unknown element symbol {sym!r}")
            Z.append(SYMBOL_TO_Z[sym])
            R.append([float(x) for x in parts[1:4]])
        frames.append(Conformer(Z=tuple(Z), R=np.array(R)))
        i += 2 + count
    if not frames:
        raise ValueError("no XYZ frames found")
    first = frames[0].Z
    for k, fr in enumerate(frames[1:], start=2):
        if fr.Z != first:
            raise ValueError(f"atom sequence mismatch in frame {k}")
    return frames


def rbf_expand(dist, centers, gamma: float) -> np.ndarray:
    """Gaussian bumps exp(-gamma (dist - center)^2), vectorized over dist."""
    dist = np.asarray(dist, dtype=float)
    centers = np.asarray(centers, dtype=float)
    return np.exp(-gamma * (dist[..., None] - centers) ** 2)


def ssp(x):
    """Shifted softplus ln(0.5 e^x + 0.5); ssp(0) = 0."""
    return np.logaddexp(x, 0.0) - np.log(2.0)


def _uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


@dataclass(frozen=True)
class EncoderWeights:
    """All frozen linear maps of the forward pipeline, derived from a seed.

    Layers: per-layer SchNet filter network (RBF -> d -> d), message
    transform (d -> d), update network (d -> d -> d); GAT layer weights
    with attention vectors; linear readouts for the 3D and barycenter
    embeddings; the 2D/3D/BC combination matrices and the scalar
    prediction head.
    """

    seed: int
    d: int = 16
    n_layers: int = 3
    cutoff: float = 10.0
    rbf_spacing: float = 0.1
    rbf_gamma: float = 10.0
    feat2d_dim: int = 8
    edge_feat_dim: int = 0
    tables: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        d, L = self.d, self.n_layers
        centers = np.arange(0.0, self.cutoff + 1e-9, self.rbf_spacing)
        n_rbf = centers.shape[0]
        t = {"rbf_centers": centers}
        t["embedding"] = _uniform(rng, (119, d), d)
        for ell in range(L):
            t[f"filter_w1_{ell}"] = _uniform(rng, (n_rbf, d), n_rbf)
            t[f"filter_b1_{ell}"] = _uniform(rng, (d,), n_rbf)
            t[f"filter_w2_{ell}"] = _uniform(rng, (d, d), d)
            t[f"filter_b2_{ell}"] = _uniform(rng, (d,), d)
            t[f"msg_w_{ell}"] = _uniform(rng, (d, d), d)
            t[f"msg_b_{ell}"] = _uniform(rng, (d,), d)
            t[f"upd_w1_{ell}"] = _uniform(rng, (d, d), d)
            t[f"upd_b1_{ell}"] = _uniform(rng, (d,), d)
            t[f"upd_w2_{ell}"] = _uniform(rng, (d, d), d)
            t[f"upd_b2_{ell}"] = _uniform(rng, (d,), d)
        att_in = 2 * d + self.edge_feat_dim
        for ell in range(L):
            fan = self.feat2d_dim if ell == 0 else d
            t[f"gat_w_{ell}"] = _uniform(rng, (fan, d), fan)
            t[f"gat_a_{ell}"] = _uniform(rng, (att_in,), att_in)
        t["readout3d_w"] = _uniform(rng, (d, d), d)
        t["readout3d_b"] = _uniform(rng, (d,), d)
        t["readout_bc_w"] = _uniform(rng, (d, d), d)
        t["readout_bc_b"] = _uniform(rng, (d,), d)
        t["w_2d"] = _uniform(rng, (d, d), d)
        t["w_3d"] = _uniform(rng, (d, d), d)
        t["w_bc"] = _uniform(rng, (d, d), d)
        t["pred_w"] = _uniform(rng, (d,), d)
        t["pred_b"] = float(_uniform(rng, (), d))
        for arr in t.values():
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)
        object.__setattr__(self, "tables", t)

    def __getitem__(self, key):
        return self.tables[key]


def schnet_lite_forward(conf: Conformer, enc: EncoderWeights, cutoff=None) -> np.ndarray:
    """Invariant atom embeddings from distances only.

    h0 = embedding[Z]; per layer, filter e_{v,u} from the RBF-expanded
    distance, message phi1(h_u) * e_{v,u} summed over neighbors within
    the cutoff, residual update h += phi_{3,4}(aggregate).
    """
    cutoff = enc.cutoff if cutoff is None else float(cutoff)
    n = conf.n
    h = np.array([enc["embedding"][z] for z in conf.Z])
    diff = conf.R[:, None, :] - conf.R[None, :, :]
    D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    mask = (D <= cutoff) & ~np.eye(n, dtype=bool)
    rbf = rbf_expand(D, enc["rbf_centers"], enc.rbf_gamma)
    for ell in range(enc.n_layers):
        e = ssp(rbf @ enc[f"filter_w1_{ell}"] + enc[f"filter_b1_{ell}"])
        e = e @ enc[f"filter_w2_{ell}"] + enc[f"filter_b2_{ell}"]
        msg_h = h @ enc[f"msg_w_{ell}"] + enc[f"msg_b_{ell}"]
        # m[v,u] = msg_h[u] * e[v,u], masked to the neighborhood of v
        m = msg_h[None, :, :] * e * mask[:, :, None]
        agg = m.sum(axis=1)
        upd = ssp(agg @ enc[f"upd_w1_{ell}"] + enc[f"upd_b1_{ell}"])
        h = h + upd @ enc[f"upd_w2_{ell}"] + enc[f"upd_b2_{ell}"]
    return h


def schnet_readout(H, enc: EncoderWeights) -> np.ndarray:
    """Sum_v (A h_v + a) over atom embeddings."""
    H = np.asarray(H, dtype=float)
    if H.shape[1] != enc.d:
        raise ValueError("embedding width mismatch")
    return (H @ enc["readout3d_w"].T).sum(axis=0) + H.shape[0] * enc["readout3d_b"]


def conformer_to_graph(
    conf: Conformer, enc: EncoderWeights, cutoff=None
) -> AttributedGraph:
    """Full pairwise-distance structure, encoder features, uniform weights.

    The cutoff restricts message-passing neighborhoods only; A keeps all
    pairwise distances.
    """
    diff = conf.R[:, None, :] - conf.R[None, :, :]
    A = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(A, 0.0)
    H = schnet_lite_forward(conf, enc, cutoff)
    return AttributedGraph(H=H, A=A)


def gat_forward(mol: Molecule2D, enc: EncoderWeights) -> np.ndarray:
    """Pooled 2D embedding from attention message passing over bonds.

    Per layer: scores LeakyReLU(a^T [W h_v || W h_u (|| e_vu)]),
    softmax over N(v), h_v = sum_u alpha_{v,u} W h_u. Isolated nodes get a
    zero aggregate. Readout is the node sum.
    """
    h = mol.node_features
    nbrs = {v: [] for v in range(mol.n)}
    for idx, (i, j) in enumerate(mol.edges):
        nbrs[i].append((j, idx))
        nbrs[j].append((i, idx))
    if enc.edge_feat_dim:
        if mol.edge_features is None or mol.edge_features.shape[1] != enc.edge_feat_dim:
            raise ValueError("edge feature dimension mismatch with encoder")
    for ell in range(enc.n_layers):
        W = enc[f"gat_w_{ell}"]
        a = enc[f"gat_a_{ell}"]
        if h.shape[1] != W.shape[0]:
            raise ValueError("2D feature dimension mismatch with encoder")
        wh = h @ W
        h_new = np.zeros((mol.n, enc.d))
        for v in range(mol.n):
            if not nbrs[v]:
                continue
            scores = []
            for u, eidx in nbrs[v]:
                parts = [wh[v], wh[u]]
                if enc.edge_feat_dim:
                    parts.append(mol.edge_features[eidx])
                s = float(a @ np.concatenate(parts))
                scores.append(s if s > 0 else 0.2 * s)
            scores = np.array(scores)
            scores -= scores.max()
            att = np.exp(scores)
            att /= att.sum()
            h_new[v] = sum(w * wh[u] for w, (u, _) in zip(att, nbrs[v]))
        h = h_new
    return h.sum(axis=0)


def perturb_conformer(
    conf: Conformer, sigma: float, seed: int, rigid: bool = True
) -> Conformer:
    """Gaussian coordinate noise followed by a seeded rotation+translation.

    ``rigid=False`` skips the rigid motion, leaving only the noise (the
    sigma=0 identity case for tests).
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    R = conf.R + rng.normal(0.0, sigma, size=conf.R.shape) if sigma > 0 else conf.R
    if rigid:
        R = apply_rigid_motion(R, *random_rigid_motion(rng))
    return Conformer(Z=conf.Z, R=R)


def random_rigid_motion(rng, reflect: bool = False):
    """Seeded random rotation (optionally a reflection) and translation."""
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    if reflect:
        Q[:, 0] = -Q[:, 0]
    t = rng.normal(0.0, 5.0, size=3)
    return Q, t


def apply_rigid_motion(R, Q, t) -> np.ndarray:
    return np.asarray(R, dtype=float) @ Q.T + t
