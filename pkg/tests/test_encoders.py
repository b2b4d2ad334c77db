import numpy as np
import pytest

from molfgw.encoders import (
    Conformer,
    EncoderWeights,
    Molecule2D,
    apply_rigid_motion,
    conformer_to_graph,
    gat_forward,
    parse_xyz,
    perturb_conformer,
    random_rigid_motion,
    rbf_expand,
    schnet_lite_forward,
    ssp,
)

XYZ_TWO_FRAMES = """\
3
frame 1
O 0.0 0.0 0.0
H 0.96 0.0 0.0
H -0.24 0.93 0.0
3
frame 2
O 0.0 0.0 0.1
H 0.95 0.0 0.0
H -0.25 0.92 0.0
"""


def water():
    return parse_xyz(XYZ_TWO_FRAMES)[0]


def test_parse_xyz_multiframe():
    frames = parse_xyz(XYZ_TWO_FRAMES)
    assert len(frames) == 2
    assert frames[0].Z == (8, 1, 1)
    assert frames[0].R.shape == (3, 3)
    assert frames[1].R[0, 2] == 0.1


def test_parse_xyz_errors():
    with pytest.raises(ValueError, match="unknown element symbol"):
        parse_xyz("1\nc\nXx 0 0 0\n")
    with pytest.raises(ValueError, match="atom sequence mismatch in frame 2"):
        parse_xyz("1\na\nO 0 0 0\n1\nb\nN 0 0 0\n")
    with pytest.raises(ValueError, match="malformed atom count"):
        parse_xyz("abc\n")
    with pytest.raises(ValueError, match="truncated"):
        parse_xyz("4\nc\nO 0 0 0\n")
    with pytest.raises(ValueError, match="no XYZ frames"):
        parse_xyz("\n\n")


def test_conformer_validation():
    with pytest.raises(ValueError, match="atomic number"):
        Conformer(Z=(0,), R=np.zeros((1, 3)))
    with pytest.raises(ValueError, match="Nx3"):
        Conformer(Z=(1, 1), R=np.zeros((2, 2)))


def test_ssp_zero_at_zero():
    assert ssp(0.0) == 0.0
    # large-x asymptote: ssp(x) -> x - log 2
    assert np.isclose(ssp(50.0), 50.0 - np.log(2.0))


def test_rbf_expand_peak_at_center():
    centers = np.array([0.0, 1.0, 2.0])
    out = rbf_expand(np.array([1.0]), centers, gamma=10.0)
    assert out.shape == (1, 3)
    assert np.isclose(out[0, 1], 1.0)
    assert out[0, 0] < 1e-4


def test_encoder_weights_deterministic():
    a = EncoderWeights(seed=42, d=8)
    b = EncoderWeights(seed=42, d=8)
    c = EncoderWeights(seed=43, d=8)
    assert np.array_equal(a["embedding"], b["embedding"])
    assert not np.array_equal(a["embedding"], c["embedding"])
    bound = 1.0 / np.sqrt(8)
    assert np.abs(a["msg_w_0"]).max() <= bound


def test_rbf_center_grid():
    enc = EncoderWeights(seed=0, d=4, cutoff=10.0, rbf_spacing=0.1)
    centers = enc["rbf_centers"]
    assert centers[0] == 0.0
    assert np.isclose(centers[-1], 10.0)
    assert np.allclose(np.diff(centers), 0.1)


def test_schnet_rigid_motion_invariance():
    enc = EncoderWeights(seed=1, d=8)
    conf = water()
    rng = np.random.default_rng(9)
    h = schnet_lite_forward(conf, enc)
    for _ in range(5):
        Q, t = random_rigid_motion(rng)
        moved = Conformer(Z=conf.Z, R=apply_rigid_motion(conf.R, Q, t))
        hm = schnet_lite_forward(moved, enc)
        assert np.allclose(h, hm, atol=1e-9)


def test_schnet_cutoff_masks_messages_only():
    enc = EncoderWeights(seed=2, d=8)
    Z = (6, 6)
    far = Conformer(Z=Z, R=np.array([[0.0, 0.0, 0.0], [50.0, 0.0, 0.0]]))
    h = schnet_lite_forward(far, enc)
    # beyond the cutoff no messages flow: each atom keeps its isolated embedding
    iso = schnet_lite_forward(Conformer(Z=(6,), R=np.zeros((1, 3))), enc)
    assert np.allclose(h[0], iso[0], atol=1e-12)
    # but the graph structure still records the full distance
    g = conformer_to_graph(far, enc)
    assert np.isclose(g.A[0, 1], 50.0)
    assert np.all(np.diag(g.A) == 0.0)


def test_conformer_graph_atom_permutation_consistency():
    enc = EncoderWeights(seed=3, d=8)
    conf = water()
    perm = np.array([2, 0, 1])
    conf_p = Conformer(Z=tuple(conf.Z[i] for i in perm), R=conf.R[perm])
    g = conformer_to_graph(conf, enc)
    gp = conformer_to_graph(conf_p, enc)
    assert np.allclose(gp.H, g.H[perm], atol=1e-12)
    assert np.allclose(gp.A, g.A[np.ix_(perm, perm)], atol=1e-12)


def test_gat_forward_basic_and_isolated():
    enc = EncoderWeights(seed=4, d=8, feat2d_dim=5, n_layers=2)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4, 5))
    mol = Molecule2D(node_features=X, edges=[(0, 1), (1, 2)])  # node 3 isolated
    out = gat_forward(mol, enc)
    assert out.shape == (8,)
    assert np.all(np.isfinite(out))
    # graph-level output is a node sum, invariant to node relabeling
    perm = [2, 0, 3, 1]
    inv = {v: i for i, v in enumerate(perm)}
    mol_p = Molecule2D(
        node_features=X[perm], edges=[(inv[0], inv[1]), (inv[1], inv[2])]
    )
    assert np.allclose(gat_forward(mol_p, enc), out, atol=1e-10)


def test_gat_single_neighbor_attention_is_one():
    # softmax over a singleton neighborhood: h_v = W h_u regardless of score
    enc = EncoderWeights(seed=5, d=4, feat2d_dim=3, n_layers=1)
    X = np.array([[1.0, 2.0, 3.0], [-1.0, 0.5, 2.0]])
    mol = Molecule2D(node_features=X, edges=[(0, 1)])
    out = gat_forward(mol, enc)
    W = enc["gat_w_0"]
    expected = (X[1] @ W) + (X[0] @ W)
    assert np.allclose(out, expected, atol=1e-12)


def test_gat_edge_feature_dim_checked():
    enc = EncoderWeights(seed=6, d=4, feat2d_dim=3, edge_feat_dim=2)
    mol = Molecule2D(node_features=np.zeros((2, 3)), edges=[(0, 1)])
    with pytest.raises(ValueError, match="edge feature"):
        gat_forward(mol, enc)


def test_molecule2d_validation():
    with pytest.raises(ValueError, match="self-loops"):
        Molecule2D(node_features=np.zeros((2, 3)), edges=[(1, 1)])
    with pytest.raises(ValueError, match="invalid node"):
        Molecule2D(node_features=np.zeros((2, 3)), edges=[(0, 5)])


def test_perturb_deterministic_and_identity():
    conf = water()
    a = perturb_conformer(conf, 0.1, seed=7)
    b = perturb_conformer(conf, 0.1, seed=7)
    c = perturb_conformer(conf, 0.1, seed=8)
    assert np.array_equal(a.R, b.R)
    assert not np.array_equal(a.R, c.R)
    same = perturb_conformer(conf, 0.0, seed=7, rigid=False)
    assert np.array_equal(same.R, conf.R)
    with pytest.raises(ValueError):
        perturb_conformer(conf, -0.1, seed=0)


def test_rigid_motion_is_orthogonal_rotation():
    rng = np.random.default_rng(11)
    Q, t = random_rigid_motion(rng)
    assert np.allclose(Q @ Q.T, np.eye(3), atol=1e-12)
    assert np.isclose(np.linalg.det(Q), 1.0)
    Qr, _ = random_rigid_motion(rng, reflect=True)
    assert np.isclose(np.linalg.det(Qr), -1.0)
