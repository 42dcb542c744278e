import math

import numpy as np
import pytest

from bregpca import bpca, datasets, evalkit
from bregpca.errors import ConfigError, DomainError, FitError
from bregpca.links import LinkFunction, apply_inverse_link, apply_link, dual_divergence, parse_link

from .conftest import ALL_LINKS, link_id, random_dual_rows

IDENTITY = LinkFunction("identity")
SOFTMAX = LinkFunction("softmax")
LEAKY = LinkFunction("leaky_relu", beta=0.5)


def checked_fit(X, link, k, opts=None):
    model, C, report = bpca.fit(X, link, k, opts)
    assert report.projection_residual <= 1e-10
    assert len(report.loss_history) == report.epochs_run
    assert model.conjugacy_error() <= 1e-8
    return model, C, report


# -- dual mean --------------------------------------------------------------------


def test_dual_mean_examples():
    np.testing.assert_array_equal(bpca.dual_mean(IDENTITY, [[1.0, 3.0], [3.0, 5.0]]), [2.0, 4.0])
    m = bpca.dual_mean(LEAKY, [[-2.0], [-4.0]])
    np.testing.assert_array_equal(m, [-6.0])
    np.testing.assert_array_equal(apply_link(LEAKY, m), [-3.0])

    m = bpca.dual_mean(SOFTMAX, [[0.2, 0.8], [0.6, 0.4]])
    expected = np.log([0.4, 0.6]) - np.log([0.4, 0.6]).mean()
    np.testing.assert_allclose(m, expected, atol=1e-15)
    assert abs(m.sum()) < 1e-15
    np.testing.assert_allclose(apply_link(SOFTMAX, m), [0.4, 0.6], atol=1e-15)


def test_dual_mean_errors():
    with pytest.raises(DomainError):
        bpca.dual_mean(IDENTITY, np.zeros((0, 3)))
    with pytest.raises(DomainError):
        bpca.dual_mean(LinkFunction("sigmoid"), [[0.5, 1.5]])


@pytest.mark.parametrize("link", ALL_LINKS, ids=link_id)
def test_dual_mean_is_optimal(link, rng):
    X = random_dual_rows(link, rng, 40, 5)
    m = bpca.dual_mean(link, X)
    np.testing.assert_allclose(apply_link(link, m), X.mean(axis=0), atol=1e-10)
    base = np.sum(dual_divergence(link, X, apply_link(link, m)))
    for _ in range(100):
        delta = rng.normal(size=5)
        delta *= 1e-3 / np.linalg.norm(delta)
        assert np.sum(dual_divergence(link, X, apply_link(link, m + delta))) >= base - 1e-12


# -- losses and gradients ---------------------------------------------------------


def _model(link, m, V):
    m = np.asarray(m, dtype=float)
    return bpca.BpcaModel(link, m, np.asarray(V, dtype=float), bpca.metric_at(link, m))


def test_compression_loss_zero_when_exact(rng):
    m = np.array([0.1, -0.2, 0.3])
    V = rng.normal(size=(3, 2))
    C = rng.normal(size=(5, 2))
    model = _model(LinkFunction("tanh"), m, V)
    X = model.decode(C)
    assert bpca.compression_loss(model, X, C) == pytest.approx(0.0, abs=1e-20)


def test_compression_loss_identity_zero_codes(rng):
    X = rng.normal(size=(10, 4))
    m = X.mean(axis=0)
    model = _model(IDENTITY, m, np.eye(4)[:, :1])
    loss = bpca.compression_loss(model, X, np.zeros((10, 1)))
    assert loss == pytest.approx(0.5 * np.sum((X - m) ** 2))


def test_compression_loss_softmax_toy():
    # H at m = 0 is [[.25, -.25], [-.25, .25]]; V = (1, -1) has V^T H V = 1
    model = _model(SOFTMAX, [0.0, 0.0], [[1.0], [-1.0]])
    assert model.conjugacy_error() < 1e-5
    X = np.array([[0.731, 0.269], [0.4, 0.6]])
    C = np.array([[0.5], [-0.2]])
    expected = 0.0
    for x, c in zip(X, C[:, 0]):
        q1 = 1.0 / (1.0 + math.exp(-2.0 * c))
        q = (q1, 1.0 - q1)
        expected += sum(xi * math.log(xi / qi) for xi, qi in zip(x, q))
    assert bpca.compression_loss(model, X, C) == pytest.approx(expected, rel=1e-12)


def test_compression_loss_shape_mismatch():
    model = _model(IDENTITY, [0.0, 0.0], [[1.0], [0.0]])
    with pytest.raises(ConfigError):
        bpca.compression_loss(model, np.zeros((3, 2)), np.zeros((2, 1)))


@pytest.mark.parametrize(
    "link", [SOFTMAX, LinkFunction("leaky_relu", beta=0.1), LinkFunction("sigmoid")], ids=link_id
)
def test_gradients_match_finite_differences(link, rng):
    n, d, k = 6, 5, 2
    X = random_dual_rows(link, rng, n, d)
    m = bpca.dual_mean(link, X)
    V = rng.normal(size=(d, k))
    C = rng.normal(size=(n, k))
    h = 1e-6

    def loss(V_, C_):
        return bpca.total_loss(link, X, m, V_, C_)

    gC = bpca.coefficient_gradient(link, X, m, V, C)
    fdC = np.zeros_like(C)
    for idx in np.ndindex(C.shape):
        E = np.zeros_like(C)
        E[idx] = h
        fdC[idx] = (loss(V, C + E) - loss(V, C - E)) / (2 * h)
    assert np.linalg.norm(fdC - gC) <= 1e-5 * np.linalg.norm(gC)

    gV = bpca.direction_gradient(link, X, m, V, C)
    fdV = np.zeros_like(V)
    for idx in np.ndindex(V.shape):
        E = np.zeros_like(V)
        E[idx] = h
        fdV[idx] = (loss(V + E, C) - loss(V - E, C)) / (2 * h)
    assert np.linalg.norm(fdV - gV) <= 1e-5 * np.linalg.norm(gV)


# -- fitting ----------------------------------------------------------------------


def test_identity_fit_matches_closed_form_pca():
    X, _ = datasets.planted_gaussian()
    model, C, report = checked_fit(X, IDENTITY, 4)
    mean, U = evalkit.vanilla_pca_oracle(X, 4)
    np.testing.assert_allclose(model.mean, mean, atol=1e-10)
    assert evalkit.subspace_distance(model.V, U) < 1e-3
    assert report.converged
    assert report.loss_history[-1] <= report.loss_history[0]


def test_full_rank_identity_fit_interpolates(rng):
    X = rng.normal(size=(60, 5)) @ np.diag([3.0, 2.5, 2.0, 1.5, 1.0])
    model, C, report = checked_fit(X, IDENTITY, 5, bpca.FitOptions(max_epochs=2000))
    initial = bpca.total_loss(IDENTITY, X, model.mean, np.zeros((5, 1)), np.zeros((60, 1)))
    assert report.final_loss < 1e-6 * initial


@pytest.mark.parametrize("link", ALL_LINKS, ids=link_id)
def test_fit_invariants_every_link(link, rng):
    X = random_dual_rows(link, rng, 80, 6)
    model, C, report = checked_fit(X, link, 2)
    np.testing.assert_allclose(apply_link(link, model.mean), X.mean(axis=0), atol=1e-10)
    assert report.final_loss <= report.loss_history[0]
    assert C.shape == (80, 2)
    assert bpca.compression_loss(model, X, C) == pytest.approx(report.final_loss, rel=1e-9)
    if link.kind == "softmax":
        assert abs(model.mean.sum()) < 1e-12
        H = model.metric.dense()
        assert np.abs(model.V.T @ H @ np.ones(6)).max() <= 1e-6
        np.testing.assert_allclose(model.decode(C).sum(axis=1), 1.0, atol=1e-12)


def test_terminal_projection_preserves_reconstructions(rng):
    for link in ALL_LINKS:
        X = random_dual_rows(link, rng, 50, 5)
        m, V, C, _ = bpca.descend(X, link, 3, bpca.FitOptions(max_epochs=30))
        V2, C2, metric = bpca.project_directions(link, m, V, C)
        before = bpca.reconstruct(link, m, V, C)
        after = bpca.reconstruct(link, m, V2, C2)
        assert np.abs(before - after).max() <= 1e-10
        G = V2.T @ metric.apply(V2)
        np.testing.assert_allclose(G, np.eye(3), atol=1e-8)


def test_softmax_beats_logit_pca():
    P, _ = datasets.clustered_simplex(n=300, d=10, seed=3)
    model, C, _ = checked_fit(P, SOFTMAX, 3)
    bregman = evalkit.avg_kl(P, model.decode(C))
    baseline = evalkit.avg_kl(P, evalkit.logit_pca_baseline(P, 3))
    assert bregman < baseline


@pytest.mark.parametrize(
    "X, link",
    [
        (datasets.planted_gaussian()[0], IDENTITY),
        (datasets.clustered_simplex()[0], SOFTMAX),
        (datasets.leaky_teacher()[0], parse_link("leaky-relu:0.01")),
    ],
    ids=["planted", "simplex", "leaky"],
)
def test_plain_gradient_descent_is_monotone(X, link):
    # default learning rates, no momentum: the printed update rules as-is
    opts = bpca.FitOptions(momentum=0.0, max_epochs=200)
    _, _, _, report = bpca.descend(X, link, 4, opts)
    assert np.all(np.diff(report.loss_history) <= 0.0)


def test_fit_is_deterministic(rng):
    X = random_dual_rows(LinkFunction("sigmoid"), rng, 40, 6)
    a = bpca.fit(X, "sigmoid", 2, bpca.FitOptions(seed=7))
    b = bpca.fit(X, "sigmoid", 2, bpca.FitOptions(seed=7))
    np.testing.assert_array_equal(a[0].V, b[0].V)
    np.testing.assert_array_equal(a[1], b[1])


def test_divergence_is_reported_with_epoch():
    X, _ = datasets.planted_gaussian()
    with pytest.raises(FitError) as info:
        bpca.fit(X, IDENTITY, 2, bpca.FitOptions(lr_coeff=5.0, lr_dirs=1.0))
    assert info.value.epoch is not None and info.value.epoch >= 1
    assert "epoch" in str(info.value)


@pytest.mark.parametrize(
    "link, k", [(IDENTITY, 0), (IDENTITY, 7), (SOFTMAX, 6), (SOFTMAX, 0)], ids=["0", "d+1", "sm-d", "sm-0"]
)
def test_component_count_validated(link, k, rng):
    X = random_dual_rows(link, rng, 10, 6)
    with pytest.raises(ConfigError):
        bpca.fit(X, link, k)


def test_fit_needs_two_rows():
    with pytest.raises(DomainError):
        bpca.fit(np.ones((1, 3)), IDENTITY, 1)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(lr_coeff=0.0),
        dict(lr_dirs=-1.0),
        dict(momentum=1.0),
        dict(max_epochs=0),
        dict(tol=0.0),
        dict(seed=-1),
        dict(batch_size=0),
        dict(batch_size="half"),
        dict(ema_decay=1.0),
    ],
)
def test_fit_options_validated(kwargs):
    with pytest.raises(ConfigError):
        bpca.FitOptions(**kwargs)


def test_model_is_immutable(rng):
    X = random_dual_rows(IDENTITY, rng, 20, 4)
    model, _, _ = bpca.fit(X, IDENTITY, 2)
    with pytest.raises(ValueError):
        model.V[0, 0] = 1.0
    with pytest.raises(AttributeError):
        model.mean = np.zeros(4)


# -- streaming --------------------------------------------------------------------


def test_single_batch_stream_matches_one_epoch(rng):
    for link in (IDENTITY, SOFTMAX, LinkFunction("tanh")):
        X = random_dual_rows(link, rng, 30, 5)
        opts = bpca.FitOptions(max_epochs=1, seed=3)
        model, C, report = bpca.fit(X, link, 2, opts)
        smodel, sreport = bpca.fit_streaming([X], link, 2, opts, inner_steps=1)
        np.testing.assert_array_equal(smodel.mean, model.mean)
        np.testing.assert_allclose(smodel.V, model.V, rtol=0, atol=1e-14)
        # the streaming loss is measured before the step, the batch loss after it
        assert sreport.epochs_run == 1 and len(sreport.loss_history) == 1


def test_ema_constant_stream_is_exact(rng):
    X = random_dual_rows(SOFTMAX, rng, 20, 4)
    model, _ = bpca.fit_streaming([X] * 25, SOFTMAX, 2)
    np.testing.assert_allclose(apply_link(SOFTMAX, model.mean), X.mean(axis=0), atol=1e-12)


def test_ema_is_bias_corrected_weighted_average(rng):
    batches = [rng.normal(size=(5, 3)) for _ in range(7)]
    decay = 0.8
    model, _ = bpca.fit_streaming(batches, IDENTITY, 1, bpca.FitOptions(ema_decay=decay))
    w = decay ** np.arange(6, -1, -1)
    expected = sum(wi * b.mean(axis=0) for wi, b in zip(w, batches)) / w.sum()
    np.testing.assert_allclose(model.mean, expected, atol=1e-14)


def test_streaming_deterministic_and_validated(rng):
    X = random_dual_rows(IDENTITY, rng, 40, 5)
    a, _ = bpca.fit_streaming(bpca.minibatches(X, 8, 3, seed=1), IDENTITY, 2)
    b, _ = bpca.fit_streaming(bpca.minibatches(X, 8, 3, seed=1), IDENTITY, 2)
    np.testing.assert_array_equal(a.V, b.V)
    with pytest.raises(DomainError):
        bpca.fit_streaming([], IDENTITY, 2)
    with pytest.raises(DomainError):
        bpca.fit_streaming([X, X[:, :4]], IDENTITY, 2)


def test_minibatches_cover_every_row_each_pass(rng):
    X = np.arange(23.0)[:, None]
    blocks = list(bpca.minibatches(X, 5, 2, seed=0))
    assert len(blocks) == 10
    first = np.sort(np.concatenate(blocks[:5]).ravel())
    np.testing.assert_array_equal(first, np.arange(23.0))


# -- encode / decode --------------------------------------------------------------


def test_encode_mean_gives_zero(rng):
    for link in ALL_LINKS:
        X = random_dual_rows(link, rng, 40, 5)
        model, _, _ = bpca.fit(X, link, 2)
        c = bpca.encode(model, apply_link(link, model.mean))
        np.testing.assert_allclose(c, 0.0, atol=1e-6)


def test_encode_identity_is_projection(rng):
    X, _ = datasets.planted_gaussian()
    model, _, _ = bpca.fit(X, IDENTITY, 3)
    C = bpca.encode(model, X)
    np.testing.assert_allclose(C, (X - model.mean) @ model.V, atol=1e-8)
    # least-squares oracle independent of conjugacy
    C_ls = np.linalg.lstsq(model.V, (X - model.mean).T, rcond=None)[0].T
    np.testing.assert_allclose(C, C_ls, atol=1e-8)


@pytest.mark.parametrize(
    "link",
    [LinkFunction("sigmoid"), LinkFunction("tanh"), SOFTMAX, LinkFunction("leaky_relu", beta=0.5)],
    ids=link_id,
)
def test_encode_recovers_planted_codes(link, rng):
    X = random_dual_rows(link, rng, 60, 6)
    model, _, _ = bpca.fit(X, link, 3)
    C_star = rng.normal(scale=0.3, size=(10, 3))
    C = bpca.encode(model, model.decode(C_star), bpca.FitOptions(max_epochs=5000))
    np.testing.assert_allclose(C, C_star, atol=1e-6)


def test_encode_single_vector(rng):
    X = random_dual_rows(IDENTITY, rng, 30, 4)
    model, _, _ = bpca.fit(X, IDENTITY, 2)
    c = bpca.encode(model, X[0])
    assert c.shape == (2,)
    with pytest.raises(DomainError):
        bpca.encode(model, np.ones(5))


def test_decode_examples(rng):
    X = random_dual_rows(IDENTITY, rng, 30, 4)
    model, _, _ = bpca.fit(X, IDENTITY, 2)
    np.testing.assert_array_equal(model.decode(np.zeros(2)), model.mean)
    np.testing.assert_allclose(model.decode([1.0, 0.0]), model.mean + model.V[:, 0], atol=1e-15)
    P = random_dual_rows(SOFTMAX, rng, 30, 4)
    smodel, _, _ = bpca.fit(P, SOFTMAX, 2)
    out = smodel.decode(rng.normal(scale=5.0, size=(50, 2)))
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
    with pytest.raises(ConfigError):
        smodel.decode(np.zeros(3))


def test_warm_start_reduces_to_projection_for_conjugate_directions(rng):
    X = random_dual_rows(LinkFunction("sigmoid"), rng, 30, 5)
    model, _, _ = bpca.fit(X, "sigmoid", 2)
    link = model.link
    Z = apply_inverse_link(link, X) - model.mean
    plain = model.metric.apply(Z.T).T @ model.V
    np.testing.assert_allclose(bpca.warm_start(link, model.mean, model.metric, model.V, X), plain, atol=1e-10)
