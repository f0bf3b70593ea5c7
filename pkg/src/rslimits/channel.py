"""The d-dimensional Gaussian channel Y = (S + r)^{1/2} X + W under a row prior.

Two oracles are exposed: the mutual information I_S(r) = I(X; Y) in nats and
the MMSE matrix M_S(r) = E[cov(X | Y)].  They are the building blocks of the
replica-symmetric potential.

Gaussian priors are always evaluated in closed form (no quadrature) and serve
as an exactness anchor.  Discrete priors reduce to a finite mixture; their
expectation over the noise W runs through a quadrature scheme and a hot
kernel (see _kernels).  The mutual information uses the numerically stable
form

    I = -E_{k,W}[ log sum_j w_j exp(-||A(x_k - x_j)||^2 / 2 - W . A(x_k - x_j)) ]

with log-sum-exp, which avoids density ratios entirely; the same logits give
the posterior weights used for the covariance.
"""

import numpy as np

from . import _kernels, psdlinalg
from .priors import DISCRETE, GAUSSIAN
from .quadrature import default_scheme


def _channel_matrix(prior, s, r):
    d = prior.dim
    s = psdlinalg.check_psd(s, name="side channel s")
    r = psdlinalg.check_psd(r, name="snr matrix r")
    if s.shape != (d, d) or r.shape != (d, d):
        raise ValueError("s and r must be d x d for the prior dimension d")
    return psdlinalg.sqrtm_psd(s + r)


def _discrete_setup(prior, A):
    atoms = prior.atoms
    delta = atoms[:, None, :] - atoms[None, :, :]       # x_k - x_j
    D = np.einsum("kjt,td->kjd", delta, A)              # A (x_k - x_j)
    c = -0.5 * np.einsum("kjd,kjd->kj", D, D)
    with np.errstate(divide="ignore"):
        logw = np.log(prior.weights)
    return logw, c, D


def mutual_information(prior, s, r, quad=None):
    """I(X; (S+r)^{1/2} X + W) in nats; W ~ N(0, I_d).

    Gaussian prior with covariance Sigma: exactly 0.5 * logdet(I + A Sigma A)
    with A the symmetric PSD root of S + r.
    """
    A = _channel_matrix(prior, s, r)
    if prior.kind == GAUSSIAN:
        M = np.eye(prior.dim) + A @ prior.cov @ A
        sign, logdet = np.linalg.slogdet(M)
        if sign <= 0:
            raise FloatingPointError("log-det of I + A Sigma A not positive")
        return 0.5 * logdet
    quad = quad or default_scheme(prior.dim)
    nodes, node_w = quad.nodes_weights(prior.dim)
    logw, c, D = _discrete_setup(prior, A)
    mi, _, _ = _kernels.channel_discrete_moments(logw, c, D, prior.atoms, nodes, node_w)
    if not np.isfinite(mi):
        raise FloatingPointError("quadrature produced a non-finite mutual information")
    return float(mi)


def mmse_matrix(prior, s, r, quad=None):
    """M_S(r) = E[cov(X | (S+r)^{1/2} X + W)]; symmetric PSD, <= rho_bar.

    Gaussian prior: Sigma - Sigma A (I + A Sigma A)^{-1} A Sigma, valid for
    singular Sigma as well (equals (Sigma^{-1} + A^2)^{-1} when invertible).
    """
    A = _channel_matrix(prior, s, r)
    if prior.kind == GAUSSIAN:
        Sig = prior.cov
        M = np.eye(prior.dim) + A @ Sig @ A
        out = Sig - Sig @ A @ np.linalg.solve(M, A @ Sig)
        return psdlinalg.project_psd(out)
    quad = quad or default_scheme(prior.dim)
    nodes, node_w = quad.nodes_weights(prior.dim)
    logw, c, D = _discrete_setup(prior, A)
    _, second, outer = _kernels.channel_discrete_moments(logw, c, D, prior.atoms, nodes, node_w)
    cov = second - outer
    if not np.all(np.isfinite(cov)):
        raise FloatingPointError("quadrature produced a non-finite MMSE matrix")
    return psdlinalg.project_psd(cov)
