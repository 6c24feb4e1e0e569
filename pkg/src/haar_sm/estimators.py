"""scikit-learn transformers over the functional core.

Samples are flattened grids: rows of ``2**(d K)`` cell averages for
:class:`HaarTransformer` and :class:`HaarSeriesIntegral`, rows of
``(2**K + 1)**d`` vertex values for :class:`BesovFeatures`.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .haar import CornerField, haar_forward_array, haar_inverse_array
from .measures import haar_integrals
from .regularity import besov_norms

__all__ = ["HaarTransformer", "HaarSeriesIntegral", "BesovFeatures"]


def _level_from_size(size, per_axis_base, d, what):
    for K in range(0, 31):
        if (per_axis_base(K)) ** d == size:
            return K
        if (per_axis_base(K)) ** d > size:
            break
    raise ValueError(f"{size} features do not form a {what} grid in dimension {d}")


class HaarTransformer(TransformerMixin, BaseEstimator):
    """Tensor Haar coefficients of cell fields.

    Parameters
    ----------
    d : int, default=2
    level : int, optional
        Truncation level ``k``; defaults to the resolution seen in ``fit``.

    Attributes
    ----------
    K_ : int
        Resolution of the training fields.
    level_ : int
    """

    def __init__(self, d=2, level=None):
        self.d = d
        self.level = level

    def fit(self, X, y=None):
        X = check_array(X)
        self.K_ = _level_from_size(X.shape[1], lambda K: 1 << K, self.d, "cell")
        self.level_ = self.K_ if self.level is None else int(self.level)
        if not 0 <= self.level_ <= self.K_:
            raise ValueError(f"level must lie in [0, {self.K_}], got {self.level_}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        cells = X.reshape((X.shape[0],) + (1 << self.K_,) * self.d)
        coeffs = haar_forward_array(cells, self.d, self.level_)
        return coeffs.reshape(X.shape[0], -1)

    def inverse_transform(self, X):
        """Cell averages of the level-``level_`` partial sums at resolution ``K_``."""
        check_is_fitted(self)
        X = check_array(X)
        n = 1 << self.level_
        coeffs = X.reshape((X.shape[0],) + (n,) * self.d)
        out = np.stack([haar_inverse_array(c, self.d, self.K_) for c in coeffs])
        return out.reshape(X.shape[0], -1)


class HaarSeriesIntegral(TransformerMixin, BaseEstimator):
    """Level-``level`` Haar-series integrals of integrands against one realization.

    Each row of ``X`` holds the cell averages of one integrand at some
    resolution ``m >= level``; the output is a single column of integrals.
    """

    def __init__(self, realization=None, level=4):
        self.realization = realization
        self.level = level

    def fit(self, X=None, y=None):
        if self.realization is None:
            raise ValueError("HaarSeriesIntegral needs a realization")
        self.haar_integrals_ = haar_integrals(self.realization, int(self.level))
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X)
        d = self.realization.d
        m = _level_from_size(X.shape[1], lambda K: 1 << K, d, "cell")
        cells = X.reshape((X.shape[0],) + (1 << m,) * d)
        coeffs = haar_forward_array(cells, d, int(self.level))
        axes = tuple(range(1, d + 1))
        return np.sum(coeffs * self.haar_integrals_, axis=axes)[:, None]


class BesovFeatures(TransformerMixin, BaseEstimator):
    """Besov-norm features of vertex fields: ``lp_norm`` then one ``total`` per alpha."""

    def __init__(self, d=2, p=2.0, alphas=(0.4,)):
        self.d = d
        self.p = p
        self.alphas = alphas

    def fit(self, X, y=None):
        X = check_array(X)
        self.K_ = _level_from_size(X.shape[1], lambda K: (1 << K) + 1, self.d, "vertex")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_array(X)
        shape = ((1 << self.K_) + 1,) * self.d
        out = []
        for row in X:
            field = CornerField(self.d, self.K_, row.reshape(shape))
            ests = besov_norms(field, self.p, list(self.alphas))
            out.append([ests[0].lp_norm] + [e.total for e in ests])
        return np.array(out)

    def get_feature_names_out(self, input_features=None):
        return np.array(["lp_norm"] + [f"besov_total_{a}" for a in self.alphas], dtype=object)
