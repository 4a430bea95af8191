"""Seedable, splittable random streams for the samplers.

A stream is identified by a (seed, stream_id) pair which keys a Philox
counter-based bit generator, so distinct ids give statistically independent
streams and identical pairs reproduce draw sequences bit for bit. A stream
is single-owner: do not share one instance across threads; create one per
(replication, chain) instead.
"""

import numpy as np


class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Parameters
    ----------
    seed : int
        Master seed, 64-bit non-negative integer.
    stream_id : int
        Substream selector; distinct values yield independent streams.
    """

    def __init__(self, seed, stream_id=0):
        seed = int(seed)
        stream_id = int(stream_id)
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed, stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, stream_id):
        """New independent stream with the same seed and the given id."""
        return RngStream(self.seed, stream_id)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    # -- samplers ----------------------------------------------------------

    def uniform(self, low=0.0, high=1.0, size=None):
        if not low < high:
            raise ValueError("uniform requires low < high")
        return self._gen.uniform(low, high, size=size)

    def normal(self, mu=0.0, sigma=1.0, size=None):
        if np.any(np.asarray(sigma) <= 0):
            raise ValueError("normal requires sigma > 0")
        return self._gen.normal(mu, sigma, size=size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size=size)

    def exponential(self, rate=1.0, size=None):
        if np.any(np.asarray(rate) <= 0):
            raise ValueError("exponential requires rate > 0")
        return self._gen.exponential(1.0 / np.asarray(rate), size=size)

    def gamma(self, shape, rate=1.0, size=None):
        """Gamma(shape, rate) draw with density proportional to
        x^(shape-1) exp(-rate x)."""
        if np.any(np.asarray(shape) <= 0) or np.any(np.asarray(rate) <= 0):
            raise ValueError("gamma requires shape > 0 and rate > 0")
        return self._gen.gamma(shape, 1.0 / np.asarray(rate), size=size)

    def inverse_gamma(self, shape, rate, size=None):
        """IG(shape, rate) draw, density proportional to
        x^(-shape-1) exp(-rate / x); equals the reciprocal of a
        Gamma(shape, rate) draw with 'rate' acting as the IG scale."""
        shape = np.asarray(shape)
        rate = np.asarray(rate)
        if np.any(shape <= 0) or np.any(rate <= 0):
            raise ValueError("inverse_gamma requires shape > 0 and rate > 0")
        if size is None and (shape.ndim or rate.ndim):
            size = np.broadcast_shapes(shape.shape, rate.shape)
        return rate / self._gen.gamma(shape, 1.0, size=size)

    def inverse_gaussian(self, mean, shape, size=None):
        """Inverse-Gaussian (Wald) draw with the given mean and shape."""
        if np.any(np.asarray(mean) <= 0) or np.any(np.asarray(shape) <= 0):
            raise ValueError("inverse_gaussian requires mean > 0 and shape > 0")
        return self._gen.wald(mean, shape, size=size)
