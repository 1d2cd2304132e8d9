import numpy as np
import pytest

from ncheeger.maxflow import FlowNetwork, min_cut


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # first min_cut call JIT-compiles the flow kernels; do it here so no
    # timed test pays the compilation cost
    net = FlowNetwork(
        n=2,
        u=np.array([0]),
        v=np.array([1]),
        cap=np.array([1.0]),
        cap_src=np.array([2.0, 0.0]),
        cap_snk=np.array([0.0, 2.0]),
    )
    min_cut(net)


def brute_min_cut(n, u, v, cap, cap_src, cap_snk, exact=True):
    """Exhaustive minimum s-t cut over all 2^n source sides.

    Returns (value, maximal side): source sides of minimum cuts are closed
    under union, so the union of all minimizers is the unique maximal one.
    """
    m = 1 << n
    bits = ((np.arange(m)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    cut = (~bits) @ cap_src + bits @ cap_snk
    if len(u):
        cut = cut + (bits[:, u] ^ bits[:, v]) @ cap
    best = float(cut.min())
    if exact:
        opt = bits[cut == cut.min()]
    else:
        opt = bits[cut <= best + 1e-9 * max(1.0, abs(best))]
    return best, opt.any(axis=0)


@pytest.fixture(scope="session")
def brute():
    return brute_min_cut
