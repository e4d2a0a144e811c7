"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``.

The batch axis is vectorised; the Jacobi sweep itself stays sequential
over column pairs so that the rotation order matches the compiled code.
"""

import numpy as np


def jacobi_svd_batch(a, max_sweeps=60, eps=1e-15):
    """Batched one-sided Jacobi SVD, ``a[b] = u[b] @ diag(s[b]) @ v[b].T``.

    Returns ``(u, s, v, converged)``; see the compiled version for shapes.
    """
    u = np.array(a, dtype=np.float64, copy=True)
    if u.ndim != 3:
        raise ValueError(f"expected a (B, m, n) batch, got shape {u.shape}")
    nb, m, n = u.shape
    v = np.broadcast_to(np.eye(n), (nb, n, n)).copy()
    converged = np.zeros(nb, dtype=bool)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    # columns this small count as zero; wide matrices need it to terminate
    tiny = np.einsum("bij,bij->b", u, u) * eps * eps

    for _ in range(max_sweeps):
        active = ~converged
        if not active.any():
            break
        rotated = np.zeros(nb, dtype=bool)
        for p, q in pairs:
            up = u[:, :, p]
            uq = u[:, :, q]
            alpha = np.einsum("bi,bi->b", up, up)
            beta = np.einsum("bi,bi->b", uq, uq)
            gamma = np.einsum("bi,bi->b", up, uq)
            rot = (gamma != 0.0) & (np.abs(gamma) > eps * np.sqrt(alpha * beta))
            rot &= (alpha > tiny) & (beta > tiny)
            if not rot.any():
                continue
            rotated |= rot
            g = np.where(rot, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            root = np.sqrt(1.0 + zeta * zeta)
            t = np.where(zeta >= 0.0, 1.0, -1.0) / (np.abs(zeta) + root)
            t = np.where(rot, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c = c[:, None]
            s = s[:, None]
            new_p = c * up - s * uq
            new_q = s * up + c * uq
            u[:, :, p] = new_p
            u[:, :, q] = new_q
            vp = v[:, :, p].copy()
            vq = v[:, :, q]
            v[:, :, p] = c * vp - s * vq
            v[:, :, q] = s * vp + c * vq
        converged |= active & ~rotated

    sv = np.sqrt(np.einsum("bij,bij->bj", u, u))
    safe = np.where(sv > 0.0, sv, 1.0)
    u = np.where(sv[:, None, :] > 0.0, u / safe[:, None, :], u)
    order = np.argsort(-sv, axis=1, kind="stable")
    sv = np.take_along_axis(sv, order, axis=1)
    u = np.take_along_axis(u, order[:, None, :], axis=2)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return u, sv, v, converged
