"""Independent reference computations shared by the test modules."""

import numpy as np


def oriented_boundary_edges(mesh):
    """Boundary edges of a 2D mesh, ordered so the domain lies to their left."""
    owner = {}
    for c in mesh.cells:
        for k in range(3):
            a, b, opp = c[k], c[(k + 1) % 3], c[(k + 2) % 3]
            owner.setdefault(frozenset((a, b)), []).append((a, b, opp))
    edges = []
    for key, entries in owner.items():
        if len(entries) != 1:
            continue
        a, b, opp = entries[0]
        pa, pb, po = mesh.nodes[a], mesh.nodes[b], mesh.nodes[opp]
        t, w = pb - pa, po - pa
        if t[0] * w[1] - t[1] * w[0] < 0:
            a, b = b, a
        edges.append((a, b))
    return np.array(edges)


def shoelace_area(mesh, mapping, subdivisions=64):
    """Area of ``mapping(domain)`` from the mapped, finely subdivided boundary polyline."""
    E = oriented_boundary_edges(mesh)
    s = np.linspace(0.0, 1.0, subdivisions + 1)
    A, B = mesh.nodes[E[:, 0]], mesh.nodes[E[:, 1]]
    pts = A[:, None, :] * (1 - s)[None, :, None] + B[:, None, :] * s[None, :, None]
    Y = mapping(pts)
    x0, y0 = Y[:, :-1, 0], Y[:, :-1, 1]
    x1, y1 = Y[:, 1:, 0], Y[:, 1:, 1]
    return 0.5 * float(np.sum(x0 * y1 - x1 * y0))


def trapezoid_circle(f, radius=1.0, n=10_000):
    """Periodic trapezoid rule of ``f(points)`` over the circle of the given radius."""
    phi = 2 * np.pi * np.arange(n) / n
    pts = radius * np.column_stack([np.cos(phi), np.sin(phi)])
    return float(np.sum(f(pts)) * 2 * np.pi * radius / n)


def convergence_orders(hs, errors):
    hs, errors = np.asarray(hs, float), np.asarray(errors, float)
    return np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:])


def manufactured_thermoelastic(p, hole_radius=0.3):
    """Closed-form data for ``u* = (r^2 - r_h^2) (sin(pi x) sin(pi y), x y)`` with ``T* = T0 + 40 x y + 25 y``.

    Returns numpy callables ``u(x)``, ``grad_u(x)``, ``T(x)``, ``f(x)`` and
    ``g(x, normals)`` generated symbolically, where ``f = -div(sigma~(u*))``
    and ``g = sigma~(u*) n`` with the thermally corrected stress ``sigma~``.
    """
    import sympy as sp

    x, y = sp.symbols("x y", real=True)
    r2h = hole_radius**2
    bump = x**2 + y**2 - r2h
    u = sp.Matrix([bump * sp.sin(sp.pi * x) * sp.sin(sp.pi * y), bump * x * y / 2])
    T = p.T0 + 40 * x * y + 25 * y
    X = [x, y]
    grad = u.jacobian(X)
    eps = (grad + grad.T) / 2
    beta = p.rho_cte * (3 * p.lam + 2 * p.mu)
    sig = p.lam * eps.trace() * sp.eye(2) + 2 * p.mu * eps - beta * (T - p.T0) * sp.eye(2)
    f = -sp.Matrix([sum(sp.diff(sig[i, j], X[j]) for j in range(2)) for i in range(2)])
    def compile_(exprs):
        return [sp.lambdify((x, y), e, "numpy") for e in exprs]

    u_fn, g_fn, f_fn, s_fn = compile_(list(u)), compile_(list(grad)), compile_(list(f)), compile_(list(sig))
    T_fn = sp.lambdify((x, y), T, "numpy")

    def _vec(fns, pts):
        shape = pts.shape[:-1]
        return np.stack([np.broadcast_to(np.asarray(fn(pts[..., 0], pts[..., 1]), float), shape) for fn in fns], axis=-1)

    def u_of(pts):
        return _vec(u_fn, pts)

    def grad_of(pts):
        return _vec(g_fn, pts).reshape(pts.shape[:-1] + (2, 2))

    def T_of(pts):
        return np.broadcast_to(np.asarray(T_fn(pts[..., 0], pts[..., 1]), float), pts.shape[:-1])

    def f_of(pts, normals=None):
        return _vec(f_fn, pts)

    def g_of(pts, normals):
        S = _vec(s_fn, pts).reshape(pts.shape[:-1] + (2, 2))
        return np.einsum("...ij,...j->...i", S, normals)

    return u_of, grad_of, T_of, f_of, g_of


def l2_h1_errors(mesh, u_values, exact, exact_grad, n=4):
    """L2 and H1-seminorm errors of a P1 vector field against a smooth solution."""
    from lcfshape.fields import cell_gradients

    pts, w, bary = mesh.cell_quadrature_points(n)
    uh = np.einsum("qa,cak->cqk", bary, u_values[mesh.cells])
    e0 = np.sqrt(np.sum(w * np.sum((uh - exact(pts)) ** 2, axis=-1)))
    gh = cell_gradients(mesh, u_values)
    e1 = np.sqrt(np.sum(w * np.sum((gh[:, None] - exact_grad(pts)) ** 2, axis=(-2, -1))))
    return float(e0), float(e1)
