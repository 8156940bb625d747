"""Uniform cell-centred grid on the unit square with slip-wall ghost cells."""
import numpy as np


class Grid2D:
    """Colocated finite-volume grid; all fields live at cell centres.

    Slip walls are imposed through one layer of ghost cells: scalars and the
    tangential velocity reflect evenly, the normal velocity reflects oddly.
    """

    def __init__(self, nx, ny=None):
        self.nx = int(nx)
        self.ny = int(ny) if ny is not None else int(nx)
        self.hx = 1.0 / self.nx
        self.hy = 1.0 / self.ny
        self.x = (np.arange(self.nx) + 0.5) * self.hx
        self.y = (np.arange(self.ny) + 0.5) * self.hy
        self.X, self.Y = np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def cell_volume(self):
        return self.hx * self.hy

    def integrate(self, f):
        return float(np.sum(f) * self.hx * self.hy)

    def l2_norm(self, f):
        return float(np.sqrt(np.sum(np.asarray(f) ** 2) * self.hx * self.hy))

    def scalar_ghost(self, f):
        """Pad with even-reflection ghosts (zero normal gradient)."""
        return np.pad(f, ((1, 1), (1, 1)), mode="edge")

    def velocity_ghost(self, u):
        """Pad (nx, ny, 2) velocity with slip ghosts."""
        g = np.pad(u, ((1, 1), (1, 1), (0, 0)), mode="edge")
        g[0, :, 0] = -g[1, :, 0]
        g[-1, :, 0] = -g[-2, :, 0]
        g[:, 0, 1] = -g[:, 1, 1]
        g[:, -1, 1] = -g[:, -2, 1]
        return g

    def velocity_gradient(self, u):
        """Cell-centred Jacobian J[..., a, b] = du_a/dx_b with slip ghosts."""
        g = self.velocity_ghost(u)
        J = np.empty((self.nx, self.ny, 2, 2))
        J[:, :, :, 0] = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2.0 * self.hx)
        J[:, :, :, 1] = (g[1:-1, 2:] - g[1:-1, :-2]) / (2.0 * self.hy)
        return J

    def divergence(self, u):
        J = self.velocity_gradient(u)
        return J[:, :, 0, 0] + J[:, :, 1, 1]

    def scalar_gradient(self, f):
        """Central gradient of a scalar with even ghosts (zero normal flux)."""
        g = self.scalar_ghost(f)
        gx = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2.0 * self.hx)
        gy = (g[1:-1, 2:] - g[1:-1, :-2]) / (2.0 * self.hy)
        return np.stack([gx, gy], axis=-1)

    def face_normal_velocity(self, u):
        """Face-normal velocities (ufx, ufy), exactly zero on the walls."""
        ufx = np.zeros((self.nx + 1, self.ny))
        ufy = np.zeros((self.nx, self.ny + 1))
        ufx[1:-1, :] = 0.5 * (u[:-1, :, 0] + u[1:, :, 0])
        ufy[:, 1:-1] = 0.5 * (u[:, :-1, 1] + u[:, 1:, 1])
        return ufx, ufy
