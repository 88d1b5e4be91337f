"""Backend selection for the time-stepping kernels.

``GASFLUX_BACKEND=numpy`` forces the vectorized numpy path; the default is
numba when it imports, numpy otherwise. Both advance the same staggered
scheme:

* drift: cell densities move by the flux divergence over ``dt``;
* kick: interior edge fluxes move by the pressure gradient with trapezoidal
  friction inverted in closed form, then every node's pressure is solved so
  the pipe-end fluxes satisfy the junction balance exactly.

Fluxes are kept half a step ahead of densities (leapfrog).
"""

from __future__ import annotations

import logging
import os

import numpy as np

from . import _numpy

log = logging.getLogger(__name__)

STATUS_OK = 0
STATUS_BAD_DENSITY = 1
STATUS_BAD_PRESSURE = 2


def _want_numba() -> bool:
    return os.environ.get("GASFLUX_BACKEND", "numba").strip().lower() != "numpy"


try:
    if _want_numba():
        from . import _numba
    else:
        _numba = None
except ImportError:  # pragma: no cover - numba is an optional accelerator
    log.warning("numba unavailable, using numpy kernels")
    _numba = None


def backend_name() -> str:
    return "numba" if _numba is not None else "numpy"


class Stepper:
    """Binds a layout, EOS parameters and a boundary table to one backend."""

    def __init__(self, layout, props, bc, backend: str | None = None):
        self.layout = layout
        self.props = props
        self.bc = bc
        self.RT = props.RT
        self.b = props.cnga_b
        self.p_atm = props.p_atm
        backend = backend or backend_name()
        if backend == "numba" and _numba is None:
            raise RuntimeError("numba backend requested but not available")
        self.backend = backend
        self._np = _numpy.NumpyKernel(layout, self.RT, self.b, self.p_atm)
        # out: last injection rate, failing index, max residual, injected mass
        self.out = np.zeros(4)

    def _args(self):
        lay = self.layout
        return (lay.cell_start, lay.dx, lay.diameter, lay.friction, lay.area,
                lay.inc_ptr, lay.inc_pipe, lay.inc_side,
                float(self.bc.t0), float(self.bc.dt), self.bc.values, bool(self.bc.linear),
                self.RT, self.b, self.p_atm, self.out)

    def kick(self, rho, phi, p_node, rho_node, dt, t_target) -> int:
        if self.backend == "numba":
            return int(_numba.kick(rho, phi, p_node, rho_node, float(dt), float(t_target),
                                   *self._args()))
        return self._np.kick(rho, phi, p_node, rho_node, dt, t_target, self.bc, self.out)

    def advance(self, rho, phi, p_node, rho_node, n_steps, dt, t):
        if self.backend == "numba":
            status, t = _numba.advance(rho, phi, p_node, rho_node, int(n_steps), float(dt),
                                       float(t), *self._args())
            return int(status), t
        return self._np.advance(rho, phi, p_node, rho_node, n_steps, dt, t, self.bc, self.out)
