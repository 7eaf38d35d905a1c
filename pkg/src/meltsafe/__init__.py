"""Moving-boundary melt simulation with safety-filtered heat actuation.

Module map:

- core:         material properties, derived constants, grids, states, quadrature
- solver:       one-phase front-fixed solver and the traveling-wave oracle
- two_phase:    liquid+solid solver with a far-wall disturbance flux
- cbf:          barrier outputs (energy deficit, flux, backstepping combinations)
- control:      regulating laws, operator-input filters, gain/assumption validation
- verification: safety monitor, decay metrics, analytic barrier oracle, reports
- config:       flat key-value scenario documents
- scenario:     closed-loop runner, CSV/JSON outputs
- service:      live operator sessions over WebSocket/TCP
"""

__version__ = "0.1.0"
