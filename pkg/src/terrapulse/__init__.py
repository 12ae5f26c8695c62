"""Simulation of electromagnetic wave and pulse propagation over lossy terrain.

Four solver pipelines share one set of physical building blocks:

* ``pe``        -- monochromatic parabolic-equation marching solver,
* ``synthesis`` -- pulse construction by spectral superposition of PE runs,
* ``tdpe``      -- time-domain parabolic equation in the traveling frame,
* ``hybrid``    -- asymptotic two-term transient built from two PE runs.

``cli`` provides the batch front end (``terrapulse run|validate|compare-reflection``).
"""

__version__ = "0.1.0"
