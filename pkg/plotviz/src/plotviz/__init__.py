"""Render terrapulse output files to figures.

Couples to the simulation package only through its documented text
formats: field/station grids, probe waveforms, reflection tables, kernel
tables, and the run manifest.
"""

__version__ = "0.1.0"
