"""Post-processing figures for mtsph CSV output.

Reads the solver's `timeseries.csv` / `profiles.csv` files (the
documented external interface) and renders the benchmark-style
figures: force-displacement, neck-radius evolution, bending-amplitude
profiles, kinetic-energy decay and iteration-count histories.
"""

__version__ = "0.1.0"
