"""Modelling and analysis toolkit for dispersively read-out transmon devices.

Subpackages and modules:

* ``dispersive``, ``device``: closed-form dispersive relations and the device model.
* ``synth``: synthetic traces, RB shot records, IQ shots and transmon dynamics.
* ``freq``: spectral frequency estimation.
* ``fits``: least-squares fitters.
* ``crosstalk``: selectivity estimation and parasitic-coupling bounds.
* ``rb_analysis``: standard, correlated and leakage RB analysis.
* ``band``: plasma-metamaterial enclosure model.
"""
__version__ = "0.1.0"
