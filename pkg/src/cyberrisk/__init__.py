"""Simulation and pricing toolkit for cyber risk.

Subpackages and modules:

* ``core``        portfolio structure, seed streams, event records
* ``frequency``   Poisson / Cox / Hawkes arrival processes
* ``severity``    claim-size families and composite distributions
* ``dependence``  copulas and frequency-severity coupling
* ``aggregation`` collective risk model and loss samples
* ``netepidemic`` graphs, spread processes, closures, network losses
* ``game``        interdependent-security investment game
* ``pricing``     risk measures, premium principles, systemic premiums
* ``cli``         scenario runner
"""

__version__ = "0.1.0"
