"""Corporate-control network measures and gravity-model trade estimation.

Subpackages/modules:

* :mod:`gravnet.netcore` -- country registry, dyad CSV ingestion, trade and
  control adjacency matrices, top-edge classification
* :mod:`gravnet.measures` -- shortest control paths, communicability, the
  net-gain measure, and the per-dyad measure table
* :mod:`gravnet.econ` -- design matrices and the estimator suite (OLS,
  probit, Heckman two-step, PPML, zero-inflated PPML, 3SLS, reduced form)
* :mod:`gravnet.synth` -- seeded synthetic data generator and brute-force
  oracles
* :mod:`gravnet.cli` -- the ``gravnet`` command-line front end
"""

__version__ = "0.1.0"
