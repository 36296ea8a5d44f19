"""Twin metrics, K-structures and first-order (metric plus connection) verification.

Modules:

- ``matrix_core``: pointwise canonical forms and simultaneous congruence.
- ``scalar_root``: roots of f'(S) S - (n/4) f(S) = 0.
- ``dsl``, ``jets``, ``fields``: component expressions and exact Taylor jets.
- ``tensor_calc``: Christoffel symbols, curvature and K-structure identities.
- ``product_structures``: products, warped products and their almost-product structure.
- ``antikahler``: holomorphic metrics, realification and anti-Kähler checks.
- ``palatini_pipeline``: assembly and verification of the Euler-Lagrange system.
- ``config``, ``suites``, ``report``, ``cli``: the batch front end.
"""

__version__ = "0.1.0"
