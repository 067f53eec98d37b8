"""Single source of truth for every numeric default used across the package.

Each entry can be overridden per call through keyword arguments; the CLI
additionally accepts overrides through the ``"solver"`` section of a config
file.  The table is documented in the README.
"""

DEFAULTS = {
    # quadrature
    "quad_rtol": 1e-10,          # relative tolerance for adaptive quadrature
    "quad_atol": 1e-14,          # absolute floor for adaptive quadrature
    # assumption validation grids
    "f_samples": 64,             # log-spaced samples of f on (1e-6, 1e6)
    "f_grid_lo": 1e-6,
    "f_grid_hi": 1e6,
    "k_samples": 256,            # uniform samples of K on [0, 1 - 1e-6]
    "k_grid_margin": 1e-6,
    # divergence ladders
    "ko_ladder_hi": 1e12,        # top of the geometric ladder for the tail test
    "ko_ladder_lo_exp": 46,      # rungs b*2^-j down to ~1.4e-14 for the 0+ test
    "slope_eps": 0.05,           # half-width of the indecisive log-log slope band
    "slope_windows": 5,          # consecutive agreeing windows required
    "ratio_stab": 0.004,         # max spread of increment ratios to call them settled
    "beta_margin": 0.002,        # decisive margin on the refined decay order
    # Keller-Osserman profile
    "anchor_a": 1.0,
    "hinf_rungs": 60,            # H probed on a * 2^j, j = 0..hinf_rungs
    "hinf_window": 10,           # stabilization window: last rungs of the ladder
    "hinf_rel_tol": 1e-3,        # relative variation threshold for a finite limit
    "g_overflow": 1e300,         # overflow guard for the inverse-of-G integration
    "g_s_max": 30.0,             # default right end of the inverse table
    "ode_table_rtol": 1e-12,     # tolerance for the table-building integrations
    # local Picard solve
    "picard_nodes": 256,         # polynomial degree: 257 Chebyshev-Lobatto nodes
    "picard_inner_quad": 64,     # Gauss-Legendre points for the inner integral
    "picard_tol": 1e-12,         # sup-norm stop for successive iterates
    "picard_max_iter": 200,
    "picard_max_retries": 8,     # interval halvings when an iterate escapes
    "plan_safety": 0.9,          # safety factor applied to the interval length
    # continuation ODE solve
    "ode_rtol": 1e-11,
    "ode_atol": 1e-13,
    "ode_max_step": 0.025,
    "edge_step_fraction": 8.0,   # step ceiling (1 - r)/fraction near the boundary
    "blowup_threshold": 1e8,
    "reach_one_eps": 1e-8,       # ReachedOne when r >= 1 - reach_one_eps
    # envelope and certification
    "envelope_r_lo": 0.5,
    "envelope_r_hi": 1.0 - 1e-8,
    "envelope_grid": 4096,
    "envelope_drift": 1e3,
    "cert_radii": 200,
    "cert_uniform": 120,         # of which uniform on [0, 0.9]
    "cert_r_max": 1.0 - 1e-6,
    "k_max_halvings": 40,
    "k_max_doublings": 40,
    "cross_check_rtol": 1e-6,    # direct vs factored residual agreement
    # family demonstration
    "family_margin": 0.01,       # relative margin off the (w1(0), w2(0)) endpoints
    "sandwich_radii": (0.0, 0.25, 0.5, 0.75, 0.9, 0.99),
    "family_growth": 1e6,        # blow-up proxy: u exceeds this before r = 1
    "family_edge_value": 1e4,    # or u(1 - 1e-6) exceeds this
    "family_edge_r": 1.0 - 1e-6,
    # output
    "csv_digits": 17,
}


def get(name, override=None):
    """Return the default for ``name`` unless ``override`` is not None."""
    if override is not None:
        return override
    return DEFAULTS[name]


class overrides:
    """Context manager applying a temporary batch of default overrides."""

    def __init__(self, mapping):
        unknown = set(mapping) - set(DEFAULTS)
        if unknown:
            raise KeyError(f"unknown default(s): {sorted(unknown)}")
        self.mapping = dict(mapping)
        self._saved = {}

    def __enter__(self):
        for key, value in self.mapping.items():
            self._saved[key] = DEFAULTS[key]
            DEFAULTS[key] = value
        return self

    def __exit__(self, *exc):
        DEFAULTS.update(self._saved)
        return False
