"""Random generation, moment oracles and the Monte Carlo risk harness."""
from .quadrature import quadrature_log_normalizer, quadrature_mean
from .risk import RiskTable, SimConfig, run_risk
from .sampling import draw_mean_se, hiw_sample, make_rng, sample_data
from .truth import make_true_sigma, template_sigma
