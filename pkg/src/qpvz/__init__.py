"""Quantum Poincare-von Zeipel perturbation theory for discrete spectra."""
from .core import Basis, BasisError, HermiticityError, OperatorSeries, ad, commutator, make_basis, series_eval
from .averaging import average, check_homological, s_map
from .pvz import EigenReport, Expansion, ExpansionError, apply_T, eigen_report, expand, k_truncated, phi_truncated, residual_norms
from .models import Model, anharmonic, henon_heiles, ladder, load_model, random_model, save_model
from .oracle import SlopeFit, exact_eigen, fit_slope, match_states, rs_block_order2

__version__ = "0.1.0"
