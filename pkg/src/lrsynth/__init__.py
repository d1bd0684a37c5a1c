"""Policy synthesis for MDPs under combined LTL, steady-state and long-run reward constraints."""
from .automata import Ldba, builtin_ldba, parse_hoa, serialize_hoa, validate_ldba, accepts_lasso
from .lp import LongRunSpec, Objective, SteadyState, build_lp, solve_lp
from .ltl import LassoWord, eval_lasso, parse_ltl
from .mdp import Mdp, parse_mdp, serialize_mdp, validate_mdp
from .mec import Mec, accepting_mecs, compute_mecs
from .policy import SynthesizedPolicy, extract_policy, project_policy
from .product import ProductMdp, build_product
from .verify import analyze_chain, check_spec, induced_chain, simulate

__version__ = "0.1.0"
